"""Free boundary, explicit value function and Bellman-equation checks."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .model import DomainError, GameParams

KINK_TOL = 1e-9
RADICAND_FLOOR = -1e-14


class InfiniteValueError(ValueError):
    def __init__(self, params: GameParams):
        super().__init__(
            f"value infinite: -y < r/(4c) (-y={-params.y:.17g}, r/(4c)={params.r / (4 * params.c):.17g})")


class Finiteness(str, Enum):
    FINITE = "Finite"
    INFINITE = "Infinite"


class BoundaryCase(str, Enum):
    INTERIOR_ROOT = "InteriorRoot"
    CAPPED_AT_D = "CappedAtD"
    INFINITE_VALUE = "InfiniteValue"


class Side(str, Enum):
    LEFT = "Left"
    RIGHT = "Right"


def finiteness(params: GameParams) -> Finiteness:
    """Finite iff ``-y >= r/(4c)``."""
    if -params.y >= params.r / (4 * params.c):
        return Finiteness.FINITE
    return Finiteness.INFINITE


def _require_finite(params: GameParams) -> None:
    if finiteness(params) is Finiteness.INFINITE:
        raise InfiniteValueError(params)


@dataclass(frozen=True)
class FreeBoundary:
    beta0: float
    case: BoundaryCase
    differentiable_at_beta0: bool
    gL: float
    gR: float

    def to_json(self) -> dict:
        return {"beta0": self.beta0, "case": self.case.value,
                "differentiable_at_beta0": self.differentiable_at_beta0,
                "gL": self.gL, "gR": self.gR}


def _radicand(params: GameParams, u):
    rad = params.y ** 2 - params.h(u) / params.c
    if np.any(rad < RADICAND_FLOOR):
        raise ArithmeticError("negative radicand below the free boundary")
    return np.maximum(rad, 0.0)


def _inner_slope(params: GameParams, u):
    return 2 * params.c * (-params.y - np.sqrt(_radicand(params, u)))


def free_boundary(params: GameParams) -> FreeBoundary:
    """Threshold ``beta0`` above which the minimizer rejects."""
    _require_finite(params)
    c, r, y, h, D = params.c, params.r, params.y, params.h, params.D
    k = r * r / (4 * c) + r * y
    if k < -h(D):
        beta0, case = D, BoundaryCase.CAPPED_AT_D
    else:
        beta0 = min(max(h.inverse(-k), 0.0), D)
        case = BoundaryCase.INTERIOR_ROOT
    nondiff = beta0 < D and (r / (4 * c) <= -y < min(r / (4 * c) + h(D) / r, r / (2 * c)))
    gL = float(_inner_slope(params, beta0))
    gR = r if beta0 < D else gL
    return FreeBoundary(beta0, case, not nondiff, gL, gR)


def bellman_ops(params: GameParams, p):
    """``(L p, H p)`` with ``L p = -p^2/(4c) - y p`` and ``H p = p - r``."""
    p = np.asarray(p, dtype=float)
    Lp = -p * p / (4 * params.c) - params.y * p
    Hp = p - params.r
    if Lp.ndim == 0:
        return float(Lp), float(Hp)
    return Lp, Hp


def _g_inner_closed(params: GameParams, x):
    """Closed-form integral of the inner slope for linear ``h = a x``."""
    c, y, a = params.c, params.y, params.h.a
    R = np.maximum(y * y - a * np.asarray(x, dtype=float) / c, 0.0)
    return -2 * c * y * x + (4 * c * c / (3 * a)) * (R ** 1.5 - abs(y) ** 3)


def _g_inner_quad(params: GameParams, x: float) -> float:
    if x == 0.0:
        return 0.0
    val, _ = integrate.quad(lambda u: float(_inner_slope(params, u)), 0.0, x,
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def value_g(params: GameParams, x, method: str = "auto"):
    """Explicit value ``g(x)``; ``method`` is ``"auto"``, ``"closed"`` or ``"quad"``."""
    fb = free_boundary(params)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((xs < 0) | (xs > params.D)):
        raise DomainError(f"x outside [0, {params.D}]")
    if method == "auto":
        method = "closed" if params.h.kind == "linear" else "quad"
    if method == "closed" and params.h.kind != "linear":
        raise ValueError("closed form needs a linear holding cost")

    def inner(u):
        if method == "closed":
            return _g_inner_closed(params, u)
        return np.array([_g_inner_quad(params, float(ui)) for ui in np.atleast_1d(u)])

    below = np.minimum(xs, fb.beta0)
    out = np.asarray(inner(below), dtype=float)
    above = xs > fb.beta0
    if np.any(above):
        g_beta = float(np.asarray(inner(np.array([fb.beta0])))[0])
        out = np.where(above, g_beta + params.r * (xs - fb.beta0), out)
    return float(out[0]) if np.ndim(x) == 0 else out


def value_grad(params: GameParams, x, side: Side | str = Side.RIGHT):
    """``g'(x)``; at ``beta0`` (within ``KINK_TOL``) the one-sided derivative."""
    side = Side(side)
    fb = free_boundary(params)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((xs < 0) | (xs > params.D)):
        raise DomainError(f"x outside [0, {params.D}]")
    if side is Side.LEFT and np.any(xs == 0):
        raise DomainError("left derivative undefined at 0")
    at_kink = np.abs(xs - fb.beta0) <= KINK_TOL
    inner = _inner_slope(params, np.minimum(xs, fb.beta0))
    out = np.where(xs < fb.beta0, inner, params.r)
    out = np.where(at_kink, fb.gL if side is Side.LEFT else fb.gR, out)
    return float(out[0]) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class ValueTable:
    grid: np.ndarray
    g: np.ndarray
    gprime_left: np.ndarray
    gprime_right: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "g", "gprime_left", "gprime_right"])
        for row in zip(self.grid, self.g, self.gprime_left, self.gprime_right):
            w.writerow([f"{v:.17g}" for v in row])
        return buf.getvalue()


def value_table(params: GameParams, grid_size: int) -> ValueTable:
    if grid_size < 2:
        raise ValueError("grid size must be at least 2")
    grid = np.linspace(0.0, params.D, grid_size)
    g = value_g(params, grid)
    left = np.full(grid.size, np.nan)
    left[1:] = value_grad(params, grid[1:], Side.LEFT)
    right = value_grad(params, grid, Side.RIGHT)
    return ValueTable(grid, g, left, right)


@dataclass(frozen=True)
class BellmanReport:
    max_residual_inner: float   # max |L g' - h| on (0, beta0)
    max_H_inner: float          # max H g' on (0, beta0), should be <= 0
    max_residual_outer: float   # max |H g'| on (beta0, D)
    max_L_outer: float          # max L g' - h on (beta0, D), should be <= 0
    n_inner: int
    n_outer: int
    kink: bool
    gL: float
    gR: float

    @property
    def max_H_violation(self) -> float:
        return max(0.0, self.max_H_inner)

    @property
    def classical(self) -> bool:
        return not self.kink

    def passed(self, tol_inner: float = 1e-8, tol_exact: float = 1e-12) -> bool:
        return (self.max_residual_inner <= tol_inner and self.max_H_inner <= tol_exact
                and self.max_residual_outer <= tol_exact and self.max_L_outer <= tol_exact)

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "max_residual_inner", "max_H_inner", "max_residual_outer", "max_L_outer",
            "n_inner", "n_outer", "kink", "gL", "gR", "max_H_violation", "classical")}
        if self.n_outer == 0:
            d["note"] = "no points above beta0: g solves the equation classically"
        elif self.kink:
            d["note"] = "g'_L < g'_R at beta0: viscosity kink, subsolution test vacuous there"
        return d


def _nan_max(a: np.ndarray) -> float:
    return float(np.max(a)) if a.size else float("-inf")


def bellman_residual(params: GameParams, grid_size: int = 1001) -> BellmanReport:
    """Residuals of both branches of the Bellman equation for ``g`` on a grid
    of ``[0, D]`` with the end points and ``beta0`` removed."""
    fb = free_boundary(params)
    grid = np.linspace(0.0, params.D, grid_size)
    grid = grid[(grid > 0) & (grid < params.D) & (np.abs(grid - fb.beta0) > KINK_TOL)]
    inner = grid[grid < fb.beta0]
    outer = grid[grid > fb.beta0]
    Li, Hi = bellman_ops(params, value_grad(params, inner))
    Lo, Ho = bellman_ops(params, value_grad(params, outer))
    Li, Hi, Lo, Ho = map(np.atleast_1d, (Li, Hi, Lo, Ho))
    return BellmanReport(
        max_residual_inner=_nan_max(np.abs(Li - params.h(inner))) if inner.size else 0.0,
        max_H_inner=_nan_max(Hi),
        max_residual_outer=_nan_max(np.abs(Ho)) if outer.size else 0.0,
        max_L_outer=_nan_max(Lo - params.h(outer)),
        n_inner=int(inner.size), n_outer=int(outer.size),
        kink=fb.gL < fb.gR, gL=fb.gL, gR=fb.gR)


class SmoothedValue:
    """C^1 approximation ``g_delta`` of ``g`` around a kinked free boundary.

    ``g_delta = g`` up to ``x_delta``; on ``(x_delta, beta0]`` its slope is the
    chord ``l_delta`` from ``(beta0 - delta, g'(beta0 - delta))`` to
    ``(beta0, r)``; above ``beta0`` it is affine with slope ``r``.
    """

    def __init__(self, params: GameParams, delta: float, scan_points: int = 2001):
        fb = free_boundary(params)
        if fb.differentiable_at_beta0:
            raise ValueError("g is differentiable at beta0; no smoothing needed")
        if not 0 < delta < fb.beta0:
            raise DomainError("need 0 < delta < beta0")
        self.params = params
        self.delta = delta
        self.beta0 = fb.beta0
        r = params.r
        start = fb.beta0 - delta
        self.slope = (r - float(_inner_slope(params, start))) / delta
        self.x_delta = self._find_x_delta(scan_points)
        self.g_at_x = value_g(params, self.x_delta)
        self.g_at_beta0 = self.g_at_x + self._chord_integral(fb.beta0)

    def chord(self, x):
        return self.params.r - (self.beta0 - np.asarray(x, dtype=float)) * self.slope

    def _find_x_delta(self, n: int) -> float:
        lo = self.beta0 - self.delta
        xs = np.linspace(lo, self.beta0, n)
        gp = _inner_slope(self.params, xs)
        gp[-1] = free_boundary(self.params).gL
        f = self.chord(xs) - gp
        f[0] = 0.0
        nonpos = np.flatnonzero(f <= 0)
        k = int(nonpos[-1])
        if k == 0 or f[k] == 0.0:
            return float(xs[k])
        fn = lambda u: float(self.chord(u) - _inner_slope(self.params, u))
        return float(optimize.brentq(fn, xs[k], xs[k + 1], xtol=1e-15, rtol=4e-16))

    def _chord_integral(self, x):
        d = np.asarray(x, dtype=float) - self.x_delta
        return float(self.chord(self.x_delta)) * d + 0.5 * self.slope * d * d

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.where(xs <= self.x_delta, value_g(self.params, np.minimum(xs, self.x_delta)),
                       self.g_at_x + self._chord_integral(np.minimum(xs, self.beta0)))
        out = np.where(xs > self.beta0, self.g_at_beta0 + self.params.r * (xs - self.beta0), out)
        return float(out[0]) if np.ndim(x) == 0 else out

    def derivative(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        inner = _inner_slope(self.params, np.minimum(xs, self.x_delta))
        out = np.where(xs <= self.x_delta, inner, self.chord(xs))
        out = np.where(xs > self.beta0, self.params.r, out)
        return float(out[0]) if np.ndim(x) == 0 else out

    def table(self, grid_size: int = 1001) -> ValueTable:
        grid = np.linspace(0.0, self.params.D, grid_size)
        d = self.derivative(grid)
        return ValueTable(grid, self(grid), d, d)

    def sup_distance(self) -> float:
        """``sup |g_delta - g|``; the gap grows on ``[x_delta, beta0]`` and is
        constant above, so it is attained at ``beta0``."""
        return abs(self.g_at_beta0 - value_g(self.params, self.beta0))


def smooth_value(params: GameParams, delta: float) -> SmoothedValue:
    return SmoothedValue(params, delta)
