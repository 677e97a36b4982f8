"""Game parameters, dynamics and cost functionals of the one-dimensional game."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .paths import MonotonePath, Path, action, combine, post_zero_values


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class NotInQError(ValueError):
    """The dynamics never reach zero, so the hitting-time cost is undefined."""


ADMISSIBLE_TOL = 1e-9

# 5-point Gauss-Legendre on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class HoldingCost:
    """Holding cost ``h`` on the workload axis.

    ``kind`` is one of ``"linear"`` (``a*x``), ``"power"`` (``a*x**p``) or
    ``"piecewise_linear_convex"`` (interpolates ``knots``, a sequence of
    ``(x, h(x))`` pairs starting at ``(0, 0)``, extended beyond the last knot
    with the last slope).  Outside ``[0, D]`` the cost is extended oddly
    (power) or linearly (piecewise linear) so that inadmissible paths can still
    be priced.
    """

    kind: str
    a: float = 1.0
    p: float = 1.0
    knots: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind == "linear":
            if not self.a > 0:
                raise ValueError("linear holding cost needs a > 0")
        elif self.kind == "power":
            if not self.a > 0:
                raise ValueError("power holding cost needs a > 0")
            if not self.p >= 1:
                raise ValueError("power holding cost needs p >= 1")
        elif self.kind == "piecewise_linear_convex":
            k = tuple((float(x), float(v)) for x, v in self.knots)
            if len(k) < 2 or k[0] != (0.0, 0.0):
                raise ValueError("knots must start at (0, 0) and have at least two points")
            xs = np.array([x for x, _ in k])
            vs = np.array([v for _, v in k])
            if np.any(np.diff(xs) <= 0):
                raise ValueError("knot abscissae must be strictly increasing")
            slopes = np.diff(vs) / np.diff(xs)
            if np.any(slopes <= 0):
                raise ValueError("knot slopes must be positive")
            if np.any(np.diff(slopes) < -1e-12 * np.max(slopes)):
                raise ValueError("knot slopes must be nondecreasing (convex)")
            object.__setattr__(self, "knots", k)
        else:
            raise ValueError(f"unknown holding cost type {self.kind!r}")

    @classmethod
    def linear(cls, a: float = 1.0) -> "HoldingCost":
        return cls("linear", a=a)

    @classmethod
    def power(cls, a: float, p: float) -> "HoldingCost":
        return cls("power", a=a, p=p)

    @classmethod
    def piecewise_linear(cls, knots: Sequence[Tuple[float, float]]) -> "HoldingCost":
        return cls("piecewise_linear_convex", knots=tuple(map(tuple, knots)))

    @property
    def _xs(self) -> np.ndarray:
        return np.array([x for x, _ in self.knots])

    @property
    def _vs(self) -> np.ndarray:
        return np.array([v for _, v in self.knots])

    @property
    def _slopes(self) -> np.ndarray:
        return np.diff(self._vs) / np.diff(self._xs)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            out = self.a * x
        elif self.kind == "power":
            out = self.a * np.sign(x) * np.abs(x) ** self.p
        else:
            xs, vs, sl = self._xs, self._vs, self._slopes
            out = np.interp(x, xs, vs)
            out = np.where(x < 0, sl[0] * x, out)
            out = np.where(x > xs[-1], vs[-1] + sl[-1] * (x - xs[-1]), out)
        return float(out) if out.ndim == 0 else out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            out = np.full_like(x, self.a)
        elif self.kind == "power":
            out = self.a * self.p * np.abs(x) ** (self.p - 1)
        else:
            xs, sl = self._xs, self._slopes
            i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, sl.size - 1)
            out = sl[i]
        return float(out) if np.ndim(out) == 0 else out

    def antiderivative(self, x):
        """``H`` with ``H' = h`` and ``H(0) = 0``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            out = 0.5 * self.a * x * x
        elif self.kind == "power":
            out = self.a * np.abs(x) ** (self.p + 1) / (self.p + 1)
        else:
            xs, vs, sl = self._xs, self._vs, self._slopes
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (vs[1:] + vs[:-1]) * np.diff(xs))])
            i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, sl.size - 1)
            i = np.where(x < 0, 0, i)
            dx = x - xs[i]
            out = cum[i] + vs[i] * dx + 0.5 * sl[i] * dx * dx
        return float(out) if out.ndim == 0 else out

    def inverse(self, v: float) -> float:
        if self.kind == "linear":
            return v / self.a
        if self.kind == "power":
            return math.copysign(abs(v / self.a) ** (1.0 / self.p), v)
        xs, vs, sl = self._xs, self._vs, self._slopes
        if v < 0:
            return v / sl[0]
        if v > vs[-1]:
            return xs[-1] + (v - vs[-1]) / sl[-1]
        return float(np.interp(v, vs, xs))

    def lipschitz(self, D: float) -> float:
        """Lipschitz constant of ``h`` on ``[0, D]``."""
        if self.kind == "linear":
            return self.a
        if self.kind == "power":
            return self.a * self.p * D ** (self.p - 1)
        xs, sl = self._xs, self._slopes
        active = xs[:-1] < D
        return float(np.max(sl[active])) if np.any(active) else float(sl[0])

    @property
    def is_convex(self) -> bool:
        return True  # every supported variant is convex by construction

    def segment_integral(self, h0, h1, dt):
        """Exact ``int_0^dt h(h0 + (h1-h0) s/dt) ds`` for arrays of segments."""
        h0 = np.asarray(h0, dtype=float)
        h1 = np.asarray(h1, dtype=float)
        dt = np.asarray(dt, dtype=float)
        if self.kind == "linear":
            return self.a * 0.5 * (h0 + h1) * dt
        if self.kind == "piecewise_linear_convex":
            return self._pwl_segment_integral(h0, h1, dt)
        dphi = h1 - h0
        scale = np.abs(h0) + np.abs(h1)
        wide = np.abs(dphi) > 1e-3 * scale
        safe = np.where(wide, dphi, 1.0)
        exact = (self.antiderivative(h1) - self.antiderivative(h0)) / safe * dt
        nodes = h0[..., None] + dphi[..., None] * _GL_X
        gauss = np.sum(self(nodes) * _GL_W, axis=-1) * dt
        return np.where(wide, exact, gauss)

    def _pwl_segment_integral(self, h0, h1, dt):
        # trapezoid is exact on each piece; split segments that straddle a knot
        out = 0.5 * (self(h0) + self(h1)) * dt
        inner = self._xs[1:-1]
        if inner.size == 0:
            return out
        lo, hi = np.minimum(h0, h1), np.maximum(h0, h1)
        straddle = np.any((inner[None, :] > lo[:, None]) & (inner[None, :] < hi[:, None]), axis=1) \
            if out.ndim else np.any((inner > lo) & (inner < hi))
        if not np.any(straddle):
            return out
        out = np.array(out, dtype=float, ndmin=1)
        a0, a1, adt = (np.atleast_1d(h0), np.atleast_1d(h1), np.atleast_1d(dt))
        for k in np.flatnonzero(np.atleast_1d(straddle)):
            x0, x1 = a0[k], a1[k]
            cuts = inner[(inner > min(x0, x1)) & (inner < max(x0, x1))]
            pts = np.sort(np.concatenate([[x0, x1], cuts]))
            if x1 < x0:
                pts = pts[::-1]
            w = np.abs(np.diff(pts)) / abs(x1 - x0) * adt[k]
            vals = self(pts)
            out[k] = float(np.sum(0.5 * (vals[1:] + vals[:-1]) * w))
        return out if np.ndim(h0) else float(out[0])

    def to_json(self) -> dict:
        if self.kind == "linear":
            return {"type": "linear", "a": self.a}
        if self.kind == "power":
            return {"type": "power", "a": self.a, "p": self.p}
        return {"type": "piecewise_linear_convex", "knots": [list(k) for k in self.knots]}

    @classmethod
    def from_json(cls, data: dict) -> "HoldingCost":
        kind = data.get("type")
        if kind == "linear":
            return cls.linear(float(data["a"]))
        if kind == "power":
            return cls.power(float(data["a"]), float(data["p"]))
        if kind == "piecewise_linear_convex":
            return cls.piecewise_linear(data["knots"])
        raise ValueError(f"field 'h.type': unknown holding cost type {kind!r}")


@dataclass(frozen=True)
class GameParams:
    """Constants of the one-dimensional game.

    ``y`` is the drift, ``c1``/``c2`` the arrival/service rate constants of the
    penalty, ``r`` the price of one unit of rejection and ``D`` the buffer.
    """

    y: float
    c1: float
    c2: float
    r: float
    D: float
    h: HoldingCost = field(default_factory=HoldingCost.linear)

    def __post_init__(self):
        for name in ("c1", "c2", "r", "D"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not math.isfinite(self.y):
            raise ValueError("y must be finite")

    @property
    def c(self) -> float:
        return 1.0 / (1.0 / self.c1 + 1.0 / self.c2)

    def replace(self, **kw) -> "GameParams":
        d = dict(y=self.y, c1=self.c1, c2=self.c2, r=self.r, D=self.D, h=self.h)
        d.update(kw)
        return GameParams(**d)

    def to_json(self) -> dict:
        return {"y": self.y, "c1": self.c1, "c2": self.c2, "r": self.r, "D": self.D,
                "h": self.h.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "GameParams":
        kw = {}
        for name in ("y", "c1", "c2", "r", "D"):
            if name not in data:
                raise ValueError(f"missing field {name!r}")
            try:
                kw[name] = float(data[name])
            except (TypeError, ValueError):
                raise ValueError(f"field {name!r} must be a number") from None
        if "h" not in data:
            raise ValueError("missing field 'h'")
        return cls(h=HoldingCost.from_json(data["h"]), **kw)


def reference_params(name: str) -> GameParams:
    """The reference instances R1, R2, R3 (and R4, the capped-boundary case)."""
    base = GameParams(y=-2.0, c1=0.5, c2=0.5, r=1.0, D=2.0, h=HoldingCost.linear(1.0))
    drifts = {"R1": -2.0, "R2": -0.5, "R3": -1.5, "R4": -10.0}
    if name not in drifts:
        raise KeyError(f"unknown reference instance {name!r}")
    return base.replace(y=drifts[name])


@dataclass(frozen=True)
class CostBreakdown:
    holding: float
    rejection: float
    penalty: float
    admissible: bool = True

    @property
    def total(self) -> float:
        return self.holding + self.rejection - self.penalty

    def to_json(self) -> dict:
        return {"holding": self.holding, "rejection": self.rejection,
                "penalty": self.penalty, "total": self.total,
                "admissible": self.admissible}


@dataclass(frozen=True)
class StatePath:
    path: Path
    D: float
    admissible: bool

    @classmethod
    def build(cls, path: Path, D: float) -> "StatePath":
        return cls(path, D, first_violation(path, D) is None)

    def __call__(self, s):
        return self.path(s)


def first_violation(phi: Path, D: float, tol: float = ADMISSIBLE_TOL) -> Optional[float]:
    """First time ``phi`` leaves ``[0, D]`` (up to ``tol``), or ``None``."""
    vals = post_zero_values(phi)
    times = phi.t[phi.t.size - vals.size:]
    bad = (vals < -tol) | (vals > D + tol)
    if not np.any(bad):
        return None
    k = int(np.argmax(bad))
    if k == 0 or times[k] == times[k - 1]:
        return float(times[k])
    # linear segment from an admissible point: solve for the exit time
    v0, v1 = vals[k - 1], vals[k]
    level = -tol if v1 < -tol else D + tol
    return float(times[k - 1] + (times[k] - times[k - 1]) * (level - v0) / (v1 - v0))


def rate_penalty(psi1: Path, psi2: Path, T: float, params: GameParams) -> float:
    """``c1 * int (psi1')^2 + c2 * int (psi2')^2`` over ``[0, T]``, exact."""
    if T < 0:
        raise DomainError("T must be nonnegative")
    return params.c1 * action(psi1, T) + params.c2 * action(psi2, T)


def _zero() -> MonotonePath:
    return MonotonePath.zero()


def assemble_dynamics(x: float, params: GameParams, psi: Tuple[Path, Path],
                      zeta: Optional[Path] = None, rho: Optional[Path] = None,
                      horizon: Optional[float] = None) -> StatePath:
    """``phi = x + y t + psi1 - psi2 + zeta - rho`` on the union of breakpoints."""
    if not 0.0 <= x <= params.D:
        raise DomainError(f"initial condition x={x} outside [0, {params.D}]")
    zeta = zeta if zeta is not None else _zero()
    rho = rho if rho is not None else _zero()
    phi = combine([psi[0], psi[1], zeta, rho], [1.0, -1.0, 1.0, -1.0],
                  const=x, drift=params.y, horizon=horizon)
    return StatePath.build(phi, params.D)


def running_cost(x: float, params: GameParams, T: float, psi: Tuple[Path, Path],
                 zeta: Optional[Path] = None, rho: Optional[Path] = None) -> CostBreakdown:
    """Cost ``int_0^T h(phi) + r rho(T) - I(T, psi)`` of the original game."""
    if T < 0:
        raise DomainError("T must be nonnegative")
    rho = rho if rho is not None else _zero()
    state = assemble_dynamics(x, params, psi, zeta, rho, horizon=T)
    phi = state.path.truncate(T)
    _, dt, v0, v1 = phi.segments()
    holding = float(np.sum(params.h.segment_integral(v0, v1, dt))) if dt.size else 0.0
    return CostBreakdown(
        holding=holding,
        rejection=params.r * rho(T),
        penalty=rate_penalty(psi[0], psi[1], T, params),
        admissible=first_violation(phi, params.D) is None,
    )


HIT_TOL = 1e-12


def first_hit(phi: Path, drift_after: float) -> float:
    """First time ``phi`` reaches zero; beyond its horizon ``phi`` moves with
    slope ``drift_after``."""
    vals = post_zero_values(phi)
    times = phi.t[phi.t.size - vals.size:]
    tol = HIT_TOL * max(1.0, abs(vals[0]))
    hit = vals <= tol
    if np.any(hit):
        k = int(np.argmax(hit))
        if k == 0 or times[k] == times[k - 1] or vals[k] > 0:
            return float(times[k])
        v0, v1 = vals[k - 1], vals[k]
        return float(times[k - 1] + (times[k] - times[k - 1]) * v0 / (v0 - v1))
    if drift_after < 0:
        return float(times[-1] + vals[-1] / -drift_after)
    return math.inf


def hitting_time(x: float, params: GameParams, psi: Tuple[Path, Path],
                 rho: Optional[Path] = None) -> float:
    """First time ``x + y t + psi1 - psi2 - rho`` reaches zero (``inf`` if never)."""
    state = assemble_dynamics(x, params, psi, None, rho)
    return first_hit(state.path, params.y)


def hitting_cost(x: float, params: GameParams, psi: Tuple[Path, Path],
                 rho: Optional[Path] = None) -> CostBreakdown:
    """Cost of the hitting-time game: the running cost stopped at the first hit of 0."""
    tau = hitting_time(x, params, psi, rho)
    if not math.isfinite(tau):
        raise NotInQError("dynamics never reach 0: control is not in Q[x, alpha]")
    return running_cost(x, params, tau, psi, None, rho)
