"""Two-sided Skorohod reflection of piecewise-linear paths, and barrier strategies."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .engine import Point, Strategy, StrategyRun
from .model import DomainError, GameParams
from .paths import MonotonePath, Path


class _Reflector:
    """Incremental solution of the Skorohod problem on ``[a, b]``.

    Boundary hits inside a linear piece are resolved exactly and emitted as
    extra points, so the output is piecewise linear without discretization.
    """

    __slots__ = ("a", "b", "phi", "e1", "e2")

    def __init__(self, a: float, b: float):
        self.a, self.b = a, b
        self.phi = 0.0
        self.e1 = 0.0
        self.e2 = 0.0

    def start(self, w0: float) -> List[tuple]:
        """Points ``(t, phi, eta1, eta2)`` at time zero for ``omega(0) = w0``."""
        out = [(0.0, w0, 0.0, 0.0)]
        self.phi = w0
        if w0 > self.b:
            self.e2 = w0 - self.b
            self.phi = self.b
        elif w0 < self.a:
            self.e1 = self.a - w0
            self.phi = self.a
        if self.phi != w0:
            out.append((0.0, self.phi, self.e1, self.e2))
        return out

    def jump(self, t: float, d: float) -> tuple:
        q = self.phi + d
        if q > self.b:
            self.e2 += q - self.b
            q = self.b
        elif q < self.a:
            self.e1 += self.a - q
            q = self.a
        self.phi = q
        return (t, q, self.e1, self.e2)

    def drift(self, t0: float, dt: float, s: float) -> List[tuple]:
        t1 = t0 + dt
        a, b, p = self.a, self.b, self.phi
        if s > 0:
            if p >= b:
                self.e2 += s * dt
                return [(t1, p, self.e1, self.e2)]
            th = (b - p) / s
            if th >= dt:
                self.phi = p + s * dt
                return [(t1, self.phi, self.e1, self.e2)]
            self.phi = b
            hit = (t0 + th, b, self.e1, self.e2)
            self.e2 += s * (dt - th)
            return [hit, (t1, b, self.e1, self.e2)]
        if s < 0:
            if p <= a:
                self.e1 -= s * dt
                return [(t1, p, self.e1, self.e2)]
            th = (a - p) / s
            if th >= dt:
                self.phi = p + s * dt
                return [(t1, self.phi, self.e1, self.e2)]
            self.phi = a
            hit = (t0 + th, a, self.e1, self.e2)
            self.e1 -= s * (dt - th)
            return [hit, (t1, a, self.e1, self.e2)]
        return [(t1, p, self.e1, self.e2)]


@dataclass(frozen=True)
class ReflectionTriple:
    phi: Path
    eta1: MonotonePath
    eta2: MonotonePath
    a: float
    b: float


def reflect(omega: Path, a: float, b: float) -> ReflectionTriple:
    """Solve the Skorohod problem on ``[a, b]`` for a piecewise-linear ``omega``.

    ``omega.v[0]`` is taken as ``omega(0-)``; an initial value outside
    ``[a, b]`` is pushed to the nearest end by a jump of ``eta1`` or ``eta2``
    at time zero.
    """
    if not a < b:
        raise DomainError("reflection interval needs a < b")
    return _reflect(omega, a, b)


def _reflect(omega: Path, a: float, b: float) -> ReflectionTriple:
    ref = _Reflector(a, b)
    t, v = omega.t, omega.v
    pts = ref.start(float(v[0]))
    for k in range(t.size - 1):
        dt = t[k + 1] - t[k]
        dv = v[k + 1] - v[k]
        if dt == 0:
            if dv != 0:
                pts.append(ref.jump(float(t[k]), float(dv)))
        else:
            pts.extend(ref.drift(float(t[k]), float(dt), float(dv / dt)))
    arr = np.array(pts)
    return ReflectionTriple(Path(arr[:, 0], arr[:, 1]), MonotonePath(arr[:, 0], arr[:, 2]),
                            MonotonePath(arr[:, 0], arr[:, 3]), a, b)


class _BarrierRun(StrategyRun):
    def __init__(self, x: float, beta: float, y: float):
        self.x = x
        self.y = y
        self.ref = _Reflector(0.0, beta)

    def open(self) -> List[Point]:
        return [(t, e1, e2) for t, _, e1, e2 in self.ref.start(self.x)]

    def advance(self, t0, dt, s1, s2) -> List[Point]:
        return [(t, e1, e2) for t, _, e1, e2 in self.ref.drift(t0, dt, self.y + s1 - s2)]


class BarrierStrategy(Strategy):
    """Keeps the state in ``[0, beta]`` with the minimal idling/rejection,
    by reflecting the free dynamics ``x + y t + psi1 - psi2``."""

    def __init__(self, beta: float):
        self.beta = beta
        self.name = f"barrier:{beta:.17g}"

    def start(self, x: float, params: GameParams) -> StrategyRun:
        if not 0.0 <= x <= params.D:
            raise DomainError(f"x={x} outside [0, {params.D}]")
        return _BarrierRun(x, self.beta, params.y)


def barrier_strategy(beta: float, params: GameParams) -> BarrierStrategy:
    if not 0.0 <= beta <= params.D:
        raise DomainError(f"barrier level {beta} outside [0, {params.D}]")
    return BarrierStrategy(beta)


def free_dynamics(x: float, params: GameParams, psi1: Path, psi2: Path,
                  horizon: float | None = None) -> Path:
    """``x + y t + psi1 - psi2``, the input the barrier strategy reflects."""
    from .paths import combine
    return combine([psi1, psi2], [1.0, -1.0], const=x, drift=params.y, horizon=horizon)
