"""Strategies for the minimizing player and evaluation of both games."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .model import (CostBreakdown, DomainError, GameParams, NotInQError,
                    assemble_dynamics, first_hit, first_violation, running_cost)
from .paths import MonotonePath, Path, combine

Point = Tuple[float, float, float]  # (t, zeta, rho)


class InadmissibleStrategyError(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"strategy drives the state out of [0, D] at t={t:.17g}")
        self.time = t


class WitnessInapplicableError(ValueError):
    pass


class StrategyRun:
    """One causal play of a strategy.

    ``open()`` returns the output points at time zero (a leading
    ``(0, 0, 0)`` followed by the post-jump point when the strategy acts
    immediately).  ``advance(t0, dt, s1, s2)`` consumes the next piece of
    ``psi`` -- slopes ``s1``, ``s2`` on ``[t0, t0 + dt]`` -- and returns the
    output points on that piece, ending at ``t0 + dt``.
    """

    def open(self) -> List[Point]:
        raise NotImplementedError

    def advance(self, t0: float, dt: float, s1: float, s2: float) -> List[Point]:
        raise NotImplementedError


class Strategy:
    name = "strategy"

    def start(self, x: float, params: GameParams) -> StrategyRun:
        raise NotImplementedError

    def __repr__(self) -> str:
        return self.name


class _IdleRun(StrategyRun):
    def open(self):
        return [(0.0, 0.0, 0.0)]

    def advance(self, t0, dt, s1, s2):
        return [(t0 + dt, 0.0, 0.0)]


class NoAction(Strategy):
    """Never idles, never rejects (generally not admissible)."""

    name = "none"

    def start(self, x, params):
        return _IdleRun()


def psi_pieces(psi: Tuple[Path, Path], horizon: float):
    """Yield ``(t0, dt, s1, s2)`` over ``[0, horizon]`` on the breakpoint union."""
    for p in psi:
        if p.has_jumps() or p.v[0] != 0.0:
            raise DomainError("psi components must be continuous and start at 0")
    grid = np.unique(np.concatenate([psi[0].t, psi[1].t, [0.0, horizon]]))
    grid = grid[grid <= horizon]
    v1 = psi[0](grid)
    v2 = psi[1](grid)
    dt = np.diff(grid)
    s1 = np.diff(v1) / dt
    s2 = np.diff(v2) / dt
    for k in range(dt.size):
        yield float(grid[k]), float(dt[k]), float(s1[k]), float(s2[k])


def _collect(points: List[Point]) -> Tuple[MonotonePath, MonotonePath]:
    arr = np.array(points, dtype=float)
    t = arr[:, 0]
    keep = np.ones(t.size, dtype=bool)
    # drop repeated points that carry no jump
    same = (np.diff(t) == 0) & (np.diff(arr[:, 1]) == 0) & (np.diff(arr[:, 2]) == 0)
    keep[1:] = ~same
    arr = arr[keep]
    return MonotonePath(arr[:, 0], arr[:, 1]), MonotonePath(arr[:, 0], arr[:, 2])


def respond(strategy: Strategy, x: float, params: GameParams, psi: Tuple[Path, Path],
            horizon: float, tail: float = 0.0) -> Tuple[MonotonePath, MonotonePath]:
    """Feed ``psi`` on ``[0, horizon]`` (constant beyond its own horizon), then
    ``tail`` more time units of frozen ``psi``; return ``(zeta, rho)``."""
    run = strategy.start(x, params)
    points = list(run.open())
    for t0, dt, s1, s2 in psi_pieces(psi, horizon):
        points.extend(run.advance(t0, dt, s1, s2))
    if tail > 0:
        points.extend(run.advance(horizon, tail, 0.0, 0.0))
    return _collect(points)


def evaluate_original(params: GameParams, x: float, strategy: Strategy,
                      psi: Tuple[Path, Path], T: float) -> CostBreakdown:
    """Cost at time ``T`` when ``strategy`` answers ``psi`` in the original game."""
    if not 0.0 <= x <= params.D:
        raise DomainError(f"x={x} outside [0, {params.D}]")
    if T < 0:
        raise DomainError("T must be nonnegative")
    zeta, rho = respond(strategy, x, params, psi, T)
    state = assemble_dynamics(x, params, psi, zeta, rho, horizon=T)
    bad = first_violation(state.path.truncate(T), params.D)
    if bad is not None:
        raise InadmissibleStrategyError(bad)
    return running_cost(x, params, T, psi, zeta, rho)


def _hitting_play(params: GameParams, x: float, strategy: Strategy, psi: Tuple[Path, Path]):
    """Play until the hitting-game dynamics reach 0; returns ``(tau, rho)``."""
    H = max(psi[0].horizon, psi[1].horizon)
    _, rho = respond(strategy, x, params, psi, H)
    phi = combine([psi[0], psi[1], rho], [1.0, -1.0, -1.0], const=x, drift=params.y, horizon=H)
    tau = first_hit(phi, params.y)
    if math.isfinite(tau) and tau > H:
        # psi is frozen past H and rho is nondecreasing, so the state falls at
        # least at rate -y; replay with the tail included
        _, rho = respond(strategy, x, params, psi, H, tail=tau - H)
        phi = combine([psi[0], psi[1], rho], [1.0, -1.0, -1.0], const=x, drift=params.y,
                      horizon=tau)
        tau = first_hit(phi, params.y)
    return tau, rho


def evaluate_hitting(params: GameParams, x: float, strategy: Strategy,
                     psi: Tuple[Path, Path]) -> CostBreakdown:
    """Hitting-time game cost; only the rejection output of ``strategy`` is used."""
    if not 0.0 <= x <= params.D:
        raise DomainError(f"x={x} outside [0, {params.D}]")
    tau, rho = _hitting_play(params, x, strategy, psi)
    if not math.isfinite(tau):
        raise NotInQError("dynamics never reach 0: psi is not in Q[x, alpha]")
    return running_cost(x, params, tau, psi, None, rho)


def hitting_time_under(params: GameParams, x: float, strategy: Strategy,
                       psi: Tuple[Path, Path]) -> float:
    return _hitting_play(params, x, strategy, psi)[0]


def sharp_control(params: GameParams, T: float) -> Tuple[Path, Path]:
    """The maximizer's control with slopes ``(r/(2 c1), -r/(2 c2))`` up to ``T``."""
    return (Path.linear(0.0, params.r / (2 * params.c1), T),
            Path.linear(0.0, -params.r / (2 * params.c2), T))


@dataclass(frozen=True)
class DivergenceWitness:
    lower_bound: float
    realized: CostBreakdown

    @property
    def passed(self) -> bool:
        return self.realized.total >= self.lower_bound - 1e-6

    def to_json(self) -> dict:
        return {"lower_bound": self.lower_bound, "realized": self.realized.to_json(),
                "passed": self.passed}


def divergence_witness(params: GameParams, x: float, T: float,
                       strategy: Strategy) -> DivergenceWitness:
    """Cost forced by the sharp control against ``strategy`` up to ``T``, and
    the lower bound ``r(x - D) + (r^2/(4c) + y r) T`` it must exceed."""
    if T < 0:
        raise DomainError("T must be nonnegative")
    psi = sharp_control(params, T)
    zeta, rho = respond(strategy, x, params, psi, T)
    realized = running_cost(x, params, T, psi, zeta, rho)
    c = params.c
    bound = params.r * (x - params.D) + (params.r ** 2 / (4 * c) + params.y * params.r) * T
    return DivergenceWitness(bound, realized)


@dataclass(frozen=True)
class NoJumpWitness:
    threshold: float
    realized_up_to_tau: float
    tau: float
    horizon: float

    @property
    def passed(self) -> bool:
        return self.realized_up_to_tau > self.threshold

    def to_json(self) -> dict:
        return {"threshold": self.threshold, "realized_up_to_tau": self.realized_up_to_tau,
                "tau": self.tau, "T_delta": self.horizon, "passed": self.passed}


def nojump_control(params: GameParams, beta0: float, delta: float) -> Tuple[Tuple[Path, Path], float]:
    h = params.h
    T = params.r * (params.D - beta0) / (h(beta0 + delta) - h(beta0))
    return sharp_control(params, T), T


def nojump_witness(params: GameParams, x: float, delta: float,
                   strategy: Strategy) -> NoJumpWitness:
    """Cost accumulated until the state first drops to ``beta0 + delta`` when
    the maximizer plays the sharp control up to ``T_delta`` and then freezes."""
    from .value import free_boundary

    beta0 = free_boundary(params).beta0
    if not x > beta0 + delta or delta <= 0:
        raise DomainError("need delta > 0 and x > beta0 + delta")
    if params.y >= 0:
        raise DomainError("witness needs a negative drift")
    psi, T = nojump_control(params, beta0, delta)
    level = beta0 + delta
    # after T the state falls at rate >= -y, so it is below the level by then
    tail = params.D / -params.y + 1.0
    _, rho = respond(strategy, x, params, psi, T, tail=tail)
    phi = combine([psi[0], psi[1], rho], [1.0, -1.0, -1.0], const=x - level,
                  drift=params.y, horizon=T + tail)
    tau = first_hit(phi, params.y)
    if tau == 0.0:
        raise WitnessInapplicableError(
            "witness inapplicable: the strategy jumps to beta0 + delta at time zero")
    cost = running_cost(x, params, tau, psi, None, rho)
    return NoJumpWitness(params.r * (x - level), cost.total, tau, T)


def parse_strategy(spec: str, params: GameParams) -> Strategy:
    """``"barrier:<beta>"``, ``"barrier:beta0"``, ``"zero"`` or ``"none"``."""
    from .skorohod import barrier_strategy

    if spec == "none":
        return NoAction()
    if spec == "zero":
        return barrier_strategy(0.0, params)
    if spec.startswith("barrier:"):
        arg = spec.split(":", 1)[1]
        if arg == "beta0":
            from .value import free_boundary
            beta = free_boundary(params).beta0
        elif arg == "D":
            beta = params.D
        else:
            try:
                beta = float(arg)
            except ValueError:
                raise ValueError(f"bad barrier level {arg!r}") from None
        return barrier_strategy(beta, params)
    raise ValueError(f"unknown strategy {spec!r} (use barrier:<beta|beta0>, zero, none)")
