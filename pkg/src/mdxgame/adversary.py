"""The maximizer's best reply to the beta0-barrier and the convex-h saddle point."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .model import DomainError, GameParams, hitting_cost
from .paths import MonotonePath, Path
from .value import free_boundary, value_g

DEGENERATE_RADICAND = 1e-14
ODE_RTOL = 1e-10
ODE_ATOL = 1e-13


class DegenerateResponseError(ValueError):
    pass


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("MDXGAME_THREADS", "1")))
    except ValueError:
        return 1


def _check_response_args(params: GameParams, x: float, delta: float):
    fb = free_boundary(params)
    if not 0.0 <= x <= fb.beta0:
        raise DomainError(f"x={x} outside [0, beta0={fb.beta0}]")
    if delta < 0 or (x > 0 and delta > x):
        raise DomainError("need 0 <= delta <= x")
    rad0 = params.y ** 2 - params.h(fb.beta0) / params.c
    degenerate = rad0 <= DEGENERATE_RADICAND and x >= fb.beta0
    if degenerate and delta == 0:
        raise DegenerateResponseError(
            "y^2 - h(beta0)/c vanishes and x = beta0: pass delta > 0 for a delta-optimal response")
    return fb


def _phi_rate(params: GameParams, cap: float):
    y, c, h = params.y, params.c, params.h

    def rate(t, phi):
        u = np.minimum(phi, cap)
        return -np.sqrt(np.maximum(y * y - h(u) / c, 0.0))
    return rate


@dataclass(frozen=True)
class ResponseControl:
    """Optimal reply: ``omega`` and the induced ``psi = ((c/c1) omega, -(c/c2) omega)``.

    ``omega`` is zero on ``[0, delta]``; afterwards the state
    ``x + y t + omega(t)`` follows the ODE until it reaches zero at ``tau_tilde``.
    """

    x: float
    delta: float
    omega: Path
    psi: Tuple[Path, Path]
    tau_tilde: float
    drift: float
    solution: object = field(repr=False, default=None)

    def state(self, t):
        """``x + y t + omega(t)`` from the ODE dense output."""
        t = np.asarray(t, dtype=float)
        if self.solution is None:
            return self.x + self.drift * t
        after = self.solution.sol(np.clip(t, self.delta, self.tau_tilde))[0]
        return np.where(t <= self.delta, self.x + self.drift * t, after)

    def to_csv(self) -> str:
        lines = ["t,omega,psi1,psi2,phi"]
        for t, w in zip(self.omega.t, self.omega.v):
            lines.append(",".join(f"{v:.17g}" for v in (
                t, w, self.psi[0](t), self.psi[1](t), self.x + self.drift * t + w)))
        return "\n".join(lines) + "\n"


def optimal_response(params: GameParams, x: float, delta: float = 0.0,
                     samples: int = 4001) -> ResponseControl:
    """Integrate the best-reply ODE with an adaptive Runge-Kutta scheme."""
    fb = _check_response_args(params, x, delta)
    y = params.y
    c = params.c
    start = x + y * delta
    if x == 0.0 or start <= 0.0:
        # the state reaches zero while the maximizer waits
        tau = 0.0 if x == 0.0 else x / -y
        omega = Path.constant(0.0).extend(tau) if tau > 0 else Path.constant(0.0)
        return ResponseControl(x, delta, omega, (omega, omega), tau, y)

    def hit(t, phi):
        return phi[0]
    hit.terminal = True
    hit.direction = -1

    t_max = delta + 10.0 * start / math.sqrt(max(y * y - params.h(start) / c, 1e-300)) + 1.0
    sol = integrate.solve_ivp(_phi_rate(params, start), (delta, t_max), [start],
                              method="DOP853", rtol=ODE_RTOL, atol=ODE_ATOL,
                              dense_output=True, events=hit)
    if sol.status != 1 or not sol.t_events[0].size:
        raise RuntimeError("best-reply ODE did not reach zero")
    tau = float(sol.t_events[0][0])
    ts = np.unique(np.concatenate([np.linspace(delta, tau, samples), sol.t[sol.t <= tau]]))
    phi = sol.sol(ts)[0]
    phi[-1] = 0.0
    omega_v = phi - x - y * ts
    omega_v[0] = 0.0
    if delta > 0:
        ts = np.concatenate([[0.0], ts])
        omega_v = np.concatenate([[0.0], omega_v])
    omega_v[0] = 0.0
    omega = Path(ts, omega_v)
    psi = (omega.scaled(c / params.c1), omega.scaled(-c / params.c2))
    return ResponseControl(x, delta, omega, psi, tau, y, sol)


def termination_time(params: GameParams, x: float, delta: float = 0.0) -> float:
    """``delta + int_0^{x + y delta} dxi / sqrt(y^2 - h(xi)/c)`` by quadrature."""
    _check_response_args(params, x, delta)
    y, c, h = params.y, params.c, params.h
    upper = x + y * delta
    if upper <= 0:
        return 0.0 if x == 0 else x / -y
    val, _ = integrate.quad(lambda u: 1.0 / math.sqrt(y * y - h(u) / c), 0.0, upper,
                            epsabs=1e-12, epsrel=1e-12, limit=200)
    return delta + val


def response_cost(params: GameParams, x: float, delta: float = 0.0):
    """Hitting-game cost of the best reply against the beta0-barrier."""
    from .engine import evaluate_hitting
    from .skorohod import barrier_strategy

    resp = optimal_response(params, x, delta)
    beta0 = free_boundary(params).beta0
    return evaluate_hitting(params, x, barrier_strategy(beta0, params), resp.psi), resp


def _require_convex(params: GameParams):
    if not params.h.is_convex:
        raise ValueError("saddle point check needs a convex holding cost")


def random_rejection(rng: np.random.Generator, x: float, horizon: float) -> MonotonePath:
    """Jump in ``[0, x/2]`` at zero plus at most five ramps of total mass <= ``x/2``."""
    jump = rng.uniform(0.0, x / 2)
    n = int(rng.integers(0, 6))
    if n == 0:
        return MonotonePath.ramps(jump, [], [])
    cuts = np.sort(rng.uniform(0.0, horizon, size=n))
    durations = np.diff(np.concatenate([[0.0], cuts]))
    durations = np.maximum(durations, 1e-9)
    masses = rng.dirichlet(np.ones(n)) * rng.uniform(0.0, x / 2)
    on = rng.random(n) < 0.7
    masses = np.where(on, masses, 0.0)
    return MonotonePath.ramps(jump, masses / durations, durations)


@dataclass(frozen=True)
class SaddleReport:
    min_cost: float
    value: float
    passed: bool
    worst_trial: int
    n_trials: int
    profile: List[Tuple[float, float]]
    notes: List[str]

    def to_json(self) -> dict:
        return {"min_cost": self.min_cost, "value": self.value, "passed": self.passed,
                "worst_trial": self.worst_trial, "n_trials": self.n_trials,
                "profile": [list(p) for p in self.profile], "notes": self.notes}


def rejection_profile(params: GameParams, x: float, p_grid: Sequence[float],
                      response: Optional[ResponseControl] = None) -> List[Tuple[float, float]]:
    """``F(p)``: cost of the best reply when ``p`` is rejected at time zero."""
    _require_convex(params)
    if any(p < 0 or p > x for p in p_grid):
        raise DomainError("rejection amounts must lie in [0, x]")
    resp = response or optimal_response(params, x, 0.0)
    out = []
    for p in p_grid:
        rho = MonotonePath.ramps(float(p), [], [])
        out.append((float(p), hitting_cost(x, params, resp.psi, rho).total))
    return out


def saddle_check(params: GameParams, x: float, n_trials: int = 500, seed: int = 0,
                 p_grid: Optional[Sequence[float]] = None, tol: float = 1e-6) -> SaddleReport:
    """Play the best reply against random rejection controls and the
    rejection-at-zero family; every cost must stay above ``g(x)``."""
    _require_convex(params)
    fb = free_boundary(params)
    if not 0.0 <= x < fb.beta0:
        raise DomainError(f"x={x} must lie in [0, beta0={fb.beta0})")
    resp = optimal_response(params, x, 0.0)
    U = value_g(params, x)
    horizon = max(resp.tau_tilde, 1e-9)

    def trial(i: int) -> float:
        rng = np.random.default_rng(seed + i)
        rho = random_rejection(rng, x, horizon)
        return hitting_cost(x, params, resp.psi, rho).total

    workers = max_workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            costs = list(ex.map(trial, range(n_trials)))
    else:
        costs = [trial(i) for i in range(n_trials)]
    if p_grid is None:
        p_grid = np.linspace(0.0, x, 11)
    profile = rejection_profile(params, x, p_grid, resp)
    all_costs = np.array(costs + [f for _, f in profile])
    worst = int(np.argmin(all_costs)) if all_costs.size else -1
    notes = []
    if params.h.kind == "linear":
        notes.append("linear h: convex but not strictly; the convexity inequality used is weak")
    return SaddleReport(float(all_costs.min()) if all_costs.size else math.inf, U,
                        bool(all_costs.min() >= U - tol) if all_costs.size else True,
                        worst, n_trials, profile, notes)
