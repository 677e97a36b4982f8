"""Reduction of the multiclass game to the one-dimensional workload game."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .model import DomainError, GameParams, HoldingCost, rate_penalty
from .paths import Path, action, combine

CRITICAL_LOAD_TOL = 1e-12


@dataclass(frozen=True)
class ClassParams:
    lam: float
    mu: float
    s2ia: float
    s2st: float
    h: float
    r: float
    D: float
    y: float = 0.0

    def __post_init__(self):
        for name in ("lam", "mu", "s2ia", "s2st", "h", "r"):
            if not getattr(self, name) > 0:
                raise ValueError(f"class field {name!r} must be positive")
        if self.D < 0:
            raise ValueError("class buffer D must be nonnegative")

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    @property
    def theta(self) -> float:
        return 1.0 / self.mu

    @property
    def c_arrival(self) -> float:
        return 1.0 / (2 * self.lam * self.s2ia)

    @property
    def c_service(self) -> float:
        return 1.0 / (2 * self.mu * self.s2st)


@dataclass(frozen=True)
class MulticlassParams:
    classes: Tuple[ClassParams, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.classes:
            raise ValueError("need at least one class")

    def _vec(self, name: str) -> np.ndarray:
        return np.array([getattr(k, name) for k in self.classes], dtype=float)

    @property
    def I(self) -> int:
        return len(self.classes)

    @property
    def theta(self) -> np.ndarray:
        return self._vec("theta")

    @property
    def rho(self) -> np.ndarray:
        return self._vec("rho")

    @property
    def mu(self) -> np.ndarray:
        return self._vec("mu")

    def check_critical_load(self) -> None:
        total = float(np.sum(self.rho))
        if abs(total - 1.0) > CRITICAL_LOAD_TOL:
            raise ValueError(f"not critically loaded: sum(rho) = {total:.17g} != 1")

    @classmethod
    def from_json(cls, data: dict) -> "MulticlassParams":
        if "classes" not in data:
            raise ValueError("missing field 'classes'")
        out = []
        for i, c in enumerate(data["classes"]):
            try:
                out.append(ClassParams(lam=float(c["lambda"]), mu=float(c["mu"]),
                                       s2ia=float(c["s2ia"]), s2st=float(c["s2st"]),
                                       h=float(c["h"]), r=float(c["r"]), D=float(c["D"]),
                                       y=float(c.get("y", 0.0))))
            except KeyError as e:
                raise ValueError(f"classes[{i}]: missing field {e.args[0]!r}") from None
        return cls(tuple(out))

    def to_json(self) -> dict:
        return {"classes": [{"lambda": k.lam, "mu": k.mu, "s2ia": k.s2ia, "s2st": k.s2st,
                             "h": k.h, "r": k.r, "D": k.D, "y": k.y} for k in self.classes]}


def m1() -> MulticlassParams:
    """Two-class reference instance M1."""
    return MulticlassParams((
        ClassParams(lam=0.5, mu=1.0, s2ia=1.0, s2st=1.0, h=1.0, r=2.0, D=1.0, y=-2.0),
        ClassParams(lam=1.0, mu=2.0, s2ia=1.0, s2st=1.0, h=1.0, r=3.0, D=1.0, y=-2.0),
    ))


def _greedy_order(multi: MulticlassParams) -> List[int]:
    price = [k.h * k.mu for k in multi.classes]
    return sorted(range(multi.I), key=lambda i: (price[i], i))


@dataclass(frozen=True)
class EffectiveHolding:
    value: float
    minimizer: np.ndarray


def effective_holding(multi: MulticlassParams, w: float) -> EffectiveHolding:
    """Cheapest class allocation carrying workload ``w``: greedy by ``h_i mu_i``."""
    cap = float(np.dot(multi.theta, [k.D for k in multi.classes]))
    if not 0.0 <= w <= cap * (1 + 1e-15):
        raise DomainError(f"workload {w} outside [0, {cap}]")
    xi = np.zeros(multi.I)
    left = w
    for i in _greedy_order(multi):
        k = multi.classes[i]
        take = min(left, k.theta * k.D)
        xi[i] = min(take * k.mu, k.D)
        left -= take
        if left <= 0:
            break
    return EffectiveHolding(float(np.dot([k.h for k in multi.classes], xi)), xi)


def effective_knots(multi: MulticlassParams) -> List[Tuple[float, float]]:
    knots = [(0.0, 0.0)]
    w = v = 0.0
    for i in _greedy_order(multi):
        k = multi.classes[i]
        if w + k.theta * k.D <= w:
            continue
        w += k.theta * k.D
        v += k.h * k.D
        knots.append((w, v))
    return knots


@dataclass(frozen=True)
class Collapse:
    params: GameParams
    i_star: int
    knots: List[Tuple[float, float]]

    def knots_csv(self) -> str:
        rows = ["w,h"] + [f"{w:.17g},{v:.17g}" for w, v in self.knots]
        return "\n".join(rows) + "\n"


def effective_params(multi: MulticlassParams) -> Collapse:
    """One-dimensional workload game with the same value as the multiclass game."""
    multi.check_critical_load()
    theta = multi.theta
    cls = multi.classes
    c1 = 1.0 / sum(2 * k.rho * k.s2ia / k.mu for k in cls)
    c2 = 1.0 / sum(2 * k.s2st / k.mu for k in cls)
    prices = [k.r * k.mu for k in cls]
    i_star = int(np.argmin(prices))
    y = float(np.dot(theta, [k.y for k in cls]))
    D = float(np.dot(theta, [k.D for k in cls]))
    knots = effective_knots(multi)
    if len(knots) < 2:
        raise ValueError("all buffers are empty")
    gp = GameParams(y=y, c1=c1, c2=c2, r=prices[i_star], D=D,
                    h=HoldingCost.piecewise_linear(knots))
    return Collapse(gp, i_star, knots)


def lift_coefficients(multi: MulticlassParams) -> Tuple[np.ndarray, np.ndarray]:
    """Per-class shares ``a`` and ``b`` of the arrival and service perturbations
    minimizing the multiclass penalty subject to ``theta . lift = psi``."""
    col = effective_params(multi).params
    a = np.array([2 * k.rho * k.s2ia * col.c1 for k in multi.classes])
    b = np.array([2 * k.s2st * col.c2 for k in multi.classes])
    return a, b


def printed_lift_coefficients(multi: MulticlassParams) -> Tuple[np.ndarray, np.ndarray]:
    """The variant carrying an extra ``1/mu_i`` factor; kept to report that it
    does not reproduce ``psi`` under ``theta``."""
    a, b = lift_coefficients(multi)
    return a / multi.mu, b / multi.mu


def lift_path(multi: MulticlassParams, psi: Tuple[Path, Path]) -> Tuple[List[Path], List[Path]]:
    a, b = lift_coefficients(multi)
    return [psi[0].scaled(ai) for ai in a], [psi[1].scaled(bi) for bi in b]


def multiclass_penalty(multi: MulticlassParams, lifted: Tuple[Sequence[Path], Sequence[Path]],
                       T: float) -> float:
    """``J(T, psi)`` = sum over classes of the weighted squared-slope integrals."""
    total = 0.0
    for k, p1, p2 in zip(multi.classes, lifted[0], lifted[1]):
        total += k.c_arrival * action(p1, T) + k.c_service * action(p2, T)
    return total


def workload(multi: MulticlassParams, paths: Sequence[Path]) -> Path:
    return combine(list(paths), list(multi.theta))


def _random_psi(rng: np.random.Generator, n_max: int = 10) -> Tuple[Path, Path]:
    out = []
    for _ in range(2):
        n = int(rng.integers(1, n_max + 1))
        out.append(Path.from_slopes(rng.uniform(-5, 5, n), rng.uniform(0.05, 1.0, n)))
    return out[0], out[1]


@dataclass
class CollapseReport:
    checks: dict = field(default_factory=dict)
    worst: dict = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {"passed": self.passed, "checks": self.checks, "worst": self.worst,
                "notes": self.notes}


def verify_collapse(multi: MulticlassParams, n_samples: int = 200, seed: int = 0) -> CollapseReport:
    """Numerical checks of the reduction on random controls and workloads."""
    col = effective_params(multi)
    gp = col.params
    theta = multi.theta
    hvec = np.array([k.h for k in multi.classes])
    rvec = np.array([k.r for k in multi.classes])
    rng = np.random.default_rng(seed)
    rep = CollapseReport()

    # (i) lifted penalty equals the one-dimensional penalty, theta . lift = psi
    pen_err = proj_err = 0.0
    for _ in range(n_samples):
        psi = _random_psi(rng)
        T = max(psi[0].horizon, psi[1].horizon)
        lifted = lift_path(multi, psi)
        I1 = rate_penalty(psi[0], psi[1], T, gp)
        J = multiclass_penalty(multi, lifted, T)
        pen_err = max(pen_err, abs(J - I1) / max(1.0, abs(I1)))
        for k in range(2):
            scale = max(1.0, float(np.max(np.abs(psi[k].v))))
            proj_err = max(proj_err, workload(multi, lifted[k]).max_abs_diff(psi[k]) / scale)
    rep.checks["penalty_identity"] = pen_err <= 1e-10
    rep.checks["lift_projection"] = proj_err <= 1e-14
    rep.worst["penalty_rel_err"] = pen_err
    rep.worst["projection_err"] = proj_err

    # (ii) the greedy allocation attains h(w) and carries workload w
    hv_err = w_err = 0.0
    for w in rng.uniform(0.0, gp.D, n_samples):
        eh = effective_holding(multi, float(w))
        hv_err = max(hv_err, abs(eh.value - gp.h(w)))
        w_err = max(w_err, abs(float(np.dot(theta, eh.minimizer)) - w))
    rep.checks["holding_selector"] = hv_err <= 1e-12 and w_err <= 1e-12
    rep.worst["holding_err"] = max(hv_err, w_err)

    # (iii) rejecting through class i* prices workload at r, and nothing is cheaper
    ok = True
    e = np.zeros(multi.I)
    e[col.i_star] = multi.classes[col.i_star].mu
    for q in rng.uniform(0.0, 10.0, n_samples):
        ok &= abs(float(np.dot(rvec, q * e)) - gp.r * q) <= 1e-12 * max(1.0, q)
        alt = rng.exponential(size=multi.I)
        alt = alt / np.dot(theta, alt)
        ok &= float(np.dot(rvec, alt)) >= gp.r - 1e-12
    rep.checks["rejection_price"] = bool(ok)

    # (iv) the lift minimizes J among class paths with the same workload
    worst_gap = np.inf
    for _ in range(n_samples):
        psi = _random_psi(rng)
        T = max(psi[0].horizon, psi[1].horizon)
        lifted = lift_path(multi, psi)
        I1 = rate_penalty(psi[0], psi[1], T, gp)
        pert = []
        for comp in lifted:
            d = _null_perturbation(rng, theta)
            pert.append([combine([p, di], [1.0, 1.0]) for p, di in zip(comp, d)])
        J = multiclass_penalty(multi, (pert[0], pert[1]), T)
        worst_gap = min(worst_gap, J - I1)
    rep.checks["lift_optimal"] = bool(worst_gap >= -1e-10)
    rep.worst["min_J_minus_I"] = float(worst_gap)

    a_p, b_p = printed_lift_coefficients(multi)
    rep.worst["printed_theta_dot_a"] = float(np.dot(theta, a_p))
    rep.worst["printed_theta_dot_b"] = float(np.dot(theta, b_p))
    if abs(np.dot(theta, a_p) - 1) > 1e-12 or abs(np.dot(theta, b_p) - 1) > 1e-12:
        rep.notes.append(
            "lift coefficients with the extra 1/mu_i factor give theta.a = "
            f"{np.dot(theta, a_p):.12g}, theta.b = {np.dot(theta, b_p):.12g} (not 1); "
            "using a_i = 2 rho_i s2ia_i c1, b_i = 2 s2st_i c2 instead")
    if multi.I == 1:
        rep.notes.append("single class: c1 = mu/(2 s2ia) in workload units, i.e. mu^2 times "
                         "the per-customer constant 1/(2 mu s2ia)")
    return rep


def _null_perturbation(rng: np.random.Generator, theta: np.ndarray) -> List[Path]:
    """Random per-class paths ``d`` with ``theta . d == 0`` (exactly per slope)."""
    n = int(rng.integers(1, 6))
    dur = rng.uniform(0.05, 1.0, n)
    slopes = rng.normal(size=(theta.size, n))
    slopes -= np.outer(theta, theta @ slopes) / np.dot(theta, theta)
    scale = 10 ** rng.uniform(-4, 1)
    return [Path.from_slopes(scale * slopes[i], dur) for i in range(theta.size)]
