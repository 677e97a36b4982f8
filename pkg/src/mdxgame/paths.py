"""Exact piecewise-linear paths with jumps.

A path is stored as breakpoint times ``t`` (nondecreasing, ``t[0] == 0``) and
values ``v``.  Between two distinct consecutive times the path is linear; two
equal consecutive times encode a jump.  Evaluation is right-continuous, and
``v[0]`` is the value just before time zero, so a leading pair of zeros in
``t`` is a jump at time zero.  Beyond the last breakpoint a path is extended
by its last value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Path:
    t: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        t = _frozen(self.t)
        v = _frozen(self.v)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValueError("path needs matching 1-d, non-empty t and v")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("path breakpoints and values must be finite")
        if t[0] != 0.0:
            raise ValueError("path must start at t=0")
        if np.any(np.diff(t) < 0):
            raise ValueError("path times must be nondecreasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)

    # construction

    @classmethod
    def from_slopes(cls, slopes: Sequence[float], durations: Sequence[float],
                    start: float = 0.0, jump0: float = 0.0) -> "Path":
        durations = np.asarray(durations, dtype=float)
        slopes = np.asarray(slopes, dtype=float)
        t = np.concatenate([[0.0], np.cumsum(durations)])
        v = start + jump0 + np.concatenate([[0.0], np.cumsum(slopes * durations)])
        if jump0:
            t = np.concatenate([[0.0], t])
            v = np.concatenate([[start], v])
        return cls(t, v)

    @classmethod
    def constant(cls, value: float = 0.0) -> "Path":
        return cls([0.0], [value])

    @classmethod
    def linear(cls, start: float, slope: float, horizon: float) -> "Path":
        return cls([0.0, horizon], [start, start + slope * horizon])

    @classmethod
    def from_json(cls, data: dict) -> "Path":
        t = list(data["t"])
        v = list(data["v"])
        jump0 = float(data.get("jump0", 0.0))
        if not t:
            raise ValueError("field 't' must be non-empty")
        if jump0:
            t = [0.0] + t
            v = [v[0]] + [vi + jump0 for vi in v]
        return cls(t, v)

    def to_json(self) -> dict:
        t, v = self.t, self.v
        jump0 = 0.0
        if t.size > 1 and t[1] == 0.0:
            jump0 = float(v[1] - v[0])
            t = t[1:]
            v = np.concatenate([[v[0]], v[2:] - jump0])
        return {"t": [float(a) for a in t], "v": [float(a) for a in v], "jump0": jump0}

    # basic queries

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    @property
    def start(self) -> float:
        """Value just before time zero."""
        return float(self.v[0])

    @property
    def jump0(self) -> float:
        return float(self(0.0) - self.v[0])

    def __call__(self, s):
        """Right-continuous value at time(s) ``s >= 0``."""
        s_arr = np.asarray(s, dtype=float)
        t, v = self.t, self.v
        n = t.size
        idx = np.searchsorted(t, s_arr, side="right") - 1
        idx = np.clip(idx, 0, n - 1)
        nxt = np.minimum(idx + 1, n - 1)
        dt = t[nxt] - t[idx]
        frac = np.where(dt > 0, (s_arr - t[idx]) / np.where(dt > 0, dt, 1.0), 0.0)
        out = v[idx] + (v[nxt] - v[idx]) * frac
        return float(out) if np.ndim(s) == 0 else out

    def left(self, s):
        """Left limit at time(s) ``s``; at zero this is the pre-jump value."""
        s_arr = np.asarray(s, dtype=float)
        t, v = self.t, self.v
        n = t.size
        idx = np.searchsorted(t, s_arr, side="left")
        exact = (idx < n) & (t[np.minimum(idx, n - 1)] == s_arr)
        hi = np.clip(idx, 1, n - 1) if n > 1 else np.zeros_like(idx)
        lo = np.maximum(hi - 1, 0)
        dt = t[hi] - t[lo]
        frac = np.where(dt > 0, (s_arr - t[lo]) / np.where(dt > 0, dt, 1.0), 0.0)
        interp = v[lo] + (v[hi] - v[lo]) * frac
        out = np.where(exact, v[np.minimum(idx, n - 1)],
                       np.where(idx == 0, v[0], np.where(idx >= n, v[-1], interp)))
        return float(out) if np.ndim(s) == 0 else out

    def jump_times(self) -> np.ndarray:
        """Times at which the path has a nonzero jump."""
        same = np.diff(self.t) == 0
        moved = np.diff(self.v) != 0
        return np.unique(self.t[:-1][same & moved])

    def has_jumps(self) -> bool:
        return self.jump_times().size > 0

    def segments(self):
        """Arrays ``(t0, dt, v0, v1)`` of the non-degenerate linear pieces."""
        dt = np.diff(self.t)
        keep = dt > 0
        return self.t[:-1][keep], dt[keep], self.v[:-1][keep], self.v[1:][keep]

    def is_nondecreasing(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.diff(self.v) >= -tol))

    # transformations

    def truncate(self, T: float) -> "Path":
        """Restriction to ``[0, T]``, ending with a breakpoint at ``T``."""
        if T < 0:
            raise ValueError("truncation time must be nonnegative")
        keep = self.t <= T
        t = self.t[keep]
        v = self.v[keep]
        if t[-1] < T:
            t = np.append(t, T)
            v = np.append(v, self(T))
        return Path(t, v)

    def extend(self, horizon: float) -> "Path":
        """Constant extension up to ``horizon`` (no-op if already longer)."""
        if horizon <= self.horizon:
            return self
        return Path(np.append(self.t, horizon), np.append(self.v, self.v[-1]))

    def scaled(self, k: float) -> "Path":
        return Path(self.t, k * self.v)

    def shifted(self, k: float) -> "Path":
        return Path(self.t, self.v + k)

    def refine(self, times: Iterable[float]) -> "Path":
        return combine([self], [1.0], extra_times=times)

    def max_abs_diff(self, other: "Path", horizon: float | None = None) -> float:
        """Exact sup-norm distance on ``[0, horizon]`` (right values, t >= 0)."""
        d = combine([self, other], [1.0, -1.0], horizon=horizon)
        if horizon is not None:
            d = d.truncate(horizon)
        return float(np.max(np.abs(post_zero_values(d))))

    def __repr__(self) -> str:
        return f"Path(t={self.t.tolist()}, v={self.v.tolist()})"


class MonotonePath(Path):
    """Nondecreasing path that starts from zero just before time zero."""

    def __post_init__(self):
        super().__post_init__()
        if self.v[0] != 0.0:
            raise ValueError("monotone control must start at 0 before time zero")
        if np.any(np.diff(self.v) < 0):
            raise ValueError("monotone control must be nondecreasing")

    @classmethod
    def zero(cls) -> "MonotonePath":
        return cls([0.0], [0.0])

    @classmethod
    def ramps(cls, jump0: float, rates: Sequence[float], durations: Sequence[float]) -> "MonotonePath":
        if jump0 < 0 or any(r < 0 for r in rates):
            raise ValueError("jump and rates must be nonnegative")
        p = Path.from_slopes(rates, durations, 0.0, jump0)
        return cls(p.t, p.v)

    @classmethod
    def from_path(cls, p: Path) -> "MonotonePath":
        return cls(p.t, p.v)

    @classmethod
    def from_json(cls, data: dict) -> "MonotonePath":
        if float(data.get("jump0", 0.0)) < 0:
            raise ValueError("field 'jump0' must be nonnegative")
        p = Path.from_json(data)
        return cls(p.t, p.v)


def post_zero_values(p: Path) -> np.ndarray:
    """Breakpoint values at times >= 0, dropping the pre-jump value at 0."""
    if p.t.size > 1 and p.t[1] == 0.0:
        return p.v[1:]
    return p.v


def combine(paths: Sequence[Path], coefs: Sequence[float], const: float = 0.0,
            drift: float = 0.0, horizon: float | None = None,
            extra_times: Iterable[float] = ()) -> Path:
    """Exact ``const + drift*t + sum(coef*path)`` on the union of breakpoints.

    Jumps of any input appear as duplicated times in the result.
    """
    H = max(p.horizon for p in paths) if paths else 0.0
    if horizon is not None:
        H = max(H, horizon)
    times = [p.t for p in paths]
    extra = np.asarray(list(extra_times), dtype=float)
    grid = np.unique(np.concatenate(times + [extra, [0.0, H]]))
    grid = grid[(grid >= 0) & (grid <= H)]

    right = const + drift * grid
    left = const + drift * grid
    jumps = np.zeros(grid.size, dtype=bool)
    for p, k in zip(paths, coefs):
        r = p(grid)
        l = p.left(grid)
        right = right + k * r
        left = left + k * l
        jumps |= (r != l)
    n_out = grid.size + int(jumps.sum())
    t_out = np.empty(n_out)
    v_out = np.empty(n_out)
    pos = np.arange(grid.size) + np.cumsum(jumps)
    t_out[pos] = grid
    v_out[pos] = right
    pre = pos[jumps] - 1
    t_out[pre] = grid[jumps]
    v_out[pre] = left[jumps]
    return Path(t_out, v_out)


def action(p: Path, T: float) -> float:
    """``sum(slope**2 * dt)`` over ``[0, T]``; ``inf`` if the path jumps there
    or does not start at zero."""
    if T < 0:
        raise ValueError("horizon T must be nonnegative")
    if p(0.0) != 0.0 or p.v[0] != 0.0:
        return math.inf
    q = p.truncate(T)
    if q.has_jumps():
        return math.inf
    _, dt, v0, v1 = q.segments()
    if dt.size == 0:
        return 0.0
    return float(np.sum((v1 - v0) ** 2 / dt))
