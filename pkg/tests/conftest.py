import numpy as np
import pytest

from mdxgame.model import reference_params
from mdxgame.paths import Path


def random_psi(rng: np.random.Generator, T: float, n_max: int = 10, scale: float = 2.0):
    """Continuous piecewise-linear (psi1, psi2) on [0, T] starting at 0."""
    n = int(rng.integers(1, n_max + 1))
    d = rng.dirichlet(np.ones(n)) * T
    return (Path.from_slopes(rng.normal(0.0, scale, n), d),
            Path.from_slopes(rng.normal(0.0, scale, n), d))


def random_omega(rng: np.random.Generator, n_max: int = 12, jumps: bool = True) -> Path:
    """Piecewise-linear path with random start, slopes and occasional jumps."""
    n = int(rng.integers(1, n_max + 1))
    t, v = [0.0], [float(rng.uniform(-1.5, 2.5))]
    for _ in range(n):
        if jumps and rng.random() < 0.2:
            t.append(t[-1])
            v.append(v[-1] + rng.normal(0.0, 0.8))
        dt = float(rng.uniform(0.05, 1.0))
        t.append(t[-1] + dt)
        v.append(v[-1] + rng.normal(0.0, 3.0) * dt)
    return Path(np.array(t), np.array(v))


@pytest.fixture
def R1():
    return reference_params("R1")


@pytest.fixture
def R2():
    return reference_params("R2")


@pytest.fixture
def R3():
    return reference_params("R3")


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
