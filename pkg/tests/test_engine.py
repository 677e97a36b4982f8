import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdxgame.engine import (InadmissibleStrategyError, NoAction, WitnessInapplicableError,
                            divergence_witness, evaluate_hitting, evaluate_original,
                            hitting_time_under, nojump_witness, parse_strategy, respond)
from mdxgame.model import DomainError, reference_params
from mdxgame.paths import Path
from mdxgame.value import value_g

from conftest import random_psi

ZERO = (Path.constant(0.0), Path.constant(0.0))


def test_original_examples(R1):
    b0 = parse_strategy("barrier:beta0", R1)
    assert evaluate_original(R1, 1.5, b0, ZERO, 0.0).total == pytest.approx(0.5)
    assert evaluate_original(R1, 0.0, b0, ZERO, 1.0).total == 0.0
    c = evaluate_original(R1, 1.5, b0, ZERO, 1.0)
    assert c.rejection == pytest.approx(0.5) and c.holding == pytest.approx(0.25)
    assert c.total <= value_g(R1, 1.5)


def test_hitting_examples(R1):
    b0 = parse_strategy("barrier:beta0", R1)
    assert evaluate_hitting(R1, 0.0, b0, ZERO).total == 0.0
    assert evaluate_hitting(R1, 0.5, b0, ZERO).total == pytest.approx(0.0625)


def test_do_nothing_can_be_inadmissible(R1):
    with pytest.raises(InadmissibleStrategyError) as e:
        evaluate_original(R1, 0.5, NoAction(), ZERO, 1.0)
    assert e.value.time == pytest.approx(0.25)


def test_parse_strategy(R1):
    assert parse_strategy("barrier:D", R1).beta == 2.0
    assert parse_strategy("barrier:0.3", R1).beta == 0.3
    assert parse_strategy("zero", R1).beta == 0.0
    assert parse_strategy("none", R1).name == "none"
    for bad in ("barrier:x", "bang", "barrier:7"):
        with pytest.raises(ValueError):
            parse_strategy(bad, R1)


@pytest.mark.parametrize("x", [0.0, 0.6, 1.0, 1.7, 2.0])
def test_barrier_beats_value_on_random_psi(R1, x):
    strat = parse_strategy("barrier:beta0", R1)
    g = value_g(R1, x)
    rng = np.random.default_rng(int(x * 100))
    for _ in range(100):
        T = float(rng.uniform(0.0, 10.0))
        psi = random_psi(rng, max(T, 1e-3))
        assert evaluate_original(R1, x, strat, psi, T).total <= g + 1e-8


def test_zero_barrier_bound(R1):
    # rejecting everything above zero costs at most r x when the value is finite
    strat = parse_strategy("zero", R1)
    rng = np.random.default_rng(4)
    for _ in range(200):
        x = float(rng.uniform(0, 2))
        T = float(rng.uniform(0, 10))
        psi = random_psi(rng, max(T, 1e-3), scale=4.0)
        assert evaluate_original(R1, x, strat, psi, T).total <= R1.r * x + 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["barrier:beta0", "zero", "barrier:D",
                                                 "barrier:1.5"]))
def test_causality(seed, spec):
    p = reference_params("R1")
    strat = parse_strategy(spec, p)
    rng = np.random.default_rng(seed)
    psi = random_psi(rng, 4.0)
    t = float(rng.uniform(0.1, 4.0))
    x = float(rng.uniform(0, 2))
    z1, r1 = respond(strat, x, p, psi, 4.0)
    cut = (psi[0].truncate(t).extend(4.0), psi[1].truncate(t).extend(4.0))
    z2, r2 = respond(strat, x, p, cut, 4.0)
    ts = np.linspace(0.0, t, 41)
    assert np.allclose(z1(ts), z2(ts), atol=1e-12)
    assert np.allclose(r1(ts), r2(ts), atol=1e-12)


def test_hitting_and_original_agree_before_the_hit(R1):
    strat = parse_strategy("barrier:beta0", R1)
    rng = np.random.default_rng(12)
    for _ in range(100):
        x = float(rng.uniform(0.05, 2.0))
        psi = random_psi(rng, 3.0, scale=1.0)
        tau = hitting_time_under(R1, x, strat, psi)
        hit = evaluate_hitting(R1, x, strat, psi)
        orig = evaluate_original(R1, x, strat, psi, tau)
        assert hit.total == pytest.approx(orig.total, abs=1e-10)


def test_divergence_examples(R1, R2):
    for spec in ("zero", "none"):
        for x in (0.0, 1.0, 2.0):
            w = divergence_witness(R2, x, 100.0, parse_strategy(spec, R2))
            assert w.lower_bound == pytest.approx(R2.r * (x - 2.0) + 50.0)
            assert w.passed
    strat = parse_strategy("zero", R1)
    b = [divergence_witness(R1, 1.0, T, strat).lower_bound for T in (0.0, 1.0, 5.0)]
    assert b[0] == pytest.approx(-1.0) and b[0] > b[1] > b[2]


def test_nojump_examples(R1):
    for spec in ("none", "barrier:D"):
        w = nojump_witness(R1, 1.5, 0.1, parse_strategy(spec, R1))
        assert w.horizon == pytest.approx(10.0)
        assert w.threshold == pytest.approx(0.4)
        assert w.realized_up_to_tau > 0.4
    with pytest.raises(WitnessInapplicableError):
        nojump_witness(R1, 1.5, 0.1, parse_strategy("barrier:beta0", R1))
    w = nojump_witness(R1, 1.2, 0.05, NoAction())
    assert w.threshold == pytest.approx(0.15)


def test_nojump_needs_room(R1):
    with pytest.raises(DomainError):
        nojump_witness(R1, 1.05, 0.1, NoAction())


def test_psi_with_jump_rejected(R1):
    jumpy = (Path([0.0, 1.0, 1.0], [0.0, 0.0, 1.0]), Path.constant(0.0))
    with pytest.raises(ValueError):
        evaluate_original(R1, 1.0, parse_strategy("barrier:beta0", R1), jumpy, 2.0)
