import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oneway.growth import (
    BLOCK,
    GrowthParams,
    apply_step,
    simulate,
    step,
    threshold_scan,
    zero_crossing,
)


@given(st.integers(0, 50), st.booleans())
def test_apply_step_rule(length, ok):
    got = apply_step(length, ok)
    assert got == (length + 1 if ok else max(length - 2, 0))
    assert got >= 0


def test_apply_step_unclamped_array():
    out = apply_step(np.array([0, 5]), np.array([False, True]), clamp=False)
    assert out.tolist() == [-2, 6]


def test_step_extremes():
    rng = np.random.default_rng(0)
    assert step(4, 1.0, rng) == 5
    assert step(4, 0.0, rng) == 2
    assert step(1, 0.0, rng) == 0


def test_params_validation():
    with pytest.raises(ValueError):
        GrowthParams(1.5)
    with pytest.raises(ValueError):
        GrowthParams(0.5, steps=0)


@pytest.mark.parametrize("p", [0.0, 1.0])
def test_deterministic_limits(p):
    s = simulate(GrowthParams(p, steps=10, trials=100))
    assert s.drift == 3 * p - 2 and s.stderr == 0


def test_seed_reproducible_and_block_independent():
    a = simulate(GrowthParams(0.6, trials=2 * BLOCK + 17, seed=3))
    b = simulate(GrowthParams(0.6, trials=2 * BLOCK + 17, seed=3))
    assert a == b
    c = simulate(GrowthParams(0.6, trials=2 * BLOCK + 17, seed=4))
    assert a.drift != c.drift


def test_drift_near_analytic():
    s = simulate(GrowthParams(0.5, trials=20_000, seed=1))
    assert abs(s.drift - s.analytic) < 4 * s.stderr


def test_extinction_monotone():
    lo = simulate(GrowthParams(0.3, trials=5000, seed=2)).extinction
    hi = simulate(GrowthParams(0.9, trials=5000, seed=2)).extinction
    assert lo > hi


def test_scan_monotone_with_common_numbers():
    rows = threshold_scan(np.linspace(0.5, 0.8, 7), GrowthParams(0.5, trials=5000, seed=9))
    drifts = [r.drift for r in rows]
    assert drifts == sorted(drifts)
    x = zero_crossing(rows)
    assert x is not None and 0.6 < x < 0.72


def test_zero_crossing_none():
    rows = threshold_scan([0.8, 0.9], GrowthParams(0.8, trials=100))
    assert zero_crossing(rows) is None
