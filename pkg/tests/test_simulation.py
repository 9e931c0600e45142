import math
from collections import Counter

import numpy as np
import pytest

from lapret.errors import UnknownScenario, ValidationError
from lapret.simulation import (
    ALPHA_GRID,
    DAY_GRID,
    ScenarioSpec,
    d_hat_for,
    draw_contamination,
    generate,
    mu_bump,
    mu_wave,
    surface,
    sweep,
)


def test_surface_values():
    assert mu_bump(3.5) == 0.0
    assert surface(1).d == 11
    # piecewise wave at t = 3: positive branch, argument 3.5*pi/15*0.5
    assert float(mu_wave(3)) == pytest.approx(math.sin(3.5 * math.pi / 15 * 0.5), abs=1e-15)
    assert float(mu_wave(3)) == pytest.approx(0.35837, abs=1e-5)


def test_scenarios_1_and_2_share_mu1():
    s1, s2 = surface(1), surface(2)
    assert np.array_equal(s1.mu1(DAY_GRID), s2.mu1(DAY_GRID))
    assert (s1.true_event, s2.true_event) == (14, 9)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_mu1_zero_through_true_lapret(k):
    s = surface(k)
    grid = np.arange(1, s.true_lapret + 1)
    assert np.all(s.mu1(grid) == 0)
    assert np.all(s.mu0(DAY_GRID) == 0)


def test_unknown_scenario():
    with pytest.raises(UnknownScenario):
        surface(4)
    with pytest.raises(ValidationError):
        ScenarioSpec(2, -1.0)
    with pytest.raises(ValidationError):
        ScenarioSpec(2, 0.1, "f9")


@pytest.mark.parametrize("k", [1, 2, 3])
def test_zero_noise_identity_and_roundtrip(k):
    data = generate(ScenarioSpec(k, 0.0, "f1", n_units=20))
    s = surface(k)
    assert np.array_equal(data.observed[:10], np.tile(s.mu1(DAY_GRID), (10, 1)))
    assert np.all(data.event_times == s.true_event)
    assert data.potential[0].true_lapret == s.true_lapret
    d_hat, d_floor, n = d_hat_for(data, 10, 0.2)
    assert (d_hat, d_floor, n) == (float(s.d), s.d, 10)


@pytest.mark.parametrize("alpha", [6, 11, 16])
def test_zero_noise_moderate_alpha(alpha):
    data = generate(ScenarioSpec(2, 0.0, "f1", n_units=10))
    assert d_hat_for(data, alpha, 0.2)[0] == 6.0


def test_f2_shift_frequencies():
    shifts = draw_contamination(np.random.default_rng(5), "f2", 10_000)
    freq = Counter(shifts.tolist())
    for s, p in {-1: 0.25, 0: 0.5, 1: 0.25}.items():
        assert abs(freq[s] / 10_000 - p) < 0.02


@pytest.mark.parametrize("f", ["f1", "f2", "f3", "f4"])
def test_event_times_stay_in_range(f):
    for k in (1, 2, 3):
        data = generate(ScenarioSpec(k, 0.01, f, n_units=400, seed=2))
        assert data.event_times.min() >= 1 and data.event_times.max() <= 16
        assert all(u.event_time is None for u in data.units[200:])


def test_generation_is_reproducible():
    a = generate(ScenarioSpec(3, 0.02, "f3", seed=8))
    b = generate(ScenarioSpec(3, 0.02, "f3", seed=8))
    assert a.observed.tobytes() == b.observed.tobytes()
    assert a.event_times.tobytes() == b.event_times.tobytes()
    c = generate(ScenarioSpec(3, 0.02, "f3", seed=9))
    assert a.observed.tobytes() != c.observed.tobytes()


def test_flat_spec_has_no_effect():
    data = generate(ScenarioSpec(2, 0.0, flat=True, n_units=10))
    assert np.all(data.observed == 0)
    assert data.potential[0].true_lapret is None


def test_default_sweep_cardinality_and_determinism():
    res = sweep(2, seed=1)
    # alpha runs 1, 6, ..., 96: twenty values
    assert len(ALPHA_GRID) == 20
    assert len(res.rows) == 4 * 4 * len(ALPHA_GRID) * 6 == 1920
    assert res.rows == sweep(2, seed=1).rows
    row = res.lookup(11, 0.2, 0.005, "f1")
    assert row[5] == 6


def test_sweep_alpha_endpoints_majority():
    wins = 0
    for seed in range(5):
        res = sweep(2, [0.01], ["f1"], [16, 96], [0.2], seed=seed)
        d16, d96 = res.column("d_hat")
        wins += (d96 or 0.0) <= d16
    assert wins >= 3


def test_sweep_rejects_empty_grid():
    with pytest.raises(ValidationError):
        sweep(2, [], ["f1"])
