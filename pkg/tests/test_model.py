import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lapret.errors import InvalidEta, OverlapTooShort, RoleMismatch, ValidationError
from lapret.model import UnitSeries, build_pair, impute_matrix, impute_treatment

from conftest import unit

small_floats = st.floats(-100, 100, allow_nan=False, width=32)


def test_build_pair_arithmetic():
    t = unit("t", [2, 4, 5], event=3)
    c = unit("c", [2, 1, 1])
    p = build_pair(t, c, 0)
    assert p.delta_map() == {1: 0.0, 2: 3.0, 3: 4.0}
    assert p.ddelta_map() == {2: 3.0, 3: 1.0}
    assert math.isnan(p.ddelta[0])


def test_identical_series_give_zero_delta():
    y = [1.5, 2.0, 7.0, 3.0]
    p = build_pair(unit("t", y, event=4), unit("c", y), 0)
    assert np.all(p.delta == 0)
    assert np.all(p.ddelta[1:] == 0)


def test_sim2_treated_against_flat_control_is_mu1():
    days = np.arange(1, 17)
    mu1 = np.maximum(0.0, np.sin(2 * math.pi / 15 * (days - 3.5)))
    p = build_pair(unit("t", mu1, event=9), unit("c", np.zeros(16)), 0)
    assert np.array_equal(p.delta, mu1)


def test_overlap_uses_common_days():
    t = unit("t", [1, 2, 3, 4, 5], event=5)
    c = unit("c", [0, 0, 0, 0], first_day=2)
    p = build_pair(t, c, 0)
    assert list(p.days) == [2, 3, 4, 5]


def test_role_and_overlap_errors():
    t = unit("t", [1, 2, 3], event=3)
    c = unit("c", [1, 2, 3])
    with pytest.raises(RoleMismatch):
        build_pair(c, t, 0)
    with pytest.raises(RoleMismatch):
        build_pair(t, unit("t2", [1, 2, 3], event=2), 0)
    with pytest.raises(OverlapTooShort):
        build_pair(unit("t", [1, 2], event=2), unit("c", [1, 2]), 0)


def test_unit_validation():
    with pytest.raises(ValidationError):
        unit("a", [1, 2, 3], event=4)
    with pytest.raises(ValidationError):
        UnitSeries("a", np.ones(3), np.zeros(0), 0, 2)
    with pytest.raises(ValidationError):
        UnitSeries("a", np.ones(3), np.zeros(0), 1, None)
    u = unit("a", [1, 2, 3])
    with pytest.raises(ValueError):
        u.outcomes[0] = 9.0


def test_lagged_diff_drops_first_day():
    u = unit("a", [1, 4, 9, 16], event=3).lagged_diff()
    assert u.first_day == 2 and list(u.outcomes) == [3, 5, 7] and u.event_time == 3


@given(st.lists(small_floats, min_size=3, max_size=20), st.data())
def test_telescoping(values, data):
    n = len(values)
    t = unit("t", values, event=n)
    c = unit("c", data.draw(st.lists(small_floats, min_size=n, max_size=n)))
    p = build_pair(t, c, 0)
    a = data.draw(st.integers(0, n - 1))
    b = data.draw(st.integers(a, n - 1))
    # fsum keeps the check exact up to the rounding of the differences themselves
    s = math.fsum(p.ddelta[a + 1 : b + 1])
    assert s == pytest.approx(p.delta[b] - p.delta[a], abs=1e-9 * (1 + np.abs(p.delta).max()))


@given(st.lists(small_floats, min_size=3, max_size=12), st.lists(small_floats, min_size=3, max_size=12))
def test_swapping_roles_negates_delta(a, b):
    n = min(len(a), len(b))
    a, b = a[:n], b[:n]
    fwd = build_pair(unit("x", a, event=n), unit("y", b), 0).delta_map()
    rev = build_pair(unit("y", b, event=n), unit("x", a), 0).delta_map()
    assert fwd == {d: -v for d, v in rev.items()}


def _flip_correlation(p_treated: float, flip: float) -> float:
    # 2x2 joint of (D, Z) enumerated cell by cell
    joint = {}
    for d, z in itertools.product((0, 1), repeat=2):
        pd = p_treated if d else 1 - p_treated
        joint[d, z] = pd * (flip if z != d else 1 - flip)
    ed = sum(p * d for (d, _), p in joint.items())
    ez = sum(p * z for (_, z), p in joint.items())
    edz = sum(p * d * z for (d, z), p in joint.items())
    vd = sum(p * d * d for (d, _), p in joint.items()) - ed**2
    vz = sum(p * z * z for (_, z), p in joint.items()) - ez**2
    return (edz - ed * ez) / math.sqrt(vd * vz)


def test_flip_oracle_value():
    assert _flip_correlation(0.5, 0.1) == pytest.approx(0.8, abs=1e-12)


def test_imputed_correlation_matches_oracle():
    d = np.array([0, 1] * 50)
    z = impute_matrix(d, 0.2, 10_000, seed=3)
    cors = [np.corrcoef(row, d)[0, 1] for row in z]
    assert abs(np.mean(cors) - _flip_correlation(0.5, 0.1)) < 0.02


@given(st.integers(0, 2**32 - 1), st.lists(st.integers(0, 1), min_size=1, max_size=30))
@settings(max_examples=50)
def test_eta_zero_is_identity(seed, d):
    z = impute_matrix(d, 0.0, 3, seed)
    assert (z == np.array(d)).all()


def test_impute_treatment_records():
    units = [unit("a", [1, 2, 3], event=2), unit("b", [1, 2, 3])]
    out = impute_treatment(units, 0.0, 3, seed=1)
    assert len(out) == 6
    assert [(a.unit_id, a.z, a.replicate_index) for a in out[:2]] == [("a", 1, 0), ("b", 0, 0)]
    assert impute_treatment(units, 0.5, 4, 9) == impute_treatment(units, 0.5, 4, 9)


@pytest.mark.parametrize("eta", [-0.1, 1.0, 1.5])
def test_invalid_eta(eta):
    with pytest.raises(InvalidEta):
        impute_matrix([0, 1], eta, 1, 0)
