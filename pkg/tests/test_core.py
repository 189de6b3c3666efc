import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rngbias import core
from rngbias.core import Condition, StudyRecord


def test_effect_size_binary_passthrough():
    assert core.effect_size(0.52, 2) == 0.52


def test_effect_size_four_choice():
    # 0.4 * 3 / (1 + 0.4 * 2) = 1.2 / 1.8
    assert core.effect_size(0.4, 4) == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_effect_size_chance_maps_to_half():
    for kappa in (2, 3, 4, 5, 10):
        assert core.effect_size(1.0 / kappa, kappa) == pytest.approx(0.5, abs=1e-12)


def test_effect_size_rejects_bad_input():
    with pytest.raises(ValueError):
        core.effect_size(1.2)
    with pytest.raises(ValueError):
        core.effect_size(0.5, 1)
    with pytest.raises(ValueError):
        core.effect_size(float("nan"))


@given(st.floats(0.0, 1.0), st.integers(2, 50))
def test_effect_size_round_trip(p, kappa):
    pi = core.effect_size(p, kappa)
    assert 0.0 <= pi <= 1.0
    assert core.p_obs_from_effect_size(pi, kappa) == pytest.approx(p, abs=1e-9)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(3, 20))
def test_effect_size_monotone(a, b, kappa):
    lo, hi = sorted((a, b))
    assert core.effect_size(lo, kappa) <= core.effect_size(hi, kappa) + 1e-15


def test_standard_error_values():
    assert core.standard_error(0.5, 0.5, 10_000) == pytest.approx(0.005, abs=1e-15)
    assert core.standard_error(0.5, 0.5, 4) == pytest.approx(0.25, abs=1e-15)


def test_standard_error_reduces_to_binomial():
    for p, n in [(0.3, 100), (0.51, 10_000), (0.9, 7)]:
        assert core.standard_error(p, p, n) == pytest.approx(math.sqrt(p * (1 - p) / n), rel=1e-12)


def test_standard_error_degenerate():
    for pi, p in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)]:
        with pytest.raises(ValueError):
            core.standard_error(pi, p, 100)
    with pytest.raises(ValueError):
        core.standard_error(0.5, 0.5, 0)


def test_z_score():
    assert core.z_score(0.51, 0.005) == pytest.approx(2.0)
    assert core.z_score(0.5, 0.01) == 0.0
    with pytest.raises(ValueError):
        core.z_score(0.5, 0.0)


def test_pi_from_z_worked_example():
    pi = core.pi_from_z(2.0, 10_000)
    # frozen oracle: root of 2 pi^2 + 48 pi - 25 = 0
    assert pi == pytest.approx((-48 + math.sqrt(48**2 + 200)) / 4, abs=1e-12)
    assert pi == pytest.approx(0.51, abs=1e-4)


def test_pi_from_z_zero():
    assert core.pi_from_z(0.0, 1000) == 0.5


@given(st.floats(-50, 50), st.integers(1, 10**8))
def test_pi_from_z_inverts_z(z, n):
    pi = core.pi_from_z(z, n)
    assert 0.0 < pi < 1.0
    se = core.standard_error(pi, 0.5, n)
    assert core.z_score(pi, se) == pytest.approx(z, abs=1e-6 * max(1.0, abs(z)))


@given(st.floats(-20, 20), st.floats(-20, 20), st.integers(1, 10**6))
def test_pi_from_z_monotone(a, b, n):
    lo, hi = sorted((a, b))
    assert core.pi_from_z(lo, n) <= core.pi_from_z(hi, n) + 1e-15


def test_condition_parse():
    assert Condition.parse("treatment") is Condition.TREATMENT
    assert Condition.parse(" Control ") is Condition.CONTROL
    assert Condition.parse(Condition.CALIBRATION) is Condition.CALIBRATION
    with pytest.raises(ValueError):
        Condition.parse("placebo")


def test_record_derived_values():
    r = StudyRecord("a", 10_000, 0.51)
    assert r.pi == 0.51
    assert r.se == pytest.approx(math.sqrt(0.51 * 0.49 / 10_000), rel=1e-12)
    assert r.z == pytest.approx(0.01 / r.se)


def test_record_degenerate_has_nan_se():
    r = StudyRecord("a", 10, 1.0)
    assert r.pi == 1.0
    assert math.isnan(r.se) and math.isnan(r.z)


def test_record_validation():
    with pytest.raises(ValueError):
        StudyRecord("a", 0, 0.5)
    with pytest.raises(ValueError):
        StudyRecord("a", 10, 1.5)
    with pytest.raises(ValueError):
        StudyRecord("a", 10, 0.5, kappa=1)


def test_record_sort_key_missing_month_last():
    a = StudyRecord("b", 10, 0.5, pub_year=1990, pub_month=12)
    b = StudyRecord("a", 10, 0.5, pub_year=1990, pub_month=None)
    c = StudyRecord("c", 10, 0.5, pub_year=1989, pub_month=None)
    assert sorted([b, a, c], key=lambda r: r.sort_key) == [c, a, b]


def _records(pis, sizes):
    return [StudyRecord(f"s{i}", n, p) for i, (p, n) in enumerate(zip(pis, sizes))]


def test_summarize_hand_values():
    recs = _records([0.4, 0.5, 0.6, 0.5, 0.5], [100, 100, 100, 100, 1000])
    s = core.summarize(recs)
    assert s.count == 5
    assert s.mean_pi == pytest.approx(0.5)
    assert s.mean_se == pytest.approx(np.std([0.4, 0.5, 0.6, 0.5, 0.5], ddof=1) / math.sqrt(5))
    assert s.weighted_mean_pi == pytest.approx(0.5)
    assert s.wp_estimate == pytest.approx(0.5)


def test_summarize_single_record():
    r = StudyRecord("a", 10_000, 0.51)
    s = core.summarize([r])
    assert s.mean_se == r.se
    assert math.isnan(s.wp_estimate)


def test_summarize_empty():
    with pytest.raises(ValueError):
        core.summarize([])


def test_large_study_mean_takes_largest():
    pis = [0.9, 0.9, 0.5, 0.5, 0.5, 0.5, 0.5, 0.9]
    sizes = [10, 20, 1000, 2000, 3000, 4000, 5000, 30]
    mean, se = core.large_study_mean(pis, sizes, quantile=0.1, minimum=5)
    assert mean == pytest.approx(0.5)
    assert se == pytest.approx(math.sqrt(0.25 / 15000))


def test_merge_and_average():
    a = core.DatabaseSummary(4, 0.51, 0.002, 0.5)
    b = core.DatabaseSummary(6, 0.49, 0.001, 0.5)
    m = core.merge_and_average(a, b)
    assert m.count == 10
    assert m.mean_of_means == pytest.approx(0.50)
    assert m.pooled_mean == pytest.approx((4 * 0.51 + 6 * 0.49) / 10)
    assert m.wp_estimate == pytest.approx(0.5)
    assert m.as_summary().mean_pi == m.mean_of_means
    assert m.as_summary("pooled").mean_pi == m.pooled_mean


@given(
    st.lists(st.floats(0.01, 0.99), min_size=2, max_size=30),
    st.lists(st.floats(0.01, 0.99), min_size=2, max_size=30),
)
def test_merge_pooled_se_matches_direct(xs, ys):
    ra = _records(xs, [100] * len(xs))
    rb = [StudyRecord(f"t{i}", 100, p) for i, p in enumerate(ys)]
    m = core.merge_and_average(core.summarize(ra), core.summarize(rb))
    direct = core.summarize(ra + rb)
    assert m.pooled_mean == pytest.approx(direct.mean_pi, abs=1e-12)
    assert m.pooled_se == pytest.approx(direct.mean_se, rel=1e-6, abs=1e-12)
