import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.exceptions import CrossingNotFoundError, InvalidParameterError
from core.models import BoundKind, CodeResult, EffectiveParams, SeesawMode
from services.bounds import (
    coherent_information,
    coherent_information_dense,
    coherent_variance,
    crossing_point,
    dense_moment,
    error_exponent_threshold,
    error_exponent_upper,
    exponent_argmax,
    fidelity_upper_bounds,
    log_spaced_ns,
    lower_bound_be,
    lower_bound_normal,
    make_bound,
    pairing_moments,
    petz_iota,
    petz_root,
    sample_curve,
    seesaw_rate_curve,
    third_abs_moment,
    upper_bound_erasure,
    upper_bound_ppt,
)

PARAMS = EffectiveParams.superactivation()


def test_coherent_information_and_variance():
    p = np.sqrt(2) - 1
    binary_entropy = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    assert coherent_information(PARAMS) == pytest.approx(0.5 * (1 - binary_entropy), abs=1e-12)
    assert coherent_information(PARAMS) == pytest.approx(0.0107, abs=1e-4)
    assert coherent_variance(PARAMS) == pytest.approx(1.009, abs=1e-3)
    assert third_abs_moment(PARAMS) == pytest.approx(1.061, abs=2e-3)


def test_pairing_agrees_with_closed_forms():
    mean, variance = pairing_moments(PARAMS)
    assert mean == pytest.approx(coherent_information(PARAMS), abs=1e-10)
    assert variance == pytest.approx(coherent_variance(PARAMS), abs=1e-10)


def test_dense_relative_entropy_agrees():
    iota = coherent_information(PARAMS)
    assert coherent_information_dense(PARAMS) == pytest.approx(iota, abs=1e-10)
    assert dense_moment(PARAMS, 2) - iota ** 2 == pytest.approx(coherent_variance(PARAMS), abs=1e-8)


@pytest.mark.parametrize("eps,kind,expected", [
    (0.25, BoundKind.NORMAL, 4218),
    (0.25, BoundKind.BERRY_ESSEEN, 4504),
])
def test_crossing_points(eps, kind, expected):
    assert crossing_point(eps, kind) == expected


def test_crossing_is_first_point_above_converses():
    n = crossing_point(0.25)
    converse = max(upper_bound_ppt(n, 0.25), upper_bound_erasure(n, 0.25))
    assert lower_bound_normal(n, 0.25, PARAMS) > converse
    converse = max(upper_bound_ppt(n - 1, 0.25), upper_bound_erasure(n - 1, 0.25))
    assert lower_bound_normal(n - 1, 0.25, PARAMS) <= converse


def test_crossing_errors():
    with pytest.raises(InvalidParameterError):
        crossing_point(0.6)
    with pytest.raises(InvalidParameterError):
        crossing_point(0.25, BoundKind.PPT_UPPER)
    with pytest.raises(CrossingNotFoundError):
        crossing_point(0.25, cap=1000)


def test_berry_esseen_is_invalid_at_small_n():
    assert lower_bound_be(3, 0.25, PARAMS) is None
    assert lower_bound_be(100, 0.25, PARAMS) is not None
    sample = make_bound(BoundKind.BERRY_ESSEEN).evaluate(3)
    assert not sample.valid


@given(n=st.integers(min_value=500, max_value=10 ** 7), eps=st.floats(min_value=0.01, max_value=0.49))
@settings(max_examples=50, deadline=None)
def test_berry_esseen_below_normal(n, eps):
    corrected = lower_bound_be(n, eps, PARAMS)
    if corrected is not None:
        assert corrected <= lower_bound_normal(n, eps, PARAMS) + 1e-15


@given(n=st.integers(min_value=1, max_value=10 ** 6), eps=st.floats(min_value=0.01, max_value=0.49))
def test_normal_bound_increases_with_n(n, eps):
    assert lower_bound_normal(n + 1, eps, PARAMS) > lower_bound_normal(n, eps, PARAMS)


def test_converse_values():
    assert upper_bound_erasure(1, 0.25) == pytest.approx(1.0)
    assert upper_bound_ppt(1, 0.25) == pytest.approx(-np.log2(0.75))
    assert upper_bound_ppt(10, 0.0) == 0.0
    with pytest.raises(InvalidParameterError):
        upper_bound_erasure(1, 0.5)


def test_fidelity_upper_bounds():
    assert fidelity_upper_bounds(2) == (0.5, 0.75)
    with pytest.raises(InvalidParameterError):
        fidelity_upper_bounds(1)


def test_petz_renyi_quantities():
    assert petz_iota(1.0, PARAMS) == pytest.approx(coherent_information(PARAMS))
    assert petz_iota(1.0 - 1e-6, PARAMS) == pytest.approx(coherent_information(PARAMS), abs=1e-4)
    root = petz_root(PARAMS)
    assert root == pytest.approx(0.9704, abs=1e-3)
    assert abs(petz_iota(root, PARAMS)) < 1e-9
    assert exponent_argmax(PARAMS) == pytest.approx(0.9849, abs=1e-3)
    alphas = np.linspace(0.51, 0.999, 200)
    values = [petz_iota(a, PARAMS) for a in alphas]
    assert np.all(np.diff(values) > 0)


def test_error_exponent_bound_is_a_probability():
    assert error_exponent_upper(10, 2, PARAMS) == 1.0
    assert 0.0 <= error_exponent_upper(10 ** 6, 2, PARAMS) < 0.1


@pytest.mark.slow
@pytest.mark.parametrize("target,expected", [(0.25, 1.5e5), (0.5, 1.2e5)])
def test_error_exponent_thresholds(target, expected):
    assert error_exponent_threshold(target, 2, PARAMS) == pytest.approx(expected, rel=0.15)


def test_log_spaced_ns():
    ns = log_spaced_ns(1, 10 ** 4, 20)
    assert ns[0] == 1 and ns[-1] == 10 ** 4
    assert ns == sorted(set(ns))
    with pytest.raises(InvalidParameterError):
        log_spaced_ns(10, 5, 3)


def test_sample_curve_rows():
    curve = sample_curve(make_bound(BoundKind.BERRY_ESSEEN), [3, 5000, 100], 0.25, threads=2)
    rows = curve.rows()
    assert [r["n"] for r in rows] == [3, 100, 5000]
    assert rows[0] == {"n": 3, "value": None, "valid": False}
    assert rows[-1]["valid"] and rows[-1]["value"] > 0


def test_make_bound_rejects_seesaw_kind():
    with pytest.raises(InvalidParameterError):
        make_bound(BoundKind.SEESAW)


def test_seesaw_rate_curve():
    def code(n, fidelity):
        return CodeResult(n, 2, SeesawMode.SYMMETRIC, fidelity, None, {}, {}, {}, {})

    curve = seesaw_rate_curve([code(4, 0.8), code(2, 0.7)], 0.25)
    assert [s.n for s in curve.samples] == [2, 4]
    assert [s.valid for s in curve.samples] == [False, True]
    assert curve.samples[1].value == pytest.approx(0.25)
