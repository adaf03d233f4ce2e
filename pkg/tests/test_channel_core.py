import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.exceptions import (
    InvalidCompositionError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidKrausError,
    NotTracePreservingError,
)
from core.models import ChoiMatrix, ValidationMode
from services.channel_core import (
    adjoint,
    apply,
    apply_local,
    choi_from_kraus,
    complementary_channel,
    compose,
    entanglement_fidelity,
    identity_channel,
    kraus_from_choi,
    mes,
    partial_op,
    partial_trace,
    partial_transpose,
    permute_systems,
    random_channel,
    replacement_channel,
    tensor,
    trace_channel,
    validate,
)
from conftest import random_matrix, seeds

dims = st.integers(min_value=1, max_value=3)


@given(d_in=dims, d_out=dims, seed=seeds)
@settings(max_examples=25, deadline=None)
def test_random_channel_is_cptp(d_in, d_out, seed):
    channel = random_channel(d_in, d_out, np.random.default_rng(seed))
    assert validate(channel).passed(1e-10)


@given(d_in=dims, d_out=dims, seed=seeds)
@settings(max_examples=25, deadline=None)
def test_adjoint_is_unital_and_involutive(d_in, d_out, seed):
    channel = random_channel(d_in, d_out, np.random.default_rng(seed))
    dual = adjoint(channel)
    assert (dual.dim_in, dual.dim_out) == (d_out, d_in)
    assert validate(dual, ValidationMode.CPU).passed(1e-10)
    np.testing.assert_allclose(adjoint(dual).gamma, channel.gamma, atol=1e-14)


@given(seed=seeds)
@settings(max_examples=20, deadline=None)
def test_adjoint_duality(seed):
    rng = np.random.default_rng(seed)
    channel = random_channel(2, 3, rng)
    x, y = random_matrix(rng, 2), random_matrix(rng, 3)
    lhs = np.trace(apply(channel, x) @ y)
    rhs = np.trace(x @ apply(adjoint(channel), y))
    assert abs(lhs - rhs) < 1e-10


def test_identity_channel(rng):
    x = random_matrix(rng, 3)
    np.testing.assert_allclose(apply(identity_channel(3), x), x, atol=1e-14)
    assert entanglement_fidelity(identity_channel(3)) == pytest.approx(1.0, abs=1e-14)


def test_trace_and_replacement_channels(rng):
    x = random_matrix(rng, 2)
    assert apply(trace_channel(2), x)[0, 0] == pytest.approx(np.trace(x))
    state = np.diag([0.25, 0.75]).astype(complex)
    out = apply(replacement_channel(2, state), x)
    np.testing.assert_allclose(out, np.trace(x) * state, atol=1e-12)
    assert mes(2).trace == pytest.approx(1.0)


def test_compose_with_identity_and_associativity(random_cptp):
    a, b, c = random_cptp(2, 3), random_cptp(3, 2), random_cptp(2, 2)
    np.testing.assert_allclose(compose(identity_channel(2), a).gamma, a.gamma, atol=1e-12)
    np.testing.assert_allclose(compose(a, identity_channel(3)).gamma, a.gamma, atol=1e-12)
    left = compose(compose(a, b), c).gamma
    right = compose(a, compose(b, c)).gamma
    np.testing.assert_allclose(left, right, atol=1e-10)


def test_compose_matches_sequential_application(rng, random_cptp):
    a, b = random_cptp(2, 3), random_cptp(3, 2)
    x = random_matrix(rng, 2)
    np.testing.assert_allclose(apply(compose(a, b), x), apply(b, apply(a, x)), atol=1e-10)


def test_compose_dimension_mismatch(random_cptp):
    with pytest.raises(InvalidCompositionError):
        compose(random_cptp(2, 3), random_cptp(2, 2))


def test_tensor_acts_factorwise(rng, random_cptp):
    a, b = random_cptp(2, 3), random_cptp(2, 2)
    x, y = random_matrix(rng, 2), random_matrix(rng, 2)
    out = apply(tensor(a, b), np.kron(x, y))
    np.testing.assert_allclose(out, np.kron(apply(a, x), apply(b, y)), atol=1e-10)


def test_apply_local_matches_tensor_with_identity(rng, random_cptp):
    channel = random_cptp(2, 3)
    x = random_matrix(rng, 4)
    local = apply_local(channel, x, [2, 2], 1)
    full = apply(tensor(identity_channel(2), channel), x)
    np.testing.assert_allclose(local, full, atol=1e-10)


def test_apply_rejects_wrong_input_shape(random_cptp):
    with pytest.raises(InvalidInputError):
        apply(random_cptp(2, 2), np.eye(3))


def test_partial_trace_and_transpose(rng):
    x, y = random_matrix(rng, 2), random_matrix(rng, 3)
    np.testing.assert_allclose(partial_trace(np.kron(x, y), [2, 3], [1]), x * np.trace(y), atol=1e-12)
    np.testing.assert_allclose(partial_transpose(np.kron(x, y), [2, 3], [0]), np.kron(x.T, y), atol=1e-14)


def test_permute_systems_and_dispatch(rng):
    x, y, z = random_matrix(rng, 2), random_matrix(rng, 3), random_matrix(rng, 2)
    xyz = np.kron(np.kron(x, y), z)
    np.testing.assert_allclose(permute_systems(xyz, [2, 3, 2], [2, 0, 1]), np.kron(np.kron(z, x), y), atol=1e-14)
    np.testing.assert_allclose(partial_op(xyz, [2, 3, 2], "trace", [0, 2]), y * np.trace(x) * np.trace(z), atol=1e-12)
    np.testing.assert_allclose(partial_op(mes(2).rho, [2, 2], "trace", [1]), np.eye(2) / 2, atol=1e-15)
    with pytest.raises(InvalidDimensionError):
        permute_systems(xyz, [2, 3, 2], [0, 0, 1])
    with pytest.raises(InvalidDimensionError):
        partial_op(xyz, [2, 2, 2], "trace", [0])
    with pytest.raises(InvalidInputError):
        partial_op(xyz, [2, 3, 2], "swap", [0])


def test_kraus_roundtrip(random_cptp):
    channel = random_cptp(2, 2)
    rebuilt = choi_from_kraus(kraus_from_choi(channel), 2, 2, tol=1e-9)
    np.testing.assert_allclose(rebuilt.gamma, channel.gamma, atol=1e-10)


def test_choi_from_kraus_errors():
    with pytest.raises(InvalidKrausError):
        choi_from_kraus([])
    with pytest.raises(InvalidKrausError):
        choi_from_kraus([np.eye(2), np.eye(3)])
    with pytest.raises(NotTracePreservingError):
        choi_from_kraus([2 * np.eye(2)])
    # Unnormalized maps are allowed when trace preservation is not required
    assert choi_from_kraus([2 * np.eye(2)], require_trace_preserving=False).gamma[0, 0] == pytest.approx(4.0)


def test_complementary_channel_is_cptp(random_cptp):
    channel = random_cptp(2, 2)
    complement = complementary_channel(kraus_from_choi(channel))
    assert validate(complement).passed(1e-10)


def test_complement_of_unitary_is_trace():
    complement = complementary_channel(kraus_from_choi(identity_channel(2)))
    assert complement.dim_out == 1
    np.testing.assert_allclose(complement.gamma, np.eye(2), atol=1e-12)


def test_choi_shape_checked():
    with pytest.raises(InvalidDimensionError):
        ChoiMatrix(2, 2, np.eye(3))
    with pytest.raises(InvalidDimensionError):
        entanglement_fidelity(trace_channel(2))


@pytest.mark.parametrize("bad", [np.nan, np.inf, complex(0, np.nan)])
def test_choi_entries_must_be_finite(bad):
    gamma = identity_channel(2).gamma.astype(complex)
    gamma[1, 2] = bad
    with pytest.raises(InvalidInputError):
        ChoiMatrix(2, 2, gamma)


def test_validate_flags_non_cptp():
    report = validate(ChoiMatrix(2, 2, 2 * identity_channel(2).gamma))
    assert not report.passed()
    assert report.marginal == pytest.approx(1.0)
