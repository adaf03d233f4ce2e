from math import sqrt

import numpy as np
import pytest

from core.exceptions import InvalidParameterError, SizeLimitError, UnsupportedDimensionError
from core.models import SeesawConfig, SeesawMode
from services.bounds import fidelity_upper_bounds
from services.channel_core import identity_channel
from services.effective_channel import effective_channel
from seesaw.base import cq_weights, restart_rng
from seesaw.explicit import ExplicitSeesaw, dense_decoder_fidelity, explicit_seesaw
from seesaw.power import (
    DecoderPowerIteration,
    EncoderPowerIteration,
    constraint_residual_tp,
    constraint_residual_unital,
    power_encoder,
    unital_start,
)
from seesaw.symmetric import (
    SymmetricSeesaw,
    averaged_adjoint,
    channel_blocks,
    code_fidelity,
    cq_seesaw,
    decoder_phase,
    encoder_phase,
    identity_encoder,
    lift_encoder,
    random_symmetric_cptp,
)
from seesaw.verification import pack_code, verify_code
from symmetry.blocks import build_converter, dense_block_operator, min_eigenvalue, to_blocks
from symmetry.dense import to_dense

PAULI_BRANCH_FIDELITY = (2 - sqrt(2)) / 2


def _assert_interleave_monotone(result, slack=1e-9):
    previous = -np.inf
    for record in result.trace:
        assert record.f_decoder >= previous - slack
        assert record.f_encoder >= record.f_decoder - slack
        previous = record.f_encoder


def test_cq_weights():
    assert cq_weights(2, 0.5) == pytest.approx({0: 0.25, 1: 0.5, 2: 0.25})
    assert sum(cq_weights(17, 0.5).values()) == pytest.approx(1.0)
    assert cq_weights(3, 0.0) == pytest.approx({0: 1.0, 1: 0.0, 2: 0.0, 3: 0.0})


def test_restart_streams_are_reproducible_and_distinct():
    a = restart_rng(7, 3).standard_normal(4)
    np.testing.assert_array_equal(a, restart_rng(7, 3).standard_normal(4))
    assert not np.allclose(a, restart_rng(7, 4).standard_normal(4))


@pytest.mark.parametrize("n", [1, 3, 5])
def test_random_symmetric_encoder_is_cptp(rng, n):
    blocks = to_blocks(random_symmetric_cptp(n, 2, rng), build_converter(n, 2))
    assert constraint_residual_tp(blocks) < 1e-10
    assert min_eigenvalue(blocks) > -1e-12


def test_identity_encoder_fidelities():
    fidelity, decoders, per_k = decoder_phase(1, identity_encoder(1))
    assert per_k[0] == pytest.approx(1.0, abs=1e-9)
    assert per_k[1] == pytest.approx(PAULI_BRANCH_FIDELITY, abs=1e-9)
    assert fidelity == pytest.approx(0.5 * (1 + PAULI_BRANCH_FIDELITY), abs=1e-9)
    assert max(constraint_residual_unital(d) for d in decoders.values()) < 1e-10


def test_lifted_encoder_is_symmetric_cptp():
    lifted = lift_encoder(identity_encoder(2))
    assert lifted.n == 3 and lifted.sizes == (3,)
    blocks = to_blocks(lifted, build_converter(3, 2))
    assert constraint_residual_tp(blocks) < 1e-12
    assert min_eigenvalue(blocks) > -1e-12


def test_decoder_power_trace_is_monotone(rng):
    encoder = random_symmetric_cptp(3, 2, rng)
    blocks = channel_blocks(encoder, 1)
    result = DecoderPowerIteration(2, tol=1e-13).iterate(blocks, unital_start(blocks))
    assert result.converged
    assert np.min(np.diff(result.trace)) >= -1e-12
    assert constraint_residual_unital(result.operator) < 1e-10


def test_encoder_power_trace_is_monotone(rng):
    n = 3
    encoder = random_symmetric_cptp(n, 2, rng)
    _, decoders, _ = decoder_phase(n, encoder)
    conv = build_converter(n, 2)
    target = to_blocks(averaged_adjoint(n, decoders), conv)
    result = EncoderPowerIteration(2, tol=1e-13).iterate(target, to_blocks(encoder, conv))
    assert np.min(np.diff(result.trace)) >= -1e-12
    assert constraint_residual_tp(result.operator) < 1e-10


def test_half_steps_do_not_lose_fidelity(rng):
    n = 3
    encoder = random_symmetric_cptp(n, 2, rng)
    f_decoder, decoders, _ = decoder_phase(n, encoder)
    f_encoder, improved = encoder_phase(n, decoders, encoder)
    assert f_encoder >= f_decoder - 1e-9
    recomputed, _, _ = code_fidelity(improved, decoders)
    assert recomputed == pytest.approx(f_encoder, abs=1e-9)


def test_code_fidelity_matches_decoder_phase(rng):
    encoder = random_symmetric_cptp(2, 2, rng)
    fidelity, decoders, per_k = decoder_phase(2, encoder)
    recomputed, recomputed_per_k, _ = code_fidelity(encoder, decoders)
    assert recomputed == pytest.approx(fidelity, abs=1e-12)
    assert recomputed_per_k == pytest.approx(per_k, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_flag_split_matches_dense_decoder(rng, n):
    encoder = random_symmetric_cptp(n, 2, rng)
    symmetric, _, _ = decoder_phase(n, encoder, tol=1e-14, max_iters=20000)
    dense_encoder = dense_block_operator(to_dense(encoder), 2, n)
    dense, _ = dense_decoder_fidelity(dense_encoder, n, effective_channel(), tol=1e-14, max_iters=20000)
    assert symmetric == pytest.approx(dense, abs=1e-8)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_block_encoder_step_matches_dense_step(rng, n):
    encoder = random_symmetric_cptp(n, 2, rng)
    _, decoders, _ = decoder_phase(n, encoder)
    target = averaged_adjoint(n, decoders)
    conv = build_converter(n, 2)
    blockwise, improved = power_encoder(to_blocks(target, conv), to_blocks(encoder, conv), 2, tol=1e-14, max_iters=20000)
    dense, dense_improved = power_encoder(
        dense_block_operator(to_dense(target), 2, n),
        dense_block_operator(to_dense(encoder), 2, n),
        2,
        tol=1e-14,
        max_iters=20000,
    )
    assert blockwise == pytest.approx(dense, abs=1e-8)
    assert constraint_residual_tp(improved) < 1e-10
    assert constraint_residual_tp(dense_improved) < 1e-10


def test_engine_validation():
    with pytest.raises(InvalidParameterError):
        SymmetricSeesaw().validate(SeesawConfig(n=0))
    with pytest.raises(InvalidParameterError):
        SymmetricSeesaw().validate(SeesawConfig(n=2, mode=SeesawMode.EXPLICIT))
    with pytest.raises(UnsupportedDimensionError):
        SymmetricSeesaw().validate(SeesawConfig(n=2, d=3))
    with pytest.raises(InvalidParameterError):
        SymmetricSeesaw().validate(SeesawConfig(n=4, warm_start=identity_encoder(2)))
    with pytest.raises(SizeLimitError):
        ExplicitSeesaw().validate(SeesawConfig(n=7, mode=SeesawMode.EXPLICIT))
    with pytest.raises(InvalidParameterError):
        ExplicitSeesaw().validate(SeesawConfig(n=2, mode=SeesawMode.EXPLICIT, erasure_prob=1.5))


def test_restart_defaults():
    assert SymmetricSeesaw().restart_count(SeesawConfig(n=4)) == 16
    assert SymmetricSeesaw().restart_count(SeesawConfig(n=17)) == 32
    assert SymmetricSeesaw().restart_count(SeesawConfig(n=17, restarts=3)) == 3


def test_explicit_engine_on_noiseless_channel():
    config = SeesawConfig(n=1, mode=SeesawMode.EXPLICIT, restarts=2)
    result = explicit_seesaw(config, site_channel=identity_channel(2))
    assert result.fidelity == pytest.approx(1.0, abs=1e-6)


def test_symmetric_run_is_deterministic():
    config = SeesawConfig(n=2, restarts=2, master_seed=11)
    first, second = cq_seesaw(config), cq_seesaw(config)
    assert first.fidelity == second.fidelity
    np.testing.assert_array_equal(first.encoder.coeffs, second.encoder.coeffs)
    _assert_interleave_monotone(first)


def test_warm_start_seeds_restart_zero():
    config = SeesawConfig(n=2, restarts=1, warm_start=identity_encoder(1))
    result = cq_seesaw(config)
    assert result.restart_index == 0
    assert result.converged
    assert verify_code(pack_code(result)).passed


@pytest.mark.slow
def test_one_site_symmetric_equals_explicit():
    symmetric = cq_seesaw(SeesawConfig(n=1, restarts=4, master_seed=1))
    explicit = explicit_seesaw(SeesawConfig(n=1, mode=SeesawMode.EXPLICIT, restarts=4, master_seed=1))
    assert symmetric.fidelity == pytest.approx(explicit.fidelity, abs=1e-6)
    assert symmetric.fidelity >= 0.5 * (1 + PAULI_BRANCH_FIDELITY) - 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_symmetric_never_beats_explicit(n):
    symmetric = cq_seesaw(SeesawConfig(n=n, restarts=4, master_seed=n))
    explicit = explicit_seesaw(
        SeesawConfig(n=n, mode=SeesawMode.EXPLICIT, restarts=1, master_seed=n, warm_start=symmetric.encoder)
    )
    assert symmetric.fidelity <= explicit.fidelity + 1e-9
    _assert_interleave_monotone(symmetric)
    _assert_interleave_monotone(explicit)


def _warm_curve(n_max, restarts):
    warm, curve = None, []
    for n in range(1, n_max + 1):
        result = cq_seesaw(SeesawConfig(n=n, restarts=restarts, master_seed=n, warm_start=warm))
        assert result.fidelity <= 1.0 + 1e-9
        curve.append(result.fidelity)
        warm = result.encoder
    return curve


@pytest.mark.slow
def test_warm_started_curve_is_monotone():
    curve = _warm_curve(4, restarts=8)
    assert all(b >= a - 1e-6 for a, b in zip(curve, curve[1:]))


@pytest.mark.headline
def test_warm_started_curve_to_ten_sites():
    curve = _warm_curve(10, restarts=16)
    assert all(b >= a - 1e-6 for a, b in zip(curve, curve[1:]))


@pytest.mark.headline
def test_seventeen_sites_beat_two_extendible_bound():
    result = cq_seesaw(SeesawConfig(n=17, restarts=32, threads=8))
    assert result.fidelity > fidelity_upper_bounds(2).two_ext
    assert verify_code(pack_code(result)).passed
