"""
Classical-quantum symmetric seesaw for the flagged channel.

The encoder is S_n-invariant on R ⊗ A^n. Conditioned on k erasure flags the
decoder faces M_k = (P^{⊗k} ⊗ id^{⊗(n−k)}) ∘ E, which is S_k × S_{n−k}
invariant, so each decoder is optimized in its own block form and the
fidelities are averaged with the binomial flag weights.
"""
import logging
from typing import Dict, Optional, Tuple

import numpy as np

from core.exceptions import InvalidInputError, InvalidParameterError, UnsupportedDimensionError
from core.models import (
    BlockOperator,
    CodeResult,
    EffectiveChannelSpec,
    FlaggedSiteChannels,
    SeesawConfig,
    SeesawMode,
    SymmetricOperator,
)
from infrastructure.tracing import get_tracer
from seesaw.base import BaseSeesaw, cq_weights
from seesaw.power import (
    DecoderPowerIteration,
    EncoderPowerIteration,
    block_fidelity,
    random_cptp_blocks,
    unital_start,
)
from services.channel_core import adjoint, identity_channel
from services.effective_channel import pauli_flag_channel_k
from symmetry.blocks import build_converter, from_blocks, to_blocks
from symmetry.orbits import attach_idle_site, concat_orbit, from_single_site, pushforward, resymmetrize

tracer = get_tracer(__name__)
logger = logging.getLogger(__name__)


def _spec(erasure_prob: float) -> EffectiveChannelSpec:
    return EffectiveChannelSpec(erasure_prob=erasure_prob)


def random_symmetric_cptp(n: int, d_ref: int, rng: np.random.Generator, cutoff: float = 1e-12) -> SymmetricOperator:
    """Random S_n-invariant CPTP encoder R → (C²)^{⊗n}."""
    conv = build_converter(n, d_ref)
    return from_blocks(random_cptp_blocks(conv.empty(), rng, cutoff), conv)


def identity_encoder(n: int, d: int = 2) -> SymmetricOperator:
    """The code that sends the input through site 1 and idles the rest, twirled over S_n."""
    encoder = from_single_site(identity_channel(d))
    for _ in range(n - 1):
        encoder = lift_encoder(encoder)
    return encoder


def lift_encoder(encoder: SymmetricOperator) -> SymmetricOperator:
    """E_n ⊗ |0⟩⟨0| twirled over S_{n+1}: seeds a run at n+1 with the code found at n."""
    return resymmetrize([attach_idle_site(encoder, 0)], [1.0])


def channel_blocks(
    encoder: SymmetricOperator,
    k: int,
    spec: EffectiveChannelSpec = EffectiveChannelSpec(),
) -> BlockOperator:
    """Blocks of Γ^{M_k} under S_k × S_{n−k}."""
    n = encoder.n
    conv = build_converter(n, encoder.d_ref, (k, n - k))
    return to_blocks(concat_orbit(encoder, k, pauli_flag_channel_k(n, k, spec)), conv)


def _adjoint_sites(sites: FlaggedSiteChannels):
    return tuple(adjoint(c) for c in sites.site_channels)


def decoder_phase(
    n: int,
    encoder: SymmetricOperator,
    decoders: Optional[Dict[int, BlockOperator]] = None,
    erasure_prob: float = 0.5,
    tol: float = 1e-11,
    max_iters: int = 5000,
    pinv_cutoff: float = 1e-12,
) -> Tuple[float, Dict[int, BlockOperator], Dict[int, float]]:
    """
    Optimize each conditional decoder D_k against M_k.

    Returns:
        (Σ_k w_k F_D(M_k), decoders by k, per-k fidelities)
    """
    if encoder.n != n:
        raise InvalidInputError(f"Encoder acts on {encoder.n} sites, expected {n}")
    spec = _spec(erasure_prob)
    weights = cq_weights(n, erasure_prob)
    power = DecoderPowerIteration(encoder.d_ref, tol, max_iters, pinv_cutoff)
    new_decoders, per_k = {}, {}
    with tracer.start_as_current_span("seesaw.decoder_phase", attributes={"n": n}):
        for k in range(n + 1):
            blocks = channel_blocks(encoder, k, spec)
            start = decoders[k] if decoders is not None else unital_start(blocks)
            result = power.iterate(blocks, start)
            new_decoders[k], per_k[k] = result.operator, result.fidelity
            logger.debug(f"k={k}: F_D={result.fidelity:.12f} in {result.iterations} power steps")
    return sum(weights[k] * per_k[k] for k in per_k), new_decoders, per_k


def averaged_adjoint(
    n: int,
    decoders: Dict[int, BlockOperator],
    erasure_prob: float = 0.5,
) -> SymmetricOperator:
    """Σ_k w_k twirl(Γ^{(D_k ∘ N_k)*}) on R ⊗ A^n."""
    spec = _spec(erasure_prob)
    weights = cq_weights(n, erasure_prob)
    per_k, w = [], []
    for k in range(n + 1):
        decoder = decoders[k]
        conv = build_converter(n, decoder.d_ref, (k, n - k))
        sites = pauli_flag_channel_k(n, k, spec)
        per_k.append(pushforward(from_blocks(decoder, conv), _adjoint_sites(sites)))
        w.append(weights[k])
    return resymmetrize(per_k, w)


def encoder_phase(
    n: int,
    decoders: Dict[int, BlockOperator],
    encoder: SymmetricOperator,
    erasure_prob: float = 0.5,
    tol: float = 1e-11,
    max_iters: int = 5000,
    pinv_cutoff: float = 1e-12,
) -> Tuple[float, SymmetricOperator]:
    """Optimize the encoder against the flag-averaged channel seen by Alice."""
    d = encoder.d_ref
    conv = build_converter(n, d)
    with tracer.start_as_current_span("seesaw.encoder_phase", attributes={"n": n}):
        target = to_blocks(averaged_adjoint(n, decoders, erasure_prob), conv)
        power = EncoderPowerIteration(d, tol, max_iters, pinv_cutoff)
        result = power.iterate(target, to_blocks(encoder, conv))
    return result.fidelity, from_blocks(result.operator, conv)


def code_fidelity(
    encoder: SymmetricOperator,
    decoders: Dict[int, BlockOperator],
    erasure_prob: float = 0.5,
) -> Tuple[float, Dict[int, float], Dict[int, BlockOperator]]:
    """Σ_k w_k F(D_k ∘ M_k) recomputed from the stored encoder and decoders."""
    n, d = encoder.n, encoder.d_ref
    spec = _spec(erasure_prob)
    weights = cq_weights(n, erasure_prob)
    per_k, channels = {}, {}
    for k in range(n + 1):
        channels[k] = channel_blocks(encoder, k, spec)
        per_k[k] = block_fidelity(channels[k], decoders[k], d)
    return sum(weights[k] * per_k[k] for k in per_k), per_k, channels


class SymmetricSeesaw(BaseSeesaw):
    """Seesaw over permutation-invariant qubit encoders with flag-conditioned decoders."""

    def validate(self, config: SeesawConfig) -> None:
        super().validate(config)
        if config.mode is not SeesawMode.SYMMETRIC:
            raise InvalidParameterError(f"Symmetric engine cannot run mode '{config.mode.value}'")
        if config.d != 2:
            raise UnsupportedDimensionError(f"The symmetric seesaw needs d=2, got d={config.d}")
        warm = config.warm_start
        if warm is not None and warm.n not in (config.n - 1, config.n):
            raise InvalidParameterError(f"Warm start on {warm.n} sites cannot seed a run at n={config.n}")

    def initial_state(self, config: SeesawConfig, index: int, rng: np.random.Generator) -> SymmetricOperator:
        warm = config.warm_start
        if index == 0 and warm is not None:
            logger.info(f"Restart 0 warm-started from a {warm.n}-site code")
            return lift_encoder(warm) if warm.n == config.n - 1 else warm.copy()
        return random_symmetric_cptp(config.n, config.d, rng, config.pinv_cutoff)

    def decoder_step(self, config, encoder, decoders):
        f_decoder, decoders, _ = decoder_phase(
            config.n, encoder, decoders, config.erasure_prob,
            config.power_tol, config.max_power_iters, config.pinv_cutoff,
        )
        return f_decoder, decoders

    def encoder_step(self, config, encoder, decoders):
        return encoder_phase(
            config.n, decoders, encoder, config.erasure_prob,
            config.power_tol, config.max_power_iters, config.pinv_cutoff,
        )

    def finalize(self, config: SeesawConfig, encoder: SymmetricOperator, decoders) -> CodeResult:
        fidelity, per_k, channels = code_fidelity(encoder, decoders, config.erasure_prob)
        return CodeResult(
            n=config.n,
            d=config.d,
            mode=SeesawMode.SYMMETRIC,
            fidelity=fidelity,
            encoder_blocks=to_blocks(encoder, build_converter(config.n, config.d)),
            decoders=decoders,
            channel_blocks=channels,
            weights=cq_weights(config.n, config.erasure_prob),
            per_k_fidelities=per_k,
            encoder=encoder,
            erasure_prob=config.erasure_prob,
        )


def cq_seesaw(config: SeesawConfig) -> CodeResult:
    return SymmetricSeesaw().run(config)
