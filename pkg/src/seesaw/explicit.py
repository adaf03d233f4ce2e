"""
Unrestricted seesaw on dense Choi matrices.

Encoder and decoder are arbitrary channels on the full n-fold spaces, stored
as single-block operators; the channel is applied site by site so the Choi
matrix of N^{⊗n} is never formed.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from core.exceptions import InvalidParameterError, SizeLimitError
from core.models import BlockOperator, ChoiMatrix, CodeResult, EffectiveChannelSpec, SeesawConfig, SeesawMode
from infrastructure.tracing import get_tracer
from seesaw.base import BaseSeesaw
from seesaw.power import (
    DecoderPowerIteration,
    EncoderPowerIteration,
    block_fidelity,
    random_cptp_blocks,
    unital_start,
)
from seesaw.symmetric import lift_encoder
from services.channel_core import adjoint, apply_local
from services.effective_channel import effective_channel
from symmetry.blocks import DENSE_LABEL, dense_block_operator
from symmetry.dense import to_dense

tracer = get_tracer(__name__)
logger = logging.getLogger(__name__)

DENSE_KEY = 0


def apply_sitewise(channel: ChoiMatrix, x: np.ndarray, d_ref: int, n: int) -> np.ndarray:
    """(id_R ⊗ N^{⊗n})(X) for X on R ⊗ (C^{d_in})^{⊗n}."""
    dims = [d_ref] + [channel.dim_in] * n
    for site in range(1, n + 1):
        x = apply_local(channel, x, dims, site)
        dims[site] = channel.dim_out
    return x


def dense_channel(encoder: BlockOperator, site: ChoiMatrix, n: int) -> BlockOperator:
    """Γ^{N^{⊗n} ∘ E} as a single block."""
    gamma = apply_sitewise(site, encoder.blocks[DENSE_LABEL], encoder.d_ref, n)
    return dense_block_operator(gamma, encoder.d_ref, n)


def dense_adjoint_channel(decoder: BlockOperator, site: ChoiMatrix, n: int) -> BlockOperator:
    """Γ^{(D ∘ N^{⊗n})*} as a single block."""
    gamma = apply_sitewise(adjoint(site), decoder.blocks[DENSE_LABEL], decoder.d_ref, n)
    return dense_block_operator(gamma, decoder.d_ref, n)


class ExplicitSeesaw(BaseSeesaw):
    """Dense seesaw; `site_channel` defaults to the flagged effective channel."""

    def __init__(self, site_channel: Optional[ChoiMatrix] = None, **kwargs):
        super().__init__(**kwargs)
        self.site_channel = site_channel

    def channel_for(self, config: SeesawConfig) -> ChoiMatrix:
        if self.site_channel is not None:
            return self.site_channel
        return effective_channel(EffectiveChannelSpec(erasure_prob=config.erasure_prob))

    def validate(self, config: SeesawConfig) -> None:
        super().validate(config)
        if config.mode is not SeesawMode.EXPLICIT:
            raise InvalidParameterError(f"Explicit engine cannot run mode '{config.mode.value}'")
        if config.n > config.explicit_max_n:
            site = self.channel_for(config)
            rows = config.d * site.dim_out ** config.n
            raise SizeLimitError(
                f"Explicit seesaw at n={config.n} needs {rows}x{rows} dense Choi matrices "
                f"(~{rows * rows * 16 / 2**30:.1f} GiB each); cap is n <= {config.explicit_max_n}"
            )

    def initial_state(self, config: SeesawConfig, index: int, rng: np.random.Generator) -> BlockOperator:
        site = self.channel_for(config)
        if index == 0 and config.warm_start is not None:
            warm = config.warm_start
            if warm.n == config.n - 1:
                warm = lift_encoder(warm)
            return dense_block_operator(to_dense(warm), config.d, config.n)
        dim = config.d * site.dim_in ** config.n
        template = dense_block_operator(np.zeros((dim, dim), dtype=complex), config.d, config.n)
        return random_cptp_blocks(template, rng, config.pinv_cutoff)

    def decoder_step(self, config, encoder, decoders):
        site = self.channel_for(config)
        with tracer.start_as_current_span("seesaw.decoder_phase", attributes={"n": config.n}):
            channel = dense_channel(encoder, site, config.n)
            start = decoders[DENSE_KEY] if decoders is not None else unital_start(channel)
            result = DecoderPowerIteration(
                config.d, config.power_tol, config.max_power_iters, config.pinv_cutoff
            ).iterate(channel, start)
        return result.fidelity, {DENSE_KEY: result.operator}

    def encoder_step(self, config, encoder, decoders):
        site = self.channel_for(config)
        with tracer.start_as_current_span("seesaw.encoder_phase", attributes={"n": config.n}):
            target = dense_adjoint_channel(decoders[DENSE_KEY], site, config.n)
            result = EncoderPowerIteration(
                config.d, config.power_tol, config.max_power_iters, config.pinv_cutoff
            ).iterate(target, encoder)
        return result.fidelity, result.operator

    def finalize(self, config: SeesawConfig, encoder: BlockOperator, decoders) -> CodeResult:
        channel = dense_channel(encoder, self.channel_for(config), config.n)
        fidelity = block_fidelity(channel, decoders[DENSE_KEY], config.d)
        return CodeResult(
            n=config.n,
            d=config.d,
            mode=SeesawMode.EXPLICIT,
            fidelity=fidelity,
            encoder_blocks=encoder,
            decoders=decoders,
            channel_blocks={DENSE_KEY: channel},
            weights={DENSE_KEY: 1.0},
            per_k_fidelities={DENSE_KEY: fidelity},
            erasure_prob=config.erasure_prob,
        )


def explicit_seesaw(config: SeesawConfig, site_channel: Optional[ChoiMatrix] = None) -> CodeResult:
    return ExplicitSeesaw(site_channel).run(config)


def dense_decoder_fidelity(
    encoder: BlockOperator,
    n: int,
    site: ChoiMatrix,
    tol: float = 1e-11,
    max_iters: int = 5000,
) -> Tuple[float, BlockOperator]:
    """F_D of N^{⊗n} ∘ E by dense power iteration (the decoder half-step alone)."""
    channel = dense_channel(encoder, site, n)
    result = DecoderPowerIteration(encoder.d_ref, tol, max_iters).iterate(channel, unital_start(channel))
    return result.fidelity, result.operator
