"""Seesaw module initialization."""
from seesaw.base import BaseSeesaw, cq_weights, restart_rng
from seesaw.power import DecoderPowerIteration, EncoderPowerIteration, block_fidelity, power_decoder, power_encoder
from seesaw.symmetric import (
    SymmetricSeesaw,
    cq_seesaw,
    decoder_phase,
    encoder_phase,
    identity_encoder,
    lift_encoder,
    random_symmetric_cptp,
)
from seesaw.explicit import ExplicitSeesaw, explicit_seesaw
from seesaw.verification import pack_code, unpack_code, verify_archive_file, verify_code

__all__ = [
    "BaseSeesaw",
    "cq_weights",
    "restart_rng",
    "DecoderPowerIteration",
    "EncoderPowerIteration",
    "block_fidelity",
    "power_decoder",
    "power_encoder",
    "SymmetricSeesaw",
    "cq_seesaw",
    "decoder_phase",
    "encoder_phase",
    "identity_encoder",
    "lift_encoder",
    "random_symmetric_cptp",
    "ExplicitSeesaw",
    "explicit_seesaw",
    "pack_code",
    "unpack_code",
    "verify_archive_file",
    "verify_code",
]
