"""Services module initialization."""
from services.channel_core import (
    adjoint,
    apply,
    choi_from_kraus,
    compose,
    entanglement_fidelity,
    identity_channel,
    partial_trace,
    tensor,
    validate,
)
from services.effective_channel import effective_channel, pauli_flag_channel_k, verify_effective_equivalence
from services.bounds import crossing_point, fidelity_upper_bounds, make_bound, sample_curve

__all__ = [
    "adjoint",
    "apply",
    "choi_from_kraus",
    "compose",
    "entanglement_fidelity",
    "identity_channel",
    "partial_trace",
    "tensor",
    "validate",
    "effective_channel",
    "pauli_flag_channel_k",
    "verify_effective_equivalence",
    "crossing_point",
    "fidelity_upper_bounds",
    "make_bound",
    "sample_curve",
]
