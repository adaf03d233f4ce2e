"""
Channel power iteration on block-diagonal Choi matrices.

Each step sandwiches the current operator with the fixed channel blocks,
Γ' = M·X·M, and renormalizes: decoders (adjoint Choi, unital) per block
through (1 ⊗ S^{-1/2}) with S = Tr_R Γ'; encoders (trace preserving)
globally through (T^{-1/2} ⊗ 1) with T = Σ_λ f_λ Tr_V Γ'_λ.
"""
import logging
from abc import abstractmethod
from typing import Tuple

import numpy as np
from scipy import linalg

from core.exceptions import ConvergenceError, InvalidInputError
from core.interfaces import IPowerIteration
from core.models import BlockOperator, PowerIterationResult
from symmetry.blocks import block_inner, trace_local, trace_reference

logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-12
RESAMPLE_ATTEMPTS = 5


def inverse_sqrt(s: np.ndarray, cutoff: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pseudo-inverse square root of a PSD matrix.

    Returns:
        (S^{-1/2} on the support, projector onto the null space); eigenvalues
        below cutoff·max are treated as zero
    """
    vals, vecs = linalg.eigh(0.5 * (s + s.conj().T))
    top = max(float(vals[-1]), 0.0) if len(vals) else 0.0
    keep = vals > cutoff * top if top > 0 else np.zeros(len(vals), dtype=bool)
    inv = np.zeros_like(vals)
    inv[keep] = 1.0 / np.sqrt(vals[keep])
    null_vecs = vecs[:, ~keep]
    return (vecs * inv) @ vecs.conj().T, null_vecs @ null_vecs.conj().T


def block_fidelity(channel: BlockOperator, other: BlockOperator, d: int) -> float:
    """(1/d²) Σ_λ f_λ Tr[M_λ X_λ]."""
    if set(channel.blocks) != set(other.blocks):
        raise InvalidInputError("Channel and decoder blocks carry different irrep labels")
    return block_inner(channel, other) / d ** 2


def _hermitian(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + x.conj().T)


def unital_start(template: BlockOperator) -> BlockOperator:
    """(1/d_R)·1 in every block: the decoder that ignores its input."""
    d = template.d_ref
    return template.with_blocks({
        lam: np.eye(x.shape[0], dtype=complex) / d for lam, x in template.blocks.items()
    })


def normalize_unital(g: BlockOperator, cutoff: float = 1e-12) -> Tuple[BlockOperator, int]:
    """Blockwise (1 ⊗ S^{-1/2}) Γ' (1 ⊗ S^{-1/2}) + (1/d_R) 1 ⊗ P_null."""
    d = g.d_ref
    blocks, filled = {}, 0
    for lam, x in g.blocks.items():
        root, null = inverse_sqrt(trace_reference(x, d), cutoff)
        sandwich = np.kron(np.eye(d), root)
        out = sandwich @ x @ sandwich
        if np.any(null):
            out = out + np.kron(np.eye(d), null) / d
            filled += 1
        blocks[lam] = _hermitian(out)
    return g.with_blocks(blocks), filled


def normalize_trace_preserving(g: BlockOperator, cutoff: float = 1e-12) -> Tuple[BlockOperator, bool]:
    """(T^{-1/2} ⊗ 1) Γ'_λ (T^{-1/2} ⊗ 1); a null space of T is sent to |0…0⟩ in the first block."""
    d = g.d_ref
    root, null = inverse_sqrt(trace_local(g), cutoff)
    blocks = {}
    for lam, x in g.blocks.items():
        sandwich = np.kron(root, np.eye(g.dims[lam]))
        blocks[lam] = _hermitian(sandwich @ x @ sandwich)
    filled = bool(np.any(null))
    if filled:
        first = next(iter(blocks))
        m = g.dims[first]
        vacuum = np.zeros((m, m))
        vacuum[0, 0] = 1.0 / g.multiplicities[first]
        blocks[first] = blocks[first] + np.kron(null, vacuum)
    return g.with_blocks(blocks), filled


class PowerIteration(IPowerIteration):
    """Shared apply-normalize-check loop."""

    def __init__(self, d: int, tol: float = 1e-11, max_iters: int = 5000, pinv_cutoff: float = 1e-12):
        self.d = d
        self.tol = tol
        self.max_iters = max_iters
        self.pinv_cutoff = pinv_cutoff

    @abstractmethod
    def normalize(self, g: BlockOperator) -> BlockOperator:
        """Project the sandwiched operator back onto the constraint set."""
        pass

    def step(self, channel: BlockOperator, current: BlockOperator) -> BlockOperator:
        sandwiched = current.with_blocks({
            lam: channel.blocks[lam] @ x @ channel.blocks[lam] for lam, x in current.blocks.items()
        })
        return self.normalize(sandwiched)

    def iterate(self, channel: BlockOperator, start: BlockOperator) -> PowerIterationResult:
        current = start
        fidelity = block_fidelity(channel, current, self.d)
        trace = [fidelity]
        best, best_fidelity = current, fidelity
        for iteration in range(1, self.max_iters + 1):
            current = self.step(channel, current)
            new_fidelity = block_fidelity(channel, current, self.d)
            trace.append(new_fidelity)
            if new_fidelity < fidelity - MONOTONE_SLACK:
                logger.debug(f"Power step {iteration} lowered F by {fidelity - new_fidelity:.3e}")
            if new_fidelity > best_fidelity:
                best, best_fidelity = current, new_fidelity
            if new_fidelity - fidelity < self.tol:
                return PowerIterationResult(best_fidelity, best, iteration, True, trace)
            fidelity = new_fidelity
        logger.warning(f"Power iteration stopped after {self.max_iters} steps at F={best_fidelity:.12f}")
        return PowerIterationResult(best_fidelity, best, self.max_iters, False, trace)


class DecoderPowerIteration(PowerIteration):
    """Optimizes Γ^{D*} subject to Tr_R Γ^{D*} = 1 in every block."""

    def normalize(self, g: BlockOperator) -> BlockOperator:
        out, filled = normalize_unital(g, self.pinv_cutoff)
        if filled:
            logger.debug(f"Completed the null space of S in {filled} decoder blocks")
        return out


class EncoderPowerIteration(PowerIteration):
    """Optimizes Γ^E subject to Σ_λ f_λ Tr_V Γ^E_λ = 1_R."""

    def normalize(self, g: BlockOperator) -> BlockOperator:
        out, filled = normalize_trace_preserving(g, self.pinv_cutoff)
        if filled:
            logger.warning("Encoder normalization hit a singular T; null space sent to |0…0⟩")
        return out


def power_decoder(channel: BlockOperator, start: BlockOperator, d: int, tol: float = 1e-11, **kwargs) -> Tuple[float, BlockOperator]:
    result = DecoderPowerIteration(d, tol, **kwargs).iterate(channel, start)
    return result.fidelity, result.operator


def power_encoder(channel: BlockOperator, start: BlockOperator, d: int, tol: float = 1e-11, **kwargs) -> Tuple[float, BlockOperator]:
    result = EncoderPowerIteration(d, tol, **kwargs).iterate(channel, start)
    return result.fidelity, result.operator


def random_cptp_blocks(
    template: BlockOperator,
    rng: np.random.Generator,
    cutoff: float = 1e-12,
) -> BlockOperator:
    """
    G·G† per block with complex Gaussian G, then the trace-preserving sandwich.

    Raises:
        ConvergenceError: If every draw yields a singular T
    """
    for attempt in range(RESAMPLE_ATTEMPTS):
        blocks = {}
        for lam, x in template.blocks.items():
            size = x.shape[0]
            g = (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) / np.sqrt(2.0)
            blocks[lam] = g @ g.conj().T
        raw = template.with_blocks(blocks)
        t_vals = linalg.eigvalsh(_hermitian(trace_local(raw)))
        if t_vals[0] > cutoff * t_vals[-1]:
            out, _ = normalize_trace_preserving(raw, cutoff)
            return out
        logger.warning(f"Random encoder draw {attempt} has singular T; resampling")
    raise ConvergenceError(f"No random encoder with invertible T after {RESAMPLE_ATTEMPTS} draws")


def constraint_residual_unital(op: BlockOperator) -> float:
    """max |Tr_R X_λ − 1| over blocks."""
    return max(
        float(np.max(np.abs(trace_reference(x, op.d_ref) - np.eye(op.dims[lam]))))
        for lam, x in op.blocks.items()
    )


def constraint_residual_tp(op: BlockOperator) -> float:
    """max |Σ_λ f_λ Tr_V X_λ − 1_R|."""
    return float(np.max(np.abs(trace_local(op) - np.eye(op.d_ref))))
