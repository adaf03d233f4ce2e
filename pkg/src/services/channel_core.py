"""
Dense Choi-matrix algebra for quantum states and channels.

Channels are stored as unnormalized Choi matrices Γ on (input ⊗ output),
row-major with the input factor leftmost. All functions are pure.
"""
import logging
from math import prod
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy import linalg

from core.exceptions import (
    InvalidCompositionError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidKrausError,
    NotTracePreservingError,
)
from core.models import ChoiMatrix, DensityOperator, ValidationMode, ValidationReport

logger = logging.getLogger(__name__)

KRAUS_COMPLETENESS_TOL = 1e-10


def hermitize(x: np.ndarray) -> np.ndarray:
    """Average with the conjugate transpose."""
    return 0.5 * (x + x.conj().T)


# ---------------------------------------------------------------------------
# Partial operations
# ---------------------------------------------------------------------------

def _check_dims(x: np.ndarray, dims: Sequence[int]) -> List[int]:
    dims = [int(d) for d in dims]
    total = prod(dims)
    if x.ndim != 2 or x.shape != (total, total):
        raise InvalidDimensionError(f"Subsystem dims {dims} do not match matrix shape {x.shape}")
    return dims


def partial_trace(x: np.ndarray, dims: Sequence[int], systems: Iterable[int]) -> np.ndarray:
    """Trace out the listed subsystems."""
    dims = _check_dims(x, dims)
    traced = sorted(set(systems), reverse=True)
    t = x.reshape(dims + dims)
    for s in traced:
        half = t.ndim // 2
        t = np.trace(t, axis1=s, axis2=s + half)
    keep = prod(d for i, d in enumerate(dims) if i not in traced)
    return t.reshape(keep, keep)


def partial_transpose(x: np.ndarray, dims: Sequence[int], systems: Iterable[int]) -> np.ndarray:
    """Transpose the listed subsystems."""
    dims = _check_dims(x, dims)
    n = len(dims)
    t = x.reshape(dims + dims)
    for s in set(systems):
        t = np.swapaxes(t, s, s + n)
    return t.reshape(x.shape)


def permute_systems(x: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new factor i is old factor perm[i]."""
    dims = _check_dims(x, dims)
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise InvalidDimensionError(f"{list(perm)} is not a permutation of {n} systems")
    t = x.reshape(dims + dims)
    t = t.transpose(list(perm) + [p + n for p in perm])
    return t.reshape(x.shape)


def partial_op(x: np.ndarray, dims: Sequence[int], which: str, systems: Sequence[int]) -> np.ndarray:
    """Dispatch to partial trace ('trace'), partial transpose ('transpose') or 'permute'."""
    if which == "trace":
        return partial_trace(x, dims, systems)
    if which == "transpose":
        return partial_transpose(x, dims, systems)
    if which == "permute":
        return permute_systems(x, dims, systems)
    raise InvalidInputError(f"Unknown partial operation '{which}'")


# ---------------------------------------------------------------------------
# States and elementary channels
# ---------------------------------------------------------------------------

def mes(d: int) -> DensityOperator:
    """Maximally entangled state Φ^d = (1/d) Σ_ij |ii⟩⟨jj|."""
    if d < 1:
        raise InvalidDimensionError(f"MES dimension must be >= 1, got {d}")
    v = np.zeros(d * d, dtype=complex)
    v[[i * d + i for i in range(d)]] = 1.0
    return DensityOperator(dim=d * d, rho=np.outer(v, v) / d)


def identity_channel(d: int) -> ChoiMatrix:
    return ChoiMatrix(d, d, d * mes(d).rho)


def trace_channel(d: int) -> ChoiMatrix:
    """Discard the input (d → 1)."""
    return ChoiMatrix(d, 1, np.eye(d, dtype=complex))


def replacement_channel(d_in: int, state: np.ndarray) -> ChoiMatrix:
    """Trace the input and prepare `state`."""
    d_out = state.shape[0]
    return ChoiMatrix(d_in, d_out, np.kron(np.eye(d_in), state).astype(complex))


def random_channel(d_in: int, d_out: int, rng: np.random.Generator, rank: Optional[int] = None) -> ChoiMatrix:
    """Random CPTP map from a Haar-like Stinespring isometry (QR of a complex Gaussian)."""
    rank = rank or d_in * d_out
    if d_out * rank < d_in:
        raise InvalidDimensionError(f"Rank {rank} is too small for an isometry {d_in} -> {d_out}")
    g = rng.standard_normal((d_out * rank, d_in)) + 1j * rng.standard_normal((d_out * rank, d_in))
    iso, _ = np.linalg.qr(g)
    kraus = iso.reshape(rank, d_out, d_in)
    return choi_from_kraus(list(kraus), d_in, d_out)


def choi_from_kraus(
    kraus: Sequence[np.ndarray],
    dim_in: Optional[int] = None,
    dim_out: Optional[int] = None,
    require_trace_preserving: bool = True,
    tol: float = KRAUS_COMPLETENESS_TOL,
) -> ChoiMatrix:
    """
    Build Γ = Σ_i |K_i⟩⟩⟨⟨K_i| with |K⟩⟩ = Σ_a |a⟩ ⊗ K|a⟩.

    Args:
        kraus: Kraus operators, each dim_out × dim_in
        dim_in: Input dimension (inferred from the first operator if omitted)
        dim_out: Output dimension (inferred likewise)
        require_trace_preserving: Enforce Σ K†K = I within `tol`
        tol: Completeness tolerance

    Returns:
        The unnormalized Choi matrix
    """
    ops = [np.asarray(k, dtype=complex) for k in kraus]
    if not ops:
        raise InvalidKrausError("At least one Kraus operator is required")
    dim_out = dim_out or ops[0].shape[0]
    dim_in = dim_in or ops[0].shape[1]
    for k in ops:
        if k.shape != (dim_out, dim_in):
            raise InvalidKrausError(
                f"Kraus operator of shape {k.shape} does not map {dim_in} -> {dim_out}"
            )
    if require_trace_preserving:
        completeness = sum(k.conj().T @ k for k in ops)
        deviation = float(np.max(np.abs(completeness - np.eye(dim_in))))
        if deviation > tol:
            raise NotTracePreservingError(
                f"Kraus completeness violated by {deviation:.3e} (tolerance {tol:.1e})"
            )
    vecs = np.stack([k.T.reshape(-1) for k in ops], axis=1)
    return ChoiMatrix(dim_in, dim_out, hermitize(vecs @ vecs.conj().T))


def kraus_from_choi(channel: ChoiMatrix, tol: float = 1e-12) -> List[np.ndarray]:
    """Canonical Kraus operators from the eigendecomposition of Γ."""
    evals, evecs = linalg.eigh(hermitize(channel.gamma))
    cutoff = tol * max(float(np.max(np.abs(evals))), 1.0)
    ops = []
    for lam, vec in zip(evals[::-1], evecs.T[::-1]):
        if lam <= cutoff:
            continue
        ops.append(np.sqrt(lam) * vec.reshape(channel.dim_in, channel.dim_out).T)
    return ops


def complementary_channel(kraus: Sequence[np.ndarray]) -> ChoiMatrix:
    """
    Complementary channel of the Stinespring isometry V = Σ_i K_i ⊗ |i⟩_E.

    The environment basis is labelled by the Kraus index, so the result
    depends on the Kraus representation only up to an isometry on E.
    """
    stacked = np.stack([np.asarray(k, dtype=complex) for k in kraus], axis=0)  # [i, b, a]
    rank, dim_out, dim_in = stacked.shape
    env_kraus = [stacked[:, b, :] for b in range(dim_out)]
    return choi_from_kraus(env_kraus, dim_in, rank)


# ---------------------------------------------------------------------------
# Channel algebra
# ---------------------------------------------------------------------------

def apply(channel: ChoiMatrix, x: np.ndarray) -> np.ndarray:
    """N(X) = Tr_A[(X^T ⊗ I_B) Γ^N]."""
    if x.shape != (channel.dim_in, channel.dim_in):
        raise InvalidInputError(
            f"Operator of shape {x.shape} cannot be fed to a channel with input dimension {channel.dim_in}"
        )
    return np.einsum("ac,abcd->bd", x, channel.tensor)


def apply_local(channel: ChoiMatrix, x: np.ndarray, dims: Sequence[int], site: int) -> np.ndarray:
    """Apply `channel` to tensor factor `site` of a multipartite operator."""
    dims = _check_dims(x, dims)
    if dims[site] != channel.dim_in:
        raise InvalidInputError(
            f"Subsystem {site} has dimension {dims[site]}, channel expects {channel.dim_in}"
        )
    n = len(dims)
    t = x.reshape(dims + dims)
    out = np.tensordot(t, channel.tensor, axes=([site, n + site], [0, 2]))
    out = np.moveaxis(out, [-2, -1], [site, n + site])
    new_dims = list(dims)
    new_dims[site] = channel.dim_out
    size = prod(new_dims)
    return out.reshape(size, size)


def compose(first: ChoiMatrix, second: ChoiMatrix) -> ChoiMatrix:
    """Choi matrix of second ∘ first: Tr_B[(Γ^first)^{T_B} Γ^second]."""
    if first.dim_out != second.dim_in:
        raise InvalidCompositionError(
            f"Cannot compose {first.dim_in}->{first.dim_out} with {second.dim_in}->{second.dim_out}"
        )
    g = np.einsum("ipjq,pkql->ikjl", first.tensor, second.tensor)
    size = first.dim_in * second.dim_out
    return ChoiMatrix(first.dim_in, second.dim_out, hermitize(g.reshape(size, size)))


def tensor(left: ChoiMatrix, right: ChoiMatrix) -> ChoiMatrix:
    """Γ^{M⊗N}: Kronecker product reordered from (A1 B1 A2 B2) to (A1 A2 B1 B2)."""
    g = np.kron(left.gamma, right.gamma)
    dims = [left.dim_in, left.dim_out, right.dim_in, right.dim_out]
    g = permute_systems(g, dims, [0, 2, 1, 3])
    return ChoiMatrix(left.dim_in * right.dim_in, left.dim_out * right.dim_out, g)


def adjoint(channel: ChoiMatrix) -> ChoiMatrix:
    """Hilbert–Schmidt adjoint: Γ^{N*}[(b,a),(b',a')] = Γ^N[(a',b'),(a,b)]."""
    g = channel.tensor.transpose(3, 2, 1, 0)
    size = channel.dim_in * channel.dim_out
    return ChoiMatrix(channel.dim_out, channel.dim_in, np.ascontiguousarray(g).reshape(size, size))


def entanglement_fidelity(channel: ChoiMatrix, d: Optional[int] = None) -> float:
    """⟨Φ^d| Γ/d |Φ^d⟩ for a d → d channel."""
    d = d or channel.dim_in
    if channel.dim_in != d or channel.dim_out != d:
        raise InvalidDimensionError(
            f"Entanglement fidelity needs a {d}->{d} channel, got {channel.dim_in}->{channel.dim_out}"
        )
    diag = [i * d + i for i in range(d)]
    return float(np.real(channel.gamma[np.ix_(diag, diag)].sum())) / d ** 2


def validate(channel: ChoiMatrix, mode: ValidationMode = ValidationMode.CPTP) -> ValidationReport:
    """
    Report the worst violation of Hermiticity, positivity and the marginal constraint.

    PSD and PPT violations are the negative parts of the smallest eigenvalues,
    relative to the matrix 1-norm.
    """
    g = channel.gamma
    scale = max(float(np.linalg.norm(g, 1)), 1e-300)
    herm = float(np.max(np.abs(g - g.conj().T))) if g.size else 0.0
    h = hermitize(g)
    psd = max(0.0, -float(linalg.eigvalsh(h)[0])) / scale
    dims = [channel.dim_in, channel.dim_out]

    marginal = 0.0
    ppt = None
    if mode is ValidationMode.CPTP:
        marginal = float(np.max(np.abs(partial_trace(h, dims, [1]) - np.eye(channel.dim_in))))
    elif mode is ValidationMode.CPU:
        marginal = float(np.max(np.abs(partial_trace(h, dims, [0]) - np.eye(channel.dim_out))))
    elif mode is ValidationMode.PPT:
        pt = hermitize(partial_transpose(h, dims, [1]))
        ppt = max(0.0, -float(linalg.eigvalsh(pt)[0])) / scale

    report = ValidationReport(hermiticity=herm, psd=psd, marginal=marginal, ppt=ppt)
    logger.debug(f"Validated {channel.dim_in}->{channel.dim_out} channel ({mode.value}): {report.to_dict()}")
    return report
