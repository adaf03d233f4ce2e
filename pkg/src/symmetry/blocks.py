"""
Schur–Weyl block form of permutation-invariant qubit operators.

For each factor S_m of the group, the isotypic component λ = (λ₁, λ₂) is
represented by the vectors |ψ_w⟩ = |singlet⟩^{⊗λ₂} ⊗ |Dicke_w^{λ₁−λ₂}⟩,
w = 0..λ₁−λ₂, which span one copy of the spin-(λ₁−λ₂)/2 irrep. The block of
an invariant X on R ⊗ (C²)^{⊗n} is ⟨r, ψ_w| X |r', ψ_w'⟩, with the reference
index leftmost. The orbit → block map is stored per factor as a dense real
matrix A_λ[(w, w'), t] = ⟨ψ_w| C_t |ψ_w'⟩.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import comb, prod, sqrt
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from core.exceptions import InvalidDimensionError, InvalidInputError, UnsupportedDimensionError
from core.models import BlockOperator, IrrepLabel, Partition, SymmetricOperator
from symmetry.orbits import multinomial, orbit_sizes, orbit_types
from symmetry.young import partitions, qubit_spin, ssyt_count, syt_count

logger = logging.getLogger(__name__)

QUBIT_PAIRS = 4
DENSE_LABEL: IrrepLabel = ()


@dataclass(frozen=True)
class FactorBasis:
    """Orbit → block data for one S_m factor."""
    size: int
    labels: Tuple[Partition, ...]
    dims: Dict[Partition, int]
    multiplicities: Dict[Partition, int]
    maps: Dict[Partition, np.ndarray]
    orbit_sizes: np.ndarray


def _block_coefficient(t: Sequence[int], singlets: int, spin2: int) -> Optional[Tuple[int, int, float]]:
    """(w, w', ⟨ψ_w|C_t|ψ_w'⟩) or None when C_t does not reach this block."""
    t00, t01, t10, t11 = t
    w = t10 + t11 - singlets
    w_ket = t01 + t11 - singlets
    if not (0 <= w <= spin2 and 0 <= w_ket <= spin2):
        return None
    numerator = 0
    for a in range(singlets + 1):
        rest = (t00 - (singlets - a), t01 - a, t10 - a, t11 - (singlets - a))
        if min(rest) < 0:
            continue
        numerator += (-1) ** a * comb(singlets, a) * multinomial(spin2, rest)
    if numerator == 0:
        return None
    return w, w_ket, numerator / sqrt(comb(spin2, w) * comb(spin2, w_ket))


@lru_cache(maxsize=None)
def factor_basis(size: int) -> FactorBasis:
    """Precompute A_λ for every λ ∈ Par(2, size)."""
    types = orbit_types(QUBIT_PAIRS, size)
    labels = tuple(partitions(2, size))
    dims, mults, maps = {}, {}, {}
    for lam in labels:
        singlets, spin2 = qubit_spin(lam)
        m = ssyt_count(lam, 2)
        a_map = np.zeros((m * m, len(types)))
        for col, t in enumerate(types):
            entry = _block_coefficient(t, singlets, spin2)
            if entry is not None:
                w, w_ket, value = entry
                a_map[w * m + w_ket, col] = value
        dims[lam], mults[lam], maps[lam] = m, syt_count(lam), a_map
    logger.debug(f"Built block maps for S_{size}: {len(labels)} irreps, {len(types)} orbit types")
    return FactorBasis(size, labels, dims, mults, maps, orbit_sizes(QUBIT_PAIRS, size))


@dataclass(frozen=True)
class BlockConverter:
    """Orbit ↔ block maps for the group S_{sizes[0]} × … on R ⊗ (C²)^{⊗n}."""
    sizes: Tuple[int, ...]
    d_ref: int
    factors: Tuple[FactorBasis, ...]

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def labels(self) -> List[IrrepLabel]:
        return [tuple(combo) for combo in product(*(f.labels for f in self.factors))]

    def local_dims(self, label: IrrepLabel) -> Tuple[int, ...]:
        return tuple(f.dims[lam] for f, lam in zip(self.factors, label))

    def dim(self, label: IrrepLabel) -> int:
        return prod(self.local_dims(label))

    def multiplicity(self, label: IrrepLabel) -> int:
        return prod(f.multiplicities[lam] for f, lam in zip(self.factors, label))

    def empty(self) -> BlockOperator:
        """Block operator with every block zero."""
        labels = self.labels
        return BlockOperator(
            sizes=self.sizes,
            d_ref=self.d_ref,
            blocks={lam: np.zeros((self.d_ref * self.dim(lam),) * 2, dtype=complex) for lam in labels},
            dims={lam: self.dim(lam) for lam in labels},
            multiplicities={lam: self.multiplicity(lam) for lam in labels},
        )


def build_converter(
    n: int,
    d_ref: int = 1,
    sizes: Optional[Sequence[int]] = None,
    d_local: int = 2,
) -> BlockConverter:
    """
    Converter for S_n (sizes=None) or S_{sizes[0]} × S_{sizes[1]} × ….

    Raises:
        UnsupportedDimensionError: For local dimension other than 2
    """
    if d_local != 2:
        raise UnsupportedDimensionError(f"Block maps are implemented for qubits only, got d={d_local}")
    sizes = (n,) if sizes is None else tuple(int(s) for s in sizes)
    if sum(sizes) != n or min(sizes) < 0 or d_ref < 1:
        raise InvalidDimensionError(f"Group sizes {sizes} and d_R={d_ref} do not describe {n} sites")
    return BlockConverter(sizes, d_ref, tuple(factor_basis(s) for s in sizes))


def _check_compatible(op_sizes: Tuple[int, ...], d_ref: int, conv: BlockConverter) -> None:
    if tuple(op_sizes) != conv.sizes or d_ref != conv.d_ref:
        raise InvalidInputError(
            f"Operator with sizes {tuple(op_sizes)}, d_R={d_ref} does not match converter "
            f"with sizes {conv.sizes}, d_R={conv.d_ref}"
        )


def to_blocks(op: SymmetricOperator, conv: BlockConverter) -> BlockOperator:
    """Orbit coordinates → Schur–Weyl blocks."""
    _check_compatible(op.sizes, op.d_ref, conv)
    if op.d_local != 2:
        raise UnsupportedDimensionError(f"Block maps are implemented for qubits only, got d={op.d_local}")
    f = len(conv.sizes)
    out = conv.empty()
    for label in conv.labels:
        y = op.coeffs
        for basis, lam in zip(conv.factors, label):
            y = np.tensordot(y, basis.maps[lam], axes=([2], [1]))
        ms = conv.local_dims(label)
        y = y.reshape((conv.d_ref, conv.d_ref) + tuple(m for m in ms for _ in (0, 1)))
        # (r, r', w1, w1', w2, w2', ...) -> (r, w1, w2, ..., r', w1', w2', ...)
        bra = [0] + [2 + 2 * i for i in range(f)]
        ket = [1] + [3 + 2 * i for i in range(f)]
        size = conv.d_ref * prod(ms)
        out.blocks[label] = y.transpose(bra + ket).reshape(size, size)
    return out


def from_blocks(blocks: BlockOperator, conv: BlockConverter) -> SymmetricOperator:
    """Schur–Weyl blocks → orbit coordinates: x_t = Σ_λ f_λ ⟨A_λ[:, t], X_λ⟩ / |C_t|."""
    _check_compatible(blocks.sizes, blocks.d_ref, conv)
    f = len(conv.sizes)
    shape = (conv.d_ref, conv.d_ref) + tuple(len(b.orbit_sizes) for b in conv.factors)
    coeffs = np.zeros(shape, dtype=complex)
    for label in conv.labels:
        if label not in blocks.blocks:
            raise InvalidInputError(f"Missing block {label}")
        ms = conv.local_dims(label)
        y = blocks.blocks[label].reshape((conv.d_ref,) + ms + (conv.d_ref,) + ms)
        # (r, w..., r', w'...) -> (r, r', w1, w1', w2, w2', ...)
        order = [0, f + 1] + [ax for i in range(f) for ax in (1 + i, f + 2 + i)]
        y = y.transpose(order).reshape((conv.d_ref, conv.d_ref) + tuple(m * m for m in ms))
        for basis, lam in zip(conv.factors, label):
            y = np.tensordot(y, basis.maps[lam], axes=([2], [0]))
        coeffs += conv.multiplicity(label) * y
    norm = conv.factors[0].orbit_sizes
    for basis in conv.factors[1:]:
        norm = np.multiply.outer(norm, basis.orbit_sizes)
    return SymmetricOperator(2, conv.d_ref, conv.sizes, coeffs / norm)


def dense_block_operator(matrix: np.ndarray, d_ref: int, n: int) -> BlockOperator:
    """Wrap a dense operator on R ⊗ S as a single block of multiplicity 1."""
    if matrix.shape[0] % d_ref:
        raise InvalidDimensionError(f"Matrix of size {matrix.shape[0]} has no reference factor {d_ref}")
    m = matrix.shape[0] // d_ref
    return BlockOperator(
        sizes=(n,),
        d_ref=d_ref,
        blocks={DENSE_LABEL: matrix},
        dims={DENSE_LABEL: m},
        multiplicities={DENSE_LABEL: 1},
    )


# ---------------------------------------------------------------------------
# Block algebra
# ---------------------------------------------------------------------------

def _check_labels(a: BlockOperator, b: BlockOperator) -> None:
    if set(a.blocks) != set(b.blocks) or a.d_ref != b.d_ref:
        raise InvalidInputError("Block operators have different labels or reference dimensions")


def block_product(a: BlockOperator, b: BlockOperator) -> BlockOperator:
    _check_labels(a, b)
    return a.with_blocks({lam: a.blocks[lam] @ b.blocks[lam] for lam in a.blocks})


def block_adjoint(a: BlockOperator) -> BlockOperator:
    return a.with_blocks({lam: x.conj().T for lam, x in a.blocks.items()})


def block_trace(a: BlockOperator) -> complex:
    """Tr X = Σ_λ f_λ Tr X_λ."""
    return sum(a.multiplicities[lam] * np.trace(x) for lam, x in a.blocks.items())


def block_inner(a: BlockOperator, b: BlockOperator) -> float:
    """Re Tr[A B] = Σ_λ f_λ Re Tr[A_λ B_λ]."""
    _check_labels(a, b)
    return float(sum(
        a.multiplicities[lam] * np.real(np.sum(a.blocks[lam] * b.blocks[lam].T))
        for lam in a.blocks
    ))


def trace_reference(x: np.ndarray, d_ref: int) -> np.ndarray:
    """Σ_r X[(r, ·), (r, ·)]: the partial trace over R of one block."""
    m = x.shape[0] // d_ref
    return np.einsum("rarb->ab", x.reshape(d_ref, m, d_ref, m))


def trace_local(a: BlockOperator) -> np.ndarray:
    """T = Σ_λ f_λ Tr_V X_λ, the partial trace over the sites (d_R × d_R)."""
    d = a.d_ref
    out = np.zeros((d, d), dtype=complex)
    for lam, x in a.blocks.items():
        m = a.dims[lam]
        out += a.multiplicities[lam] * np.einsum("rasa->rs", x.reshape(d, m, d, m))
    return out


def min_eigenvalue(a: BlockOperator) -> float:
    """Smallest eigenvalue over all (Hermitized) blocks."""
    return min(float(linalg.eigvalsh(0.5 * (x + x.conj().T))[0]) for x in a.blocks.values() if x.size)


def block_max_abs_diff(a: BlockOperator, b: BlockOperator) -> float:
    _check_labels(a, b)
    return max(float(np.max(np.abs(a.blocks[lam] - b.blocks[lam]))) for lam in a.blocks)
