"""
Dense reconstructions of orbit-basis operators, for validation at small n.

Every matrix entry of (C^d)^{⊗m} belongs to exactly one orbit operator, so
dense matrices are gathered from (and averaged back into) orbit coordinates
through a table of type ids.
"""
from functools import lru_cache
from itertools import permutations
from math import comb, factorial
from typing import Dict, Sequence

import numpy as np

from core.exceptions import InvalidInputError, SizeLimitError
from core.models import IrrepLabel, Partition, SymmetricOperator
from services.channel_core import permute_systems
from symmetry.blocks import BlockConverter
from symmetry.orbits import orbit_types
from symmetry.young import qubit_spin

DENSE_MAX_SITES = 8


def _check_size(d: int, n: int) -> None:
    if n > DENSE_MAX_SITES:
        raise SizeLimitError(f"Dense reconstruction of {n} sites (d={d}) exceeds the oracle limit")


@lru_cache(maxsize=None)
def type_id_table(d: int, m: int) -> np.ndarray:
    """ids[row, col] = index of the orbit type of the entry |row⟩⟨col| on m sites."""
    _check_size(d, m)
    if m == 0:
        return np.zeros((1, 1), dtype=np.int64)
    size = d ** m
    digits = np.array(np.unravel_index(np.arange(size), (d,) * m)).T.reshape(size, m)
    pairs = digits[:, None, :] * d + digits[None, :, :]
    counts = np.stack([(pairs == p).sum(axis=2) for p in range(d * d)], axis=-1)
    base = m + 1
    codes = (counts * base ** np.arange(d * d)).sum(axis=-1)
    type_codes = np.array(
        [sum(c * base ** p for p, c in enumerate(t)) for t in orbit_types(d * d, m)], dtype=np.int64
    )
    order = np.argsort(type_codes)
    return order[np.searchsorted(type_codes[order], codes)]


def to_dense(op: SymmetricOperator) -> np.ndarray:
    """Dense matrix on R ⊗ (C^d)^{⊗n}, reference leftmost, factor sites in order."""
    if len(op.sizes) == 1:
        ids = type_id_table(op.d_local, op.sizes[0])
        x = op.coeffs[:, :, ids]  # (r, r', row, col)
        dim = op.d_ref * ids.shape[0]
        return x.transpose(0, 2, 1, 3).reshape(dim, dim)
    if len(op.sizes) == 2:
        ids1 = type_id_table(op.d_local, op.sizes[0])
        ids2 = type_id_table(op.d_local, op.sizes[1])
        x = op.coeffs[:, :, ids1[:, None, :, None], ids2[None, :, None, :]]  # (r, r', a, b, a', b')
        dim = op.d_ref * ids1.shape[0] * ids2.shape[0]
        return x.transpose(0, 2, 3, 1, 4, 5).reshape(dim, dim)
    raise InvalidInputError(f"Dense reconstruction supports at most two group factors, got {len(op.sizes)}")


def from_dense(x: np.ndarray, d_local: int, d_ref: int, sizes: Sequence[int]) -> SymmetricOperator:
    """Average a dense operator over each orbit; exact for invariant operators."""
    sizes = tuple(sizes)
    ids = [type_id_table(d_local, s) for s in sizes]
    local = [t.shape[0] for t in ids]
    counts = [len(orbit_types(d_local ** 2, s)) for s in sizes]
    t = x.reshape((d_ref,) + tuple(local) + (d_ref,) + tuple(local))
    f = len(sizes)
    t = t.transpose([0, f + 1] + [ax for i in range(f) for ax in (1 + i, f + 2 + i)])
    out = np.zeros((d_ref, d_ref) + tuple(counts), dtype=complex)
    seen = np.zeros(tuple(counts))
    if f == 1:
        np.add.at(out, (slice(None), slice(None), ids[0]), t)
        np.add.at(seen, ids[0], 1.0)
    elif f == 2:
        i1 = ids[0][:, :, None, None]
        i2 = ids[1][None, None, :, :]
        i1, i2 = np.broadcast_arrays(i1, i2)
        np.add.at(out, (slice(None), slice(None), i1, i2), t)
        np.add.at(seen, (i1, i2), 1.0)
    else:
        raise InvalidInputError(f"Dense projection supports at most two group factors, got {f}")
    return SymmetricOperator(d_local, d_ref, sizes, out / seen)


def young_vectors(lam: Partition) -> np.ndarray:
    """Columns |ψ_w⟩ = singlets ⊗ Dicke_w, w = 0..λ₁−λ₂, on λ₁+λ₂ qubits."""
    singlets, spin2 = qubit_spin(lam)
    singlet = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2.0)
    head = np.ones(1)
    for _ in range(singlets):
        head = np.kron(head, singlet)
    weights = np.array([bin(i).count("1") for i in range(2 ** spin2)])
    cols = []
    for w in range(spin2 + 1):
        dicke = (weights == w).astype(float) / np.sqrt(comb(spin2, w))
        cols.append(np.kron(head, dicke))
    return np.stack(cols, axis=1)


def dense_blocks(x: np.ndarray, conv: BlockConverter) -> Dict[IrrepLabel, np.ndarray]:
    """Blocks ⟨r, ψ_w| X |r', ψ_w'⟩ by explicit projection onto the Young vectors."""
    out = {}
    for label in conv.labels:
        basis = np.eye(conv.d_ref)
        for lam in label:
            basis = np.kron(basis, young_vectors(lam))
        out[label] = basis.conj().T @ x @ basis
    return out


def twirl(x: np.ndarray, d_local: int, d_ref: int, n: int) -> np.ndarray:
    """(1/n!) Σ_π π X π† over permutations of the n sites."""
    dims = [d_ref] + [d_local] * n
    total = np.zeros_like(x, dtype=complex)
    for perm in permutations(range(n)):
        total += permute_systems(x, dims, [0] + [1 + p for p in perm])
    return total / factorial(n)
