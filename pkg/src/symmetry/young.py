"""
Partitions and Young-tableau counts.

m_λ (semistandard tableaux with entries in [d]) is the dimension of the
unitary irrep V_λ; f_λ (standard tableaux) is the dimension of the
symmetric-group irrep W_λ.
"""
from functools import lru_cache
from math import factorial, prod
from typing import List, Tuple

from core.exceptions import InvalidDimensionError
from core.models import Partition


def _descending(n: int, max_part: int, max_rows: int) -> List[Tuple[int, ...]]:
    if n == 0:
        return [()]
    if max_rows == 0:
        return []
    out = []
    for first in range(min(n, max_part), 0, -1):
        for rest in _descending(n - first, first, max_rows - 1):
            out.append((first,) + rest)
    return out


@lru_cache(maxsize=None)
def _partitions(d: int, n: int) -> Tuple[Partition, ...]:
    return tuple(Partition(p) for p in _descending(n, n, d))


def partitions(d: int, n: int) -> List[Partition]:
    """Partitions of n with at most d parts, lexicographically descending."""
    if d < 1 or n < 0:
        raise InvalidDimensionError(f"Need d >= 1 and n >= 0, got d={d}, n={n}")
    return list(_partitions(d, n))


def conjugate(lam: Partition) -> Partition:
    """Transpose of the Young diagram."""
    if not lam.parts:
        return lam
    return Partition(tuple(sum(1 for p in lam.parts if p > i) for i in range(lam.parts[0])))


def hook_lengths(lam: Partition) -> List[int]:
    cols = conjugate(lam)
    return [
        lam.parts[i] - j + cols.parts[j] - i - 1
        for i in range(lam.rows)
        for j in range(lam.parts[i])
    ]


@lru_cache(maxsize=None)
def syt_count(lam: Partition) -> int:
    """f_λ by the hook-length formula."""
    return factorial(lam.n) // prod(hook_lengths(lam))


@lru_cache(maxsize=None)
def ssyt_count(lam: Partition, d: int) -> int:
    """m_λ by the hook-content formula: Π (d + j − i) / h(i, j)."""
    if lam.rows > d:
        return 0
    contents = [d + j - i for i in range(lam.rows) for j in range(lam.parts[i])]
    return prod(contents) // prod(hook_lengths(lam))


def covering_children(lam: Partition) -> List[Partition]:
    """Partitions obtained by removing one corner box (Young's lattice, one level down)."""
    children = []
    parts = lam.parts
    for i in range(len(parts)):
        if parts[i] > (parts[i + 1] if i + 1 < len(parts) else 0):
            child = list(parts)
            child[i] -= 1
            if child[-1] == 0:
                child.pop()
            children.append(Partition(tuple(child)))
    return children


@lru_cache(maxsize=None)
def lattice_path_count(lam: Partition) -> int:
    """Number of chains from () to λ in Young's lattice; equals f_λ."""
    if lam.n == 0:
        return 1
    return sum(lattice_path_count(child) for child in covering_children(lam))


def qubit_spin(lam: Partition) -> Tuple[int, int]:
    """(number of singlet pairs, 2j) for a partition with at most two rows."""
    if lam.rows > 2:
        raise InvalidDimensionError(f"{lam} has more than two rows")
    return lam.part(1), lam.part(0) - lam.part(1)
