"""
Orbit-basis coordinates for permutation-invariant operators.

An orbit type counts how often each local index pair (a, a') occurs, with
pair index a*d + a'. The orbit operator C_t is the 0/1 sum of all
|a_1…a_n⟩⟨a'_1…a'_n| whose pair sequence has type t. Types are ordered
lexicographically on the count vector.

Operators invariant under S_{n_1} × … × S_{n_f} carry one type per factor;
channel concatenation and twirling are linear maps on these coordinates.
"""
import logging
from functools import lru_cache
from itertools import product
from math import comb, factorial, isqrt, prod
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np

from core.exceptions import InvalidDimensionError, InvalidInputError
from core.models import ChoiMatrix, FlaggedSiteChannels, OrbitType, SymmetricOperator

logger = logging.getLogger(__name__)

TRANSPORT_CUTOFF = 1e-15


def _compositions(n: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Nonnegative compositions of n into `parts` parts, lexicographically ascending."""
    if parts == 0:
        if n == 0:
            yield ()
        return
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def orbit_types(num_pairs: int, n: int) -> Tuple[OrbitType, ...]:
    return tuple(_compositions(n, num_pairs))


@lru_cache(maxsize=None)
def type_index(num_pairs: int, n: int) -> Dict[OrbitType, int]:
    return {t: i for i, t in enumerate(orbit_types(num_pairs, n))}


def multinomial(n: int, counts: Iterable[int]) -> int:
    return factorial(n) // prod(factorial(c) for c in counts)


@lru_cache(maxsize=None)
def orbit_sizes(num_pairs: int, n: int) -> np.ndarray:
    """|C_t| for every type, as floats."""
    return np.array([float(multinomial(n, t)) for t in orbit_types(num_pairs, n)])


def orbit_enumerate(d: int, n: int, support: Optional[Set[Tuple[int, int]]] = None) -> List[OrbitType]:
    """
    Orbit types of n sites with local dimension d.

    Args:
        d: Local dimension
        n: Number of sites
        support: Restrict to types using only these (a, a') pairs

    Returns:
        Types in canonical order
    """
    if d < 1 or n < 0:
        raise InvalidDimensionError(f"Need d >= 1 and n >= 0, got d={d}, n={n}")
    if support is None:
        return list(orbit_types(d * d, n))
    for a, b in support:
        if not (0 <= a < d and 0 <= b < d):
            raise InvalidInputError(f"Pair ({a}, {b}) is outside [{d}]²")
    # Compositions over the support letters only; zeros elsewhere keep the lexicographic order.
    allowed = sorted({a * d + b for a, b in support})
    out = []
    for counts in _compositions(n, len(allowed)):
        t = [0] * (d * d)
        for i, c in zip(allowed, counts):
            t[i] = c
        out.append(tuple(t))
    return out


def _local_dim(t: Sequence[int]) -> int:
    d = isqrt(len(t))
    if d * d != len(t):
        raise InvalidDimensionError(f"Type of length {len(t)} is not indexed by pairs")
    return d


def orbit_metrics(t: OrbitType) -> Tuple[int, int, int]:
    """(trace, orbit size, squared Hilbert–Schmidt norm) of C_t."""
    d = _local_dim(t)
    size = multinomial(sum(t), t)
    diagonal = all(c == 0 for i, c in enumerate(t) if i // d != i % d)
    return (size if diagonal else 0), size, size


def orbit_dimension(d_local: int, n: int) -> int:
    """Number of orbit types: C(n + d² − 1, d² − 1)."""
    return comb(n + d_local ** 2 - 1, d_local ** 2 - 1)


def cq_dimension(n: int, d_local: int = 2) -> int:
    """Total number of S_k × S_{n−k} orbit coordinates over k = 0..n."""
    return sum(orbit_dimension(d_local, k) * orbit_dimension(d_local, n - k) for k in range(n + 1))


@lru_cache(maxsize=None)
def swap_permutation(d: int, n: int) -> np.ndarray:
    """Index of the type with every pair (a, a') replaced by (a', a)."""
    index = type_index(d * d, n)
    swap = [b * d + a for a in range(d) for b in range(d)]
    out = []
    for t in orbit_types(d * d, n):
        swapped = [0] * (d * d)
        for i, c in enumerate(t):
            swapped[swap[i]] = c
        out.append(index[tuple(swapped)])
    return np.array(out, dtype=int)


def hermiticity_residual(op: SymmetricOperator) -> float:
    """max |x_{k,l,r} − conj(x_{l,k,r̄})| over all coordinates."""
    c = op.coeffs
    for axis, size in enumerate(op.sizes):
        c = np.take(c, swap_permutation(op.d_local, size), axis=2 + axis)
    c = np.swapaxes(c, 0, 1).conj()
    return float(np.max(np.abs(op.coeffs - c))) if c.size else 0.0


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def tensor_power_coeffs(x: np.ndarray, n: int) -> SymmetricOperator:
    """Coordinates of X^{⊗n}: the coefficient of C_t is Π_(a,a') X_{a,a'}^{t(a,a')}."""
    d = x.shape[0]
    if x.shape != (d, d):
        raise InvalidDimensionError(f"Expected a square matrix, got {x.shape}")
    flat = x.reshape(-1).astype(complex)
    types = np.array(orbit_types(d * d, n), dtype=int).reshape(-1, d * d)
    powers = np.where(types > 0, flat[None, :] ** types, 1.0)
    coeffs = powers.prod(axis=1)
    return SymmetricOperator(d_local=d, d_ref=1, sizes=(n,), coeffs=coeffs.reshape(1, 1, -1))


def tensor_power_support(x: np.ndarray, n: int, cutoff: float = TRANSPORT_CUTOFF) -> Dict[OrbitType, complex]:
    """
    Nonzero coordinates of X^{⊗n}, enumerated over the support of X only.

    Usable where the full type list is out of reach (sixteen letters at n = 17).
    """
    d = x.shape[0]
    if x.shape != (d, d):
        raise InvalidDimensionError(f"Expected a square matrix, got {x.shape}")
    flat = x.reshape(-1).astype(complex)
    support = {(int(i) // d, int(i) % d) for i in np.flatnonzero(np.abs(flat) > cutoff)}
    return {
        t: complex(prod(flat[i] ** c for i, c in enumerate(t) if c))
        for t in orbit_enumerate(d, n, support)
    }


def from_single_site(channel: ChoiMatrix) -> SymmetricOperator:
    """Coordinates of a one-site Choi matrix, with the channel input as reference."""
    d_ref, d = channel.dim_in, channel.dim_out
    index = type_index(d * d, 1)
    coeffs = np.zeros((d_ref, d_ref, d * d), dtype=complex)
    t = channel.tensor
    for a in range(d):
        for b in range(d):
            unit = [0] * (d * d)
            unit[a * d + b] = 1
            coeffs[:, :, index[tuple(unit)]] = t[:, a, :, b]
    return SymmetricOperator(d_local=d, d_ref=d_ref, sizes=(1,), coeffs=coeffs)


def attach_idle_site(op: SymmetricOperator, state: int = 0) -> SymmetricOperator:
    """X ⊗ |s⟩⟨s| on one extra site, as an S_n × S_1-invariant operator."""
    if len(op.sizes) != 1:
        raise InvalidInputError(f"Expected an S_n-invariant operator, got sizes {op.sizes}")
    d = op.d_local
    unit = [0] * (d * d)
    unit[state * d + state] = 1
    col = type_index(d * d, 1)[tuple(unit)]
    coeffs = np.zeros(op.coeffs.shape + (d * d,), dtype=complex)
    coeffs[..., col] = op.coeffs
    return SymmetricOperator(d, op.d_ref, (op.sizes[0], 1), coeffs)


# ---------------------------------------------------------------------------
# Restriction and twirling
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _split_index(num_pairs: int, n: int, k: int) -> np.ndarray:
    """idx[t1, t2] = index of t1 + t2 among the S_n types."""
    index = type_index(num_pairs, n)
    first = orbit_types(num_pairs, k)
    second = orbit_types(num_pairs, n - k)
    return np.array(
        [[index[tuple(a + b for a, b in zip(t1, t2))] for t2 in second] for t1 in first],
        dtype=int,
    ).reshape(len(first), len(second))


@lru_cache(maxsize=None)
def _split_weights(num_pairs: int, n: int, k: int) -> np.ndarray:
    """|C_{t1}|·|C_{t2}| / |C_{t1+t2}|: the share of an S_n orbit lying in one G_k orbit."""
    idx = _split_index(num_pairs, n, k)
    sizes = orbit_sizes(num_pairs, n)
    return np.outer(orbit_sizes(num_pairs, k), orbit_sizes(num_pairs, n - k)) / sizes[idx]


def restrict(op: SymmetricOperator, k: int) -> SymmetricOperator:
    """Rewrite an S_n-invariant operator in S_k × S_{n−k} coordinates."""
    if len(op.sizes) != 1:
        raise InvalidInputError(f"Expected an S_n-invariant operator, got sizes {op.sizes}")
    n = op.n
    if not 0 <= k <= n:
        raise InvalidInputError(f"Need 0 <= k <= n, got k={k}, n={n}")
    idx = _split_index(op.d_local ** 2, n, k)
    return SymmetricOperator(op.d_local, op.d_ref, (k, n - k), op.coeffs[:, :, idx])


def resymmetrize(per_k: Sequence[SymmetricOperator], weights: Sequence[float]) -> SymmetricOperator:
    """
    Weighted S_n twirl Σ_k w_k · (1/n!) Σ_π π X_k π† of S_k × S_{n−k}-invariant operators.

    Each S_n coefficient is the orbit-size-weighted average of the G_k
    coefficients it splits into.
    """
    if not per_k or len(per_k) != len(weights):
        raise InvalidInputError(f"Got {len(per_k)} operators and {len(weights)} weights")
    first = per_k[0]
    n, d, d_ref = first.n, first.d_local, first.d_ref
    num_pairs = d * d
    out = np.zeros((d_ref, d_ref, len(orbit_types(num_pairs, n))), dtype=complex)
    for op, w in zip(per_k, weights):
        if op.n != n or op.d_local != d or op.d_ref != d_ref:
            raise InvalidInputError(
                f"Cannot mix operators on {op.n} sites (d={op.d_local}, d_R={op.d_ref}) "
                f"with {n} sites (d={d}, d_R={d_ref})"
            )
        if len(op.sizes) == 1:
            out += w * op.coeffs
            continue
        if len(op.sizes) != 2:
            raise InvalidInputError(f"Unsupported group with {len(op.sizes)} factors")
        k = op.sizes[0]
        idx = _split_index(num_pairs, n, k)
        share = _split_weights(num_pairs, n, k)
        flat = (op.coeffs * share).reshape(d_ref, d_ref, -1)
        np.add.at(out, (slice(None), slice(None), idx.reshape(-1)), w * flat)
    return SymmetricOperator(d, d_ref, (n,), out)


# ---------------------------------------------------------------------------
# Site-wise channel transport
# ---------------------------------------------------------------------------

def _site_weights(site: ChoiMatrix) -> np.ndarray:
    """W[(a,a'),(q,q')] = Γ[(a,q),(a',q')]."""
    d_in, d_out = site.dim_in, site.dim_out
    return site.tensor.transpose(0, 2, 1, 3).reshape(d_in * d_in, d_out * d_out)


@lru_cache(maxsize=32)
def _transport(size: int, d_in: int, d_out: int, weights_bytes: bytes) -> np.ndarray:
    weights = np.frombuffer(weights_bytes, dtype=complex).reshape(d_in * d_in, d_out * d_out)
    p_in, p_out = d_in * d_in, d_out * d_out
    in_types = orbit_types(p_in, size)
    out_index = type_index(p_out, size)
    allowed = [np.flatnonzero(np.abs(weights[p]) > TRANSPORT_CUTOFF) for p in range(p_in)]
    matrix = np.zeros((len(out_index), len(in_types)), dtype=complex)

    for col, t in enumerate(in_types):
        options = []
        for p, count in enumerate(t):
            if count == 0:
                options.append([((0,) * p_out, 1.0)])
                continue
            if len(allowed[p]) == 0:
                options = None
                break
            row = []
            for split in _compositions(count, len(allowed[p])):
                vec = [0] * p_out
                value = 1.0 + 0j
                for o, c in zip(allowed[p], split):
                    vec[o] = c
                    if c:
                        value *= weights[p, o] ** c / factorial(c)
                row.append((tuple(vec), value))
            options.append(row)
        if options is None:
            continue
        for combo in product(*options):
            u = tuple(sum(vec[o] for vec, _ in combo) for o in range(p_out))
            value = prod(v for _, v in combo) * prod(factorial(c) for c in u)
            matrix[out_index[u], col] += value
    logger.debug(f"Built {matrix.shape} transport matrix for {size} sites ({d_in}->{d_out})")
    return matrix


def transport_matrix(site: ChoiMatrix, size: int) -> np.ndarray:
    """
    Linear map on orbit coordinates induced by applying `site` to each of `size` sites.

    Column t holds the coordinates of (id ⊗ N^{⊗size}) applied to C_t: for an
    output sequence of type u, the contributing input sequences are counted
    by the pair-transition matrices with margins (t, u).
    """
    weights = np.ascontiguousarray(_site_weights(site), dtype=complex)
    return _transport(size, site.dim_in, site.dim_out, weights.tobytes())


def pushforward(op: SymmetricOperator, site_channels: Sequence[ChoiMatrix]) -> SymmetricOperator:
    """Apply one single-site channel per group factor to every site of that factor."""
    if len(site_channels) != len(op.sizes):
        raise InvalidInputError(f"Need {len(op.sizes)} site channels, got {len(site_channels)}")
    d_out = site_channels[0].dim_out
    coeffs = op.coeffs
    for axis, (site, size) in enumerate(zip(site_channels, op.sizes)):
        if site.dim_in != op.d_local or site.dim_out != d_out:
            raise InvalidInputError(
                f"Site channel {site.dim_in}->{site.dim_out} does not fit local dimension {op.d_local}"
            )
        matrix = transport_matrix(site, size)
        coeffs = np.moveaxis(np.tensordot(matrix, coeffs, axes=([1], [2 + axis])), 0, 2 + axis)
    return SymmetricOperator(d_out, op.d_ref, op.sizes, coeffs)


def concat_orbit(
    encoder: SymmetricOperator,
    k: int,
    site_channels: Optional[FlaggedSiteChannels] = None,
) -> SymmetricOperator:
    """Γ^{M_k} for M_k = (P^{⊗k} ⊗ id^{⊗(n−k)}) ∘ E, in S_k × S_{n−k} coordinates."""
    if site_channels is None:
        from services.effective_channel import pauli_flag_channel_k

        site_channels = pauli_flag_channel_k(encoder.n, k)
    if site_channels.n != encoder.n or site_channels.k != k:
        raise InvalidInputError(
            f"Site channels for (n={site_channels.n}, k={site_channels.k}) do not match (n={encoder.n}, k={k})"
        )
    return pushforward(restrict(encoder, k), site_channels.site_channels)
