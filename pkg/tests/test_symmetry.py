from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.exceptions import InvalidInputError, SizeLimitError, UnsupportedDimensionError
from core.models import FlaggedSiteChannels, Partition, SymmetricOperator
from services.channel_core import apply_local, identity_channel, random_channel
from services.effective_channel import pauli_flag_channel_k
from symmetry.blocks import (
    block_max_abs_diff,
    block_product,
    block_trace,
    build_converter,
    from_blocks,
    min_eigenvalue,
    to_blocks,
)
from symmetry.dense import dense_blocks, from_dense, to_dense, twirl, type_id_table
from symmetry.orbits import (
    concat_orbit,
    cq_dimension,
    hermiticity_residual,
    orbit_dimension,
    orbit_enumerate,
    orbit_metrics,
    orbit_types,
    restrict,
    resymmetrize,
    tensor_power_coeffs,
    tensor_power_support,
)
from symmetry.young import (
    conjugate,
    covering_children,
    lattice_path_count,
    partitions,
    ssyt_count,
    syt_count,
)
from conftest import random_invariant, random_matrix, seeds


@st.composite
def partition_st(draw, max_n=9):
    n = draw(st.integers(min_value=0, max_value=max_n))
    return draw(st.sampled_from(partitions(max(n, 1), n)))


# ---------------------------------------------------------------------------
# Young tableaux
# ---------------------------------------------------------------------------

def test_partitions_order():
    assert [p.parts for p in partitions(2, 4)] == [(4,), (3, 1), (2, 2)]
    assert [p.parts for p in partitions(3, 3)] == [(3,), (2, 1), (1, 1, 1)]
    assert partitions(2, 0) == [Partition(())]


@given(partition_st())
def test_hook_length_matches_lattice_paths(lam):
    assert syt_count(lam) == lattice_path_count(lam)


@given(partition_st())
def test_conjugate_is_involution(lam):
    assert conjugate(conjugate(lam)) == lam
    assert syt_count(conjugate(lam)) == syt_count(lam)


@given(partition_st())
def test_children_have_one_box_less(lam):
    assert all(child.n == lam.n - 1 for child in covering_children(lam))


@pytest.mark.parametrize("n", range(1, 8))
def test_sum_of_squares_is_group_order(n):
    assert sum(syt_count(lam) ** 2 for lam in partitions(n, n)) == factorial(n)


@pytest.mark.parametrize("d,n", [(2, 1), (2, 5), (3, 4), (2, 9)])
def test_schur_weyl_dimension_count(d, n):
    assert sum(ssyt_count(lam, d) * syt_count(lam) for lam in partitions(d, n)) == d ** n


def test_ssyt_counts():
    assert ssyt_count(Partition((2, 1)), 2) == 2
    assert ssyt_count(Partition((3,)), 2) == 4
    assert ssyt_count(Partition((1, 1, 1)), 2) == 0


# ---------------------------------------------------------------------------
# Orbit coordinates
# ---------------------------------------------------------------------------

def test_orbit_counts_for_flagged_output():
    table = [orbit_dimension(4, n) for n in range(2, 9)]
    assert table == [136, 816, 3876, 15504, 54264, 170544, 490314]
    assert len(orbit_types(16, 3)) == orbit_dimension(4, 3)


@pytest.mark.parametrize("n", [1, 2, 5, 17])
def test_cq_dimension_closed_form(n):
    assert cq_dimension(n) == comb(n + 7, 7)


@pytest.mark.parametrize("n", [2, 9, 17])
def test_split_coordinate_counts(n):
    for k in range(n + 1):
        counts = len(orbit_types(4, k)) * len(orbit_types(4, n - k))
        assert counts == comb(k + 3, k) * comb(n - k + 3, n - k)


@pytest.mark.parametrize("n", range(1, 18))
def test_flagged_channel_coefficient_sparsity(n):
    for k in range(n + 1):
        sites = pauli_flag_channel_k(n, k)
        erased = tensor_power_support(sites.erased.gamma, k)
        intact = tensor_power_support(sites.intact.gamma, n - k)
        assert len(erased) * len(intact) == comb(k + 3, k) * comb(n - k + 3, n - k)
        assert all(abs(v) > 0 for v in erased.values())
        assert all(abs(v) > 0 for v in intact.values())


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_sparse_tensor_power_matches_dense_coefficients(n):
    sites = pauli_flag_channel_k(n, 0)
    for gamma in (sites.erased.gamma, sites.intact.gamma):
        dense = tensor_power_coeffs(gamma, n).coeffs[0, 0]
        sparse = tensor_power_support(gamma, n)
        assert np.count_nonzero(np.abs(dense) > 1e-15) == len(sparse) == comb(n + 3, 3)
        index = {t: i for i, t in enumerate(orbit_types(16, n))}
        for t, value in sparse.items():
            assert dense[index[t]] == pytest.approx(value, abs=1e-14)


def test_orbit_enumerate_support_and_metrics():
    diagonal = orbit_enumerate(2, 2, {(0, 0), (1, 1)})
    assert diagonal == [(0, 0, 0, 2), (1, 0, 0, 1), (2, 0, 0, 0)]
    assert orbit_metrics((1, 0, 0, 1)) == (2, 2, 2)
    assert orbit_metrics((0, 1, 0, 1)) == (0, 2, 2)
    with pytest.raises(InvalidInputError):
        orbit_enumerate(2, 2, {(0, 2)})


def test_tensor_power_coeffs(rng):
    x = random_matrix(rng, 2)
    dense = to_dense(tensor_power_coeffs(x, 3))
    np.testing.assert_allclose(dense, np.kron(np.kron(x, x), x), atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_from_dense_is_twirl(rng, n):
    x = random_matrix(rng, 2 * 2 ** n)
    np.testing.assert_allclose(to_dense(from_dense(x, 2, 2, (n,))), twirl(x, 2, 2, n), atol=1e-12)


@given(seed=seeds, n=st.integers(min_value=1, max_value=4), data=st.data())
@settings(max_examples=20, deadline=None)
def test_restrict_then_resymmetrize(seed, n, data):
    k = data.draw(st.integers(min_value=0, max_value=n))
    op = random_invariant(np.random.default_rng(seed), n)
    split = restrict(op, k)
    np.testing.assert_allclose(to_dense(split), to_dense(op), atol=1e-12)
    np.testing.assert_allclose(resymmetrize([split], [1.0]).coeffs, op.coeffs, atol=1e-12)


@pytest.mark.parametrize("n,k", [(2, 1), (3, 1), (3, 2)])
def test_resymmetrize_twirls_split_operators(rng, n, k):
    x = random_matrix(rng, 2 * 2 ** n)
    split = from_dense(x, 2, 2, (k, n - k))
    full = resymmetrize([split], [1.0])
    np.testing.assert_allclose(full.coeffs, from_dense(x, 2, 2, (n,)).coeffs, atol=1e-12)


def test_hermiticity_residual(rng):
    x = random_matrix(rng, 8)
    assert hermiticity_residual(from_dense(x + x.conj().T, 2, 2, (2,))) < 1e-14
    assert hermiticity_residual(from_dense(1j * np.eye(8), 2, 2, (2,))) > 1.0


def _dense_flagged(x: np.ndarray, sites: FlaggedSiteChannels) -> np.ndarray:
    dims = [2] + [2] * sites.n
    for site in range(1, sites.n + 1):
        x = apply_local(sites.erased if site <= sites.k else sites.intact, x, dims, site)
    return x


@pytest.mark.parametrize("n", [1, 2, 3])
def test_concat_orbit_matches_dense_application(rng, n):
    encoder = random_invariant(rng, n)
    for k in range(n + 1):
        sites = pauli_flag_channel_k(n, k)
        expected = _dense_flagged(to_dense(encoder), sites)
        np.testing.assert_allclose(to_dense(concat_orbit(encoder, k, sites)), expected, atol=1e-12)


def test_concat_orbit_with_generic_channel(rng):
    encoder = random_invariant(rng, 3)
    sites = FlaggedSiteChannels(3, 1, random_channel(2, 2, rng), random_channel(2, 2, rng))
    expected = _dense_flagged(to_dense(encoder), sites)
    np.testing.assert_allclose(to_dense(concat_orbit(encoder, 1, sites)), expected, atol=1e-12)


def test_concat_orbit_rejects_mismatched_sites(rng):
    with pytest.raises(InvalidInputError):
        concat_orbit(random_invariant(rng, 2), 1, pauli_flag_channel_k(3, 1))


def test_dense_oracle_size_limit():
    with pytest.raises(SizeLimitError):
        type_id_table(2, 9)


# ---------------------------------------------------------------------------
# Schur–Weyl blocks
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("sizes", [(1,), (4,), (6,), (0, 3), (2, 2), (3, 1)])
def test_block_dimensions_cover_the_space(sizes):
    conv = build_converter(sum(sizes), 2, sizes)
    assert sum(conv.dim(lam) * conv.multiplicity(lam) for lam in conv.labels) == 2 ** sum(sizes)


@given(seed=seeds, n=st.integers(min_value=1, max_value=5))
@settings(max_examples=15, deadline=None)
def test_orbit_block_roundtrip(seed, n):
    conv = build_converter(n, 2)
    op = random_invariant(np.random.default_rng(seed), n)
    np.testing.assert_allclose(from_blocks(to_blocks(op, conv), conv).coeffs, op.coeffs, atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_blocks_match_dense_projection(rng, n):
    conv = build_converter(n, 2)
    op = random_invariant(rng, n)
    blocks = to_blocks(op, conv)
    oracle = blocks.with_blocks(dense_blocks(to_dense(op), conv))
    assert block_max_abs_diff(blocks, oracle) < 1e-10


@pytest.mark.parametrize("sizes", [(1, 2), (2, 2)])
def test_split_blocks_match_dense_projection(rng, sizes):
    n = sum(sizes)
    conv = build_converter(n, 2, sizes)
    op = random_invariant(rng, n, sizes=sizes)
    blocks = to_blocks(op, conv)
    np.testing.assert_allclose(from_blocks(blocks, conv).coeffs, op.coeffs, atol=1e-10)
    oracle = blocks.with_blocks(dense_blocks(to_dense(op), conv))
    assert block_max_abs_diff(blocks, oracle) < 1e-10


@pytest.mark.parametrize("n", [2, 3, 4])
def test_block_map_is_multiplicative(rng, n):
    conv = build_converter(n, 2)
    a, b = random_invariant(rng, n), random_invariant(rng, n)
    product = from_dense(to_dense(a) @ to_dense(b), 2, 2, (n,))
    diff = block_max_abs_diff(to_blocks(product, conv), block_product(to_blocks(a, conv), to_blocks(b, conv)))
    assert diff < 1e-10


def test_block_trace_of_identity():
    n = 4
    identity = from_dense(np.eye(2 * 2 ** n), 2, 2, (n,))
    assert block_trace(to_blocks(identity, build_converter(n, 2))) == pytest.approx(2 * 2 ** n)


def test_psd_is_decided_blockwise(rng):
    n = 3
    conv = build_converter(n, 2)
    g = random_matrix(rng, 2 * 2 ** n)
    positive = from_dense(g @ g.conj().T, 2, 2, (n,))
    assert min_eigenvalue(to_blocks(positive, conv)) > -1e-10
    negative = SymmetricOperator(2, 2, (n,), -positive.coeffs)
    assert min_eigenvalue(to_blocks(negative, conv)) < 0


def test_block_maps_are_qubit_only():
    with pytest.raises(UnsupportedDimensionError):
        build_converter(3, 2, d_local=3)
    op = SymmetricOperator(3, 1, (2,), np.zeros((1, 1, orbit_dimension(3, 2)), dtype=complex))
    with pytest.raises(UnsupportedDimensionError):
        to_blocks(op, build_converter(2, 1))


def test_identity_site_operator_is_unchanged_by_identity_channel(rng):
    encoder = random_invariant(rng, 2)
    sites = FlaggedSiteChannels(2, 0, identity_channel(2), identity_channel(2))
    np.testing.assert_allclose(to_dense(concat_orbit(encoder, 0, sites)), to_dense(encoder), atol=1e-12)
