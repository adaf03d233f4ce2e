"""
Self-check suites run by `cli.py check`.

Each suite is a list of named invariant checks against small dense oracles.
A suite passes when every check is within its tolerance.
"""
import logging
from math import comb
from typing import Callable, Dict, List, Sequence

import numpy as np
from scipy import linalg

from core.models import (
    CheckOutcome,
    CheckSuite,
    EffectiveChannelSpec,
    FlaggedSiteChannels,
    SymmetricOperator,
    ValidationMode,
    VerificationReport,
)
from services.channel_core import (
    adjoint,
    apply,
    apply_local,
    complementary_channel,
    compose,
    entanglement_fidelity,
    identity_channel,
    kraus_from_choi,
    random_channel,
    validate,
)
from services.effective_channel import (
    effective_channel,
    erasure_is_symmetric,
    horodecki_channel,
    horodecki_choi_state,
    pauli_branch_channel,
    private_decomposition,
    reconstruct_choi_state,
    verify_effective_equivalence,
)
from symmetry.blocks import block_max_abs_diff, block_product, build_converter, from_blocks, to_blocks
from symmetry.dense import dense_blocks, from_dense, to_dense
from symmetry.orbits import concat_orbit, cq_dimension, orbit_dimension, restrict, resymmetrize

logger = logging.getLogger(__name__)

TOL = 1e-10
SYMMETRY_MAX_N = 5
CONCAT_MAX_N = 3
DIMENSION_TABLE_NS = range(2, 9)
# Orbit dimensions of the 4-dim flagged output, n = 2..8.
EXPECTED_ORBIT_DIMENSIONS = (136, 816, 3876, 15504, 54264, 170544, 490314)


def _within(name: str, value: float, tolerance: float = TOL) -> CheckOutcome:
    return CheckOutcome(name, bool(value <= tolerance), float(value), tolerance)


def _random_matrix(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def core_checks(rng: np.random.Generator) -> List[CheckOutcome]:
    """Choi algebra on random channels."""
    a, b, c = random_channel(2, 3, rng), random_channel(3, 2, rng), random_channel(2, 2, rng)
    x, y = _random_matrix(rng, 2), _random_matrix(rng, 3)
    left = compose(compose(a, b), c).gamma
    right = compose(a, compose(b, c)).gamma
    duality = abs(np.trace(apply(a, x) @ y) - np.trace(x @ apply(adjoint(a), y)))
    return [
        _within("random_channel_cptp", validate(a).max_violation),
        _within("compose_associative", float(np.max(np.abs(left - right)))),
        _within("adjoint_duality", float(duality)),
        _within("adjoint_unital", validate(adjoint(a), ValidationMode.CPU).max_violation),
        _within("identity_fidelity", abs(entanglement_fidelity(identity_channel(3)) - 1.0)),
        _within("complementary_cptp", validate(complementary_channel(kraus_from_choi(a))).max_violation),
    ]


def effective_checks(rng: np.random.Generator) -> List[CheckOutcome]:
    """The flagged channel, its protocol realization and the private-state sectors."""
    sectors = private_decomposition()
    reconstruction = float(np.max(np.abs(reconstruct_choi_state(sectors) - horodecki_choi_state())))
    eigenvalues = linalg.eigvalsh(horodecki_choi_state())
    rank = int(np.sum(eigenvalues > TOL))
    return [
        _within("effective_identity", verify_effective_equivalence()),
        _within("private_decomposition", reconstruction),
        _within("horodecki_ppt", validate(horodecki_channel(), ValidationMode.PPT).max_violation),
        CheckOutcome("horodecki_rank", rank == 6, float(rank), 6.0, "Choi rank"),
        CheckOutcome("erasure_two_extendible", erasure_is_symmetric(2, 0.5), detail="q=1/2"),
        _within("effective_cptp", validate(effective_channel()).max_violation),
    ]


def _random_invariant(rng: np.random.Generator, n: int, d_ref: int = 2) -> SymmetricOperator:
    size = d_ref * 2 ** n
    return from_dense(_random_matrix(rng, size), 2, d_ref, (n,))


def _dense_flag_channel(x: np.ndarray, sites: FlaggedSiteChannels, d_ref: int) -> np.ndarray:
    dims = [d_ref] + [2] * sites.n
    for site in range(1, sites.n + 1):
        channel = sites.erased if site <= sites.k else sites.intact
        x = apply_local(channel, x, dims, site)
    return x


def symmetry_checks(rng: np.random.Generator, max_n: int = SYMMETRY_MAX_N) -> List[CheckOutcome]:
    """Orbit and block coordinates against dense reconstructions."""
    outcomes = []
    pauli = pauli_branch_channel(EffectiveChannelSpec().weights)
    for n in range(1, max_n + 1):
        conv = build_converter(n, 2)
        a, b = _random_invariant(rng, n), _random_invariant(rng, n)
        blocks_a = to_blocks(a, conv)
        roundtrip = float(np.max(np.abs(from_blocks(blocks_a, conv).coeffs - a.coeffs)))
        oracle = blocks_a.with_blocks(dense_blocks(to_dense(a), conv))
        product = from_dense(to_dense(a) @ to_dense(b), 2, 2, (n,))
        multiplicative = block_max_abs_diff(to_blocks(product, conv), block_product(blocks_a, to_blocks(b, conv)))
        outcomes += [
            _within(f"orbit_block_roundtrip_n{n}", roundtrip),
            _within(f"block_dense_agreement_n{n}", block_max_abs_diff(blocks_a, oracle)),
            _within(f"block_multiplicative_n{n}", multiplicative),
        ]
        for k in range(n + 1):
            split = from_dense(to_dense(a), 2, 2, (k, n - k))
            back = resymmetrize([restrict(a, k)], [1.0])
            outcomes += [
                _within(f"restrict_n{n}_k{k}", float(np.max(np.abs(restrict(a, k).coeffs - split.coeffs)))),
                _within(f"resymmetrize_n{n}_k{k}", float(np.max(np.abs(back.coeffs - a.coeffs)))),
            ]
            if n <= CONCAT_MAX_N:
                sites = FlaggedSiteChannels(n, k, pauli, identity_channel(2))
                dense = _dense_flag_channel(to_dense(a), sites, 2)
                reduced = to_dense(concat_orbit(a, k, sites))
                outcomes.append(_within(f"concat_orbit_n{n}_k{k}", float(np.max(np.abs(dense - reduced)))))
    return outcomes


def dimension_table(ns: Sequence[int] = DIMENSION_TABLE_NS) -> List[Dict[str, int]]:
    """Orbit-basis sizes: full 4-dim output, and the flag-split qubit encoder."""
    return [
        {
            "n": n,
            "orbit_dimension": orbit_dimension(4, n),
            "cq_dimension": cq_dimension(n),
            "symmetric_code_dimension": comb(n + 7, 7),
        }
        for n in ns
    ]


def dimension_checks(rng: np.random.Generator) -> List[CheckOutcome]:
    table = dimension_table()
    orbit = [row["orbit_dimension"] for row in table]
    vandermonde = all(row["cq_dimension"] == row["symmetric_code_dimension"] for row in table)
    return [
        CheckOutcome("orbit_dimension_table", tuple(orbit) == EXPECTED_ORBIT_DIMENSIONS, detail=str(orbit)),
        CheckOutcome("cq_dimension_vandermonde", vandermonde),
    ]


SUITES: Dict[CheckSuite, List[Callable[[np.random.Generator], List[CheckOutcome]]]] = {
    CheckSuite.CORE: [core_checks],
    CheckSuite.EFFECTIVE: [effective_checks],
    CheckSuite.SYMMETRY: [symmetry_checks, dimension_checks],
}


def run_suite(suite: CheckSuite, seed: int = 0) -> Dict[str, VerificationReport]:
    """Run one suite (or all of them); reports are keyed by suite name."""
    selected = [s for s in SUITES if suite is CheckSuite.ALL or s is suite]
    reports = {}
    for name in selected:
        rng = np.random.default_rng(np.random.SeedSequence([seed, list(SUITES).index(name)]))
        report = VerificationReport()
        for check in SUITES[name]:
            report.checks.extend(check(rng))
        reports[name.value] = report
        failed = [c.name for c in report.checks if not c.passed]
        if failed:
            logger.warning(f"Suite '{name.value}' failed: {', '.join(failed)}")
        else:
            logger.info(f"Suite '{name.value}' passed {len(report.checks)} checks")
    return reports
