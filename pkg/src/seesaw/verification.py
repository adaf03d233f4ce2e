"""
Packing codes into archives and re-checking them from the stored blocks.

The verifier trusts nothing but the group structure implied by (mode, n, d):
it rebuilds the flag channels from the stored encoder, recomputes every
fidelity, and checks positivity and the CPTP / CPU constraints blockwise.
Checks run in a fixed order and stop at the first failure.
"""
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from core.exceptions import ArchiveFormatError, InvalidParameterError, SuperactivationError
from core.models import (
    BlockOperator,
    CheckOutcome,
    CodeArchive,
    CodeResult,
    EffectiveChannelSpec,
    IrrepLabel,
    Partition,
    SeesawMode,
    SymmetricOperator,
    VerificationReport,
)
from infrastructure.archive import TOOL_VERSION, decode_payload, digest_mismatches, load_archive, read_archive
from infrastructure.tracing import get_tracer
from seesaw.base import cq_weights
from seesaw.explicit import DENSE_KEY, dense_channel
from seesaw.power import block_fidelity, constraint_residual_tp, constraint_residual_unital
from seesaw.symmetric import code_fidelity
from services.effective_channel import effective_channel
from symmetry.blocks import DENSE_LABEL, block_max_abs_diff, build_converter, from_blocks, min_eigenvalue

tracer = get_tracer(__name__)
logger = logging.getLogger(__name__)

ORBIT_ORDERING = "lexicographic-compositions/v1"
PSD_TOL = 1e-8
CONSTRAINT_TOL = 1e-8
CHANNEL_TOL = 1e-8
FIDELITY_TOL = 1e-9

# label -> (block dimension m, multiplicity f)
GroupLayout = Dict[IrrepLabel, Tuple[int, int]]


def label_key(label: IrrepLabel) -> str:
    """'[3,1]|[2]' for a product label, 'dense' for the single dense block."""
    if label == DENSE_LABEL:
        return "dense"
    return "|".join(p.label for p in label)


def parse_label(key: str) -> IrrepLabel:
    if key == "dense":
        return DENSE_LABEL
    try:
        return tuple(
            Partition(tuple(int(x) for x in part.strip("[]").split(",") if x))
            for part in key.split("|")
        )
    except ValueError as e:
        raise ArchiveFormatError(f"Malformed irrep label '{key}'") from e


def expected_layouts(mode: SeesawMode, n: int, d: int) -> Dict[str, GroupLayout]:
    """Group structure every archive of this (mode, n, d) must carry, keyed by payload prefix."""
    if mode is SeesawMode.EXPLICIT:
        site = effective_channel()
        enc = {DENSE_LABEL: (site.dim_in ** n, 1)}
        dec = {DENSE_LABEL: (site.dim_out ** n, 1)}
        return {"enc": enc, f"dec/{DENSE_KEY}": dec, f"m/{DENSE_KEY}": dec}
    conv = build_converter(n, d)
    layouts = {"enc": {lam: (conv.dim(lam), conv.multiplicity(lam)) for lam in conv.labels}}
    for k in range(n + 1):
        conv_k = build_converter(n, d, (k, n - k))
        layout = {lam: (conv_k.dim(lam), conv_k.multiplicity(lam)) for lam in conv_k.labels}
        layouts[f"dec/{k}"] = layout
        layouts[f"m/{k}"] = layout
    return layouts


def _group_entries(op: BlockOperator) -> List[dict]:
    return [
        {"label": label_key(lam), "m": int(op.dims[lam]), "f": int(op.multiplicities[lam])}
        for lam in op.blocks
    ]


def pack_code(result: CodeResult, provenance: Optional[dict] = None) -> CodeArchive:
    """Manifest and block arrays for a finished seesaw run."""
    operators = {"enc": result.encoder_blocks}
    for k in sorted(result.decoders):
        operators[f"dec/{k}"] = result.decoders[k]
        operators[f"m/{k}"] = result.channel_blocks[k]
    arrays = {
        f"{prefix}/{label_key(lam)}": np.asarray(x)
        for prefix, op in operators.items()
        for lam, x in op.blocks.items()
    }
    manifest = {
        "orbit_ordering": ORBIT_ORDERING,
        "mode": result.mode.value,
        "n": result.n,
        "d": result.d,
        "erasure_prob": float(result.erasure_prob),
        "fidelity": float(result.fidelity),
        "per_k_fidelities": {str(k): float(v) for k, v in sorted(result.per_k_fidelities.items())},
        "groups": {prefix: _group_entries(op) for prefix, op in operators.items()},
        "provenance": dict(provenance or {}),
    }
    manifest["provenance"].update({
        "tool_version": TOOL_VERSION,
        "restart_index": result.restart_index,
        "outer_iterations": len(result.trace),
        "converged": result.converged,
    })
    return CodeArchive(manifest=manifest, arrays=arrays)


def _header(manifest: dict) -> Tuple[SeesawMode, int, int, float]:
    try:
        mode = SeesawMode(manifest["mode"])
        n, d = int(manifest["n"]), int(manifest["d"])
        q = float(manifest["erasure_prob"])
    except (KeyError, ValueError, TypeError) as e:
        raise ArchiveFormatError(f"Manifest header is incomplete: {e}") from e
    if n < 1 or d < 2 or not 0.0 <= q <= 1.0:
        raise ArchiveFormatError(f"Manifest header out of range: n={n}, d={d}, q={q}")
    return mode, n, d, q


def _operator(archive: CodeArchive, prefix: str, layout: GroupLayout, n: int, d: int, sizes) -> BlockOperator:
    groups = archive.manifest.get("groups")
    declared = groups.get(prefix) if isinstance(groups, dict) else None
    if declared is None:
        raise ArchiveFormatError(f"Manifest declares no group for '{prefix}'")
    try:
        stated = {parse_label(e["label"]): (int(e["m"]), int(e["f"])) for e in declared}
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise ArchiveFormatError(f"Group '{prefix}' has a malformed entry: {e}") from e
    if stated != layout:
        raise ArchiveFormatError(f"Group '{prefix}' does not match the S_n structure for n={n}")
    blocks = {}
    for lam, (m, _) in layout.items():
        name = f"{prefix}/{label_key(lam)}"
        if name not in archive.arrays:
            raise ArchiveFormatError(f"Payload array '{name}' is missing")
        x = archive.arrays[name]
        if x.shape != (d * m, d * m):
            raise ArchiveFormatError(f"Payload array '{name}' has shape {x.shape}, expected {(d * m, d * m)}")
        blocks[lam] = x
    return BlockOperator(
        sizes=sizes,
        d_ref=d,
        blocks=blocks,
        dims={lam: m for lam, (m, _) in layout.items()},
        multiplicities={lam: f for lam, (_, f) in layout.items()},
    )


def unpack_code(archive: CodeArchive) -> CodeResult:
    """
    Rebuild the stored code.

    Raises:
        ArchiveFormatError: If labels, dimensions or arrays disagree with (mode, n, d)
    """
    mode, n, d, q = _header(archive.manifest)
    layouts = expected_layouts(mode, n, d)
    extra = set(archive.arrays) - {f"{p}/{label_key(lam)}" for p, lay in layouts.items() for lam in lay}
    if extra:
        raise ArchiveFormatError(f"Unexpected payload arrays: {sorted(extra)}")
    keys = [DENSE_KEY] if mode is SeesawMode.EXPLICIT else list(range(n + 1))

    def sizes(k: int) -> Tuple[int, ...]:
        return (n,) if mode is SeesawMode.EXPLICIT else (k, n - k)

    encoder_blocks = _operator(archive, "enc", layouts["enc"], n, d, (n,))
    decoders = {k: _operator(archive, f"dec/{k}", layouts[f"dec/{k}"], n, d, sizes(k)) for k in keys}
    channels = {k: _operator(archive, f"m/{k}", layouts[f"m/{k}"], n, d, sizes(k)) for k in keys}
    try:
        fidelity = float(archive.manifest["fidelity"])
        per_k = {int(k): float(v) for k, v in archive.manifest["per_k_fidelities"].items()}
    except (KeyError, ValueError, TypeError, AttributeError) as e:
        raise ArchiveFormatError(f"Manifest fidelities are malformed: {e}") from e
    if set(per_k) != set(keys):
        raise ArchiveFormatError(f"Manifest lists per-k fidelities for {sorted(per_k)}, expected {keys}")
    encoder = None
    if mode is SeesawMode.SYMMETRIC:
        encoder = from_blocks(encoder_blocks, build_converter(n, d))
    weights = {DENSE_KEY: 1.0} if mode is SeesawMode.EXPLICIT else cq_weights(n, q)
    return CodeResult(
        n=n,
        d=d,
        mode=mode,
        fidelity=fidelity,
        encoder_blocks=encoder_blocks,
        decoders=decoders,
        channel_blocks=channels,
        weights=weights,
        per_k_fidelities=per_k,
        encoder=encoder,
        erasure_prob=q,
    )


def recompute(code: CodeResult) -> Tuple[float, Dict[int, float], Dict[int, BlockOperator]]:
    """Fidelities and flag channels rebuilt from the encoder and decoders alone."""
    if code.mode is SeesawMode.SYMMETRIC:
        return code_fidelity(code.encoder, code.decoders, code.erasure_prob)
    site = effective_channel(EffectiveChannelSpec(erasure_prob=code.erasure_prob))
    channel = dense_channel(code.encoder_blocks, site, code.n)
    fidelity = block_fidelity(channel, code.decoders[DENSE_KEY], code.d)
    return fidelity, {DENSE_KEY: fidelity}, {DENSE_KEY: channel}


def _psd_violation(op: BlockOperator) -> float:
    hermiticity = max(float(np.max(np.abs(x - x.conj().T))) for x in op.blocks.values())
    return max(-min_eigenvalue(op), hermiticity, 0.0)


class _Checks:
    """Appends outcomes to a report; `passed` turns False at the first failure."""

    def __init__(self, report: VerificationReport):
        self.report = report

    def bound(self, name: str, value: float, tolerance: float, detail: str = "") -> bool:
        ok = bool(np.isfinite(value) and value <= tolerance)
        self.report.checks.append(CheckOutcome(name, ok, float(value), tolerance, detail))
        if not ok:
            logger.warning(f"Check '{name}' failed: {value:.3e} > {tolerance:.1e} {detail}".rstrip())
        return ok

    def flag(self, name: str, ok: bool, detail: str = "") -> bool:
        self.report.checks.append(CheckOutcome(name, ok, detail=detail))
        if not ok:
            logger.warning(f"Check '{name}' failed: {detail}")
        return ok


def verify_code(archive: CodeArchive, report: Optional[VerificationReport] = None) -> VerificationReport:
    """Structural and numerical checks on decoded arrays."""
    report = report if report is not None else VerificationReport()
    checks = _Checks(report)
    try:
        code = unpack_code(archive)
    except SuperactivationError as e:
        checks.flag("structure", False, str(e))
        return report
    checks.flag("structure", True, f"{code.mode.value} n={code.n} d={code.d}")

    steps: List[Callable[[], bool]] = [
        lambda: checks.bound("encoder_psd", _psd_violation(code.encoder_blocks), PSD_TOL),
        lambda: checks.bound("encoder_constraint", constraint_residual_tp(code.encoder_blocks), CONSTRAINT_TOL),
        lambda: checks.bound("decoder_psd", max(_psd_violation(x) for x in code.decoders.values()), PSD_TOL),
        lambda: checks.bound(
            "decoder_constraint",
            max(constraint_residual_unital(x) for x in code.decoders.values()),
            CONSTRAINT_TOL,
        ),
    ]
    for step in steps:
        if not step():
            return report

    fidelity, per_k, channels = recompute(code)
    if not checks.bound(
        "channel_blocks",
        max(block_max_abs_diff(channels[k], code.channel_blocks[k]) for k in channels),
        CHANNEL_TOL,
    ):
        return report
    worst_k = max(per_k, key=lambda k: abs(per_k[k] - code.per_k_fidelities[k]))
    if not checks.bound(
        "per_k_fidelity",
        abs(per_k[worst_k] - code.per_k_fidelities[worst_k]),
        FIDELITY_TOL,
        f"worst k={worst_k}",
    ):
        return report
    in_range = -FIDELITY_TOL <= fidelity <= 1.0 + FIDELITY_TOL
    checks.bound(
        "fidelity",
        abs(fidelity - code.fidelity) if in_range else np.inf,
        FIDELITY_TOL,
        f"recomputed F={fidelity:.12f}",
    )
    return report


def verify_payload(manifest: dict, payload: Dict[str, bytes]) -> VerificationReport:
    """Digest check on the raw bytes, then decode and run verify_code."""
    report = VerificationReport()
    checks = _Checks(report)
    bad = digest_mismatches(manifest, payload)
    if not checks.flag("digests", not bad, ", ".join(bad) if bad else f"{len(payload)} arrays"):
        return report
    try:
        arrays = decode_payload(payload)
    except ArchiveFormatError as e:
        checks.flag("structure", False, str(e))
        return report
    return verify_code(CodeArchive(manifest=manifest, arrays=arrays), report)


def verify_archive_file(path: Union[str, Path]) -> VerificationReport:
    """Read an archive from disk and verify it; unreadable files fail the 'container' check."""
    with tracer.start_as_current_span("archive.verify", attributes={"path": str(path)}) as span:
        try:
            manifest, payload = read_archive(path)
        except ArchiveFormatError as e:
            span.record_exception(e)
            report = VerificationReport([CheckOutcome("container", False, detail=str(e))])
        else:
            report = verify_payload(manifest, payload)
        span.set_attribute("passed", report.passed)
    if report.passed:
        logger.info(f"Archive {path} passed {len(report.checks)} checks")
    else:
        logger.warning(f"Archive {path} failed check '{report.first_failure.name}'")
    return report


def load_warm_start(path: Union[str, Path]) -> SymmetricOperator:
    """
    Encoder of a stored symmetric code, for seeding a larger run.

    Raises:
        InvalidParameterError: If the archive holds an explicit-mode code
    """
    code = unpack_code(load_archive(path))
    if code.mode is not SeesawMode.SYMMETRIC:
        raise InvalidParameterError(f"Warm start needs a symmetric-mode archive, {path} is {code.mode.value}")
    logger.info(f"Loaded warm start: n={code.n}, F={code.fidelity:.12f}")
    return code.encoder
