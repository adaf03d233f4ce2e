"""
Command-line driver.

Usage:
  python src/cli.py seesaw --n 17 --restarts 32 --out code17.zip
  python src/cli.py verify code17.zip
  python src/cli.py bounds --epsilon 0.25 --kind normal --crossing
  python src/cli.py check --suite all

Machine-readable JSON (or CSV) goes to stdout, logs go to stderr.
Exit codes: 0 ok, 1 verification / self-check failure, 2 usage or input error.
"""
import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from core.exceptions import InvalidParameterError, SuperactivationError
from core.models import BoundCurve, BoundKind, CheckSuite, CodeResult, EffectiveParams, SeesawConfig, SeesawMode
from infrastructure.archive import write_archive
from infrastructure.config import RuntimeSettings, SeesawDefaults
from infrastructure.tracing import setup_tracing
from seesaw.explicit import ExplicitSeesaw
from seesaw.symmetric import SymmetricSeesaw
from seesaw.verification import load_warm_start, pack_code, verify_archive_file
from services.bounds import (
    BERRY_ESSEEN_C,
    crossing_point,
    error_exponent_threshold,
    fidelity_upper_bounds,
    log_spaced_ns,
    make_bound,
    sample_curve,
)
from services.self_checks import dimension_table, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
ERROR_EXPONENT_TARGETS = (0.25, 0.5)


def _emit(payload) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )
    # Silence noisy loggers
    logging.getLogger('opentelemetry').setLevel(logging.WARNING)
    logging.getLogger('numexpr').setLevel(logging.WARNING)


# ---------------------------------------------------------------------------
# seesaw
# ---------------------------------------------------------------------------

def _config(args, n: int, defaults: SeesawDefaults, settings: RuntimeSettings, warm=None) -> SeesawConfig:
    return SeesawConfig(
        n=n,
        d=args.d,
        seesaw_tol=args.tol if args.tol is not None else defaults.seesaw_tol,
        power_tol=args.power_tol if args.power_tol is not None else defaults.power_tol,
        max_outer_iters=args.max_outer_iters or defaults.max_outer_iters,
        max_power_iters=args.max_power_iters or defaults.max_power_iters,
        restarts=args.restarts,
        master_seed=args.seed,
        mode=SeesawMode(args.mode),
        erasure_prob=args.erasure_prob,
        threads=args.threads or settings.threads,
        pinv_cutoff=defaults.pinv_cutoff,
        explicit_max_n=args.explicit_max_n or settings.explicit_max_n,
        warm_start=warm,
    )


def _provenance(engine, config: SeesawConfig) -> dict:
    info = engine.get_configuration_info(config)
    return {
        "seed": config.master_seed,
        "restarts": info["restarts"],
        "tolerances": {"seesaw": config.seesaw_tol, "power": config.power_tol, "pinv_cutoff": config.pinv_cutoff},
        "iteration_caps": {"outer": config.max_outer_iters, "power": config.max_power_iters},
        "warm_start": info["warm_start"],
    }


def _run_one(engine, config: SeesawConfig, out: Path) -> Tuple[dict, CodeResult]:
    start = time.perf_counter()
    result: CodeResult = engine.run(config)
    wall_time = time.perf_counter() - start
    write_archive(pack_code(result, _provenance(engine, config)), out)
    return {
        "n": result.n,
        "fidelity": result.fidelity,
        "iterations": len(result.trace),
        "wall_time": wall_time,
        "converged": result.converged,
        "restart": result.restart_index,
        "archive": str(out),
        "warnings": result.warnings,
    }, result


def cmd_seesaw(args, settings: RuntimeSettings) -> int:
    if args.n is None and args.sweep is None:
        raise InvalidParameterError("Give --n or --sweep")
    defaults = SeesawDefaults.from_env()
    ok, message = defaults.is_valid()
    if not ok:
        raise InvalidParameterError(message)
    engine = SymmetricSeesaw(defaults) if args.mode == SeesawMode.SYMMETRIC.value else ExplicitSeesaw(defaults=defaults)
    warm = load_warm_start(args.warm_start) if args.warm_start else None
    two_ext = fidelity_upper_bounds(args.d).two_ext

    if args.sweep is None:
        out = Path(args.out or f"code_n{args.n}.zip")
        summary, _ = _run_one(engine, _config(args, args.n, defaults, settings, warm), out)
        summary["exceeds_two_extendible"] = summary["fidelity"] > two_ext
        _emit(summary)
        return EXIT_OK

    directory = Path(args.out or "codes")
    curve: List[dict] = []
    for n in range(1, args.sweep + 1):
        if warm is not None and warm.n not in (n - 1, n):
            warm = None
        summary, result = _run_one(engine, _config(args, n, defaults, settings, warm), directory / f"code_n{n}.zip")
        curve.append(summary)
        warm = result.encoder if args.mode == SeesawMode.SYMMETRIC.value else None
    crossing = next((row["n"] for row in curve if row["fidelity"] > two_ext), None)
    _emit({"curve": curve, "two_extendible_bound": two_ext, "first_n_above_bound": crossing})
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args, settings: RuntimeSettings) -> int:
    report = verify_archive_file(args.path)
    _emit(report.to_dict())
    return EXIT_OK if report.passed else EXIT_FAILED


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def curve_csv(curve: BoundCurve) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=["n", "value", "valid"], lineterminator="\n")
    writer.writeheader()
    writer.writerows(curve.rows())
    return buffer.getvalue()


def _crossing(args, kind: BoundKind, params: EffectiveParams):
    if kind is BoundKind.ERROR_EXPONENT:
        return {str(t): error_exponent_threshold(t, args.d, params) for t in ERROR_EXPONENT_TARGETS}
    return crossing_point(args.epsilon, kind, params, args.constant)


def cmd_bounds(args, settings: RuntimeSettings) -> int:
    kind = BoundKind(args.kind)
    params = EffectiveParams.superactivation()
    bound = make_bound(kind, args.epsilon, args.d, params, args.constant)
    ns = log_spaced_ns(args.n_min, args.n_max, args.points)
    parameter = float(args.d) if kind is BoundKind.ERROR_EXPONENT else args.epsilon
    curve = sample_curve(bound, ns, parameter, args.threads or settings.threads)
    crossing = _crossing(args, kind, params) if args.crossing else None

    if args.format == "csv":
        text = curve_csv(curve)
    else:
        text = json.dumps(
            {"kind": kind.value, "parameter": parameter, "samples": curve.rows(), "crossing": crossing},
            indent=2,
            sort_keys=True,
        ) + "\n"

    if args.out:
        Path(args.out).write_text(text)
        _emit({"kind": kind.value, "parameter": parameter, "points": len(curve.samples), "out": args.out,
               "crossing": crossing})
    else:
        sys.stdout.write(text)
        if crossing is not None and args.format == "csv":
            logger.info(f"Crossing: {crossing}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def cmd_check(args, settings: RuntimeSettings) -> int:
    reports = run_suite(CheckSuite(args.suite), args.seed)
    payload = {name: report.to_dict() for name, report in reports.items()}
    if args.suite in (CheckSuite.SYMMETRY.value, CheckSuite.ALL.value):
        payload["dimension_table"] = dimension_table()
    _emit(payload)
    return EXIT_OK if all(r.passed for r in reports.values()) else EXIT_FAILED


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cli.py",
        description="Superactivation codes: seesaw search, archive verification, finite-blocklength bounds.",
    )
    parser.add_argument("--log-level", default=None, help="Override SUPERACT_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    seesaw = sub.add_parser("seesaw", help="Search for a code and write its archive")
    seesaw.add_argument("--n", type=_positive_int, help="Channel uses")
    seesaw.add_argument("--d", type=int, default=2, help="Input dimension")
    seesaw.add_argument("--mode", choices=[m.value for m in SeesawMode], default=SeesawMode.SYMMETRIC.value)
    seesaw.add_argument("--restarts", type=_positive_int, default=None)
    seesaw.add_argument("--tol", type=float, default=None, help="Outer seesaw tolerance δ")
    seesaw.add_argument("--power-tol", type=float, default=None, help="Power-iteration tolerance δ_p")
    seesaw.add_argument("--max-outer-iters", type=_positive_int, default=None)
    seesaw.add_argument("--max-power-iters", type=_positive_int, default=None)
    seesaw.add_argument("--seed", type=int, default=0, help="Master seed")
    seesaw.add_argument("--out", default=None, help="Archive path (directory with --sweep)")
    seesaw.add_argument("--warm-start", default=None, help="Archive whose encoder seeds restart 0")
    seesaw.add_argument("--sweep", type=_positive_int, default=None, help="Run n = 1..N, each warm-started")
    seesaw.add_argument("--threads", type=_positive_int, default=None)
    seesaw.add_argument("--erasure-prob", type=float, default=0.5)
    seesaw.add_argument("--explicit-max-n", type=_positive_int, default=None)
    seesaw.set_defaults(handler=cmd_seesaw)

    verify = sub.add_parser("verify", help="Re-check a code archive")
    verify.add_argument("path")
    verify.set_defaults(handler=cmd_verify)

    bounds = sub.add_parser("bounds", help="Tabulate a finite-blocklength bound")
    bounds.add_argument("--epsilon", type=float, default=0.25)
    bounds.add_argument("--kind", choices=[k.value for k in BoundKind if k is not BoundKind.SEESAW],
                        default=BoundKind.NORMAL.value)
    bounds.add_argument("--d", type=int, default=2, help="Code dimension (error_exponent)")
    bounds.add_argument("--n-min", type=_positive_int, default=1)
    bounds.add_argument("--n-max", type=_positive_int, default=10000)
    bounds.add_argument("--points", type=_positive_int, default=50)
    bounds.add_argument("--format", choices=["csv", "json"], default="json")
    bounds.add_argument("--out", default=None)
    bounds.add_argument("--crossing", action="store_true", help="Also report the crossing blocklength")
    bounds.add_argument("--constant", type=float, default=BERRY_ESSEEN_C, help="Berry–Esseen constant")
    bounds.add_argument("--threads", type=_positive_int, default=None)
    bounds.set_defaults(handler=cmd_bounds)

    check = sub.add_parser("check", help="Run self-check suites")
    check.add_argument("--suite", choices=[s.value for s in CheckSuite], default=CheckSuite.ALL.value)
    check.add_argument("--seed", type=int, default=0)
    check.set_defaults(handler=cmd_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    settings = RuntimeSettings.from_env()
    if args.log_level:
        settings.log_level = args.log_level.upper()
    ok, message = settings.is_valid()
    configure_logging(settings.log_level if ok else "INFO")
    if not ok:
        logger.error(f"Configuration invalid: {message}")
        return EXIT_USAGE
    if settings.trace_console:
        setup_tracing(console=True)

    try:
        return args.handler(args, settings)
    except SuperactivationError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
