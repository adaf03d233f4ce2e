"""
Configuration module for the superactivation toolkit.

Centralizes runtime and solver-default loading from the environment (and an
optional .env file). Command-line flags override everything read here.
"""
import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv
from typing_extensions import Self

load_dotenv()

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _env_bool(name: str, default: bool = False) -> bool:
    value = os.environ.get(name)
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    value = os.environ.get(name)
    if value is None or value.strip() == "":
        return default
    return int(value)


def _env_float(name: str, default: float) -> float:
    value = os.environ.get(name)
    if value is None or value.strip() == "":
        return default
    return float(value)


@dataclass
class RuntimeSettings:
    """Process-level settings: parallelism, logging, tracing."""
    threads: int
    log_level: str = "INFO"
    trace_console: bool = False
    explicit_max_n: int = 6

    @classmethod
    def from_env(cls) -> Self:
        """Load runtime settings from environment variables."""
        return cls(
            threads=_env_int("SUPERACT_THREADS", os.cpu_count() or 1),
            log_level=os.environ.get("SUPERACT_LOG_LEVEL", "INFO").upper(),
            trace_console=_env_bool("SUPERACT_TRACE_CONSOLE"),
            explicit_max_n=_env_int("SUPERACT_EXPLICIT_MAX_N", 6),
        )

    def is_valid(self) -> tuple[bool, str]:
        """Validate the settings."""
        problems = []
        if self.threads < 1:
            problems.append(f"SUPERACT_THREADS must be >= 1 (got {self.threads})")
        if self.log_level not in LOG_LEVELS:
            problems.append(f"SUPERACT_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}")
        if self.explicit_max_n < 1:
            problems.append("SUPERACT_EXPLICIT_MAX_N must be >= 1")
        if problems:
            return False, "; ".join(problems)
        return True, "Configuration valid"


@dataclass
class SeesawDefaults:
    """Solver tolerances and iteration caps."""
    seesaw_tol: float = 1e-9
    power_tol: float = 1e-11
    max_outer_iters: int = 500
    max_power_iters: int = 5000
    restarts_small: int = 16
    restarts_large: int = 32
    pinv_cutoff: float = 1e-12

    @classmethod
    def from_env(cls) -> Self:
        """Load solver defaults, falling back to the built-in values."""
        base = cls()
        return cls(
            seesaw_tol=_env_float("SUPERACT_SEESAW_TOL", base.seesaw_tol),
            power_tol=_env_float("SUPERACT_POWER_TOL", base.power_tol),
            max_outer_iters=_env_int("SUPERACT_MAX_OUTER_ITERS", base.max_outer_iters),
            max_power_iters=_env_int("SUPERACT_MAX_POWER_ITERS", base.max_power_iters),
            restarts_small=_env_int("SUPERACT_RESTARTS_SMALL", base.restarts_small),
            restarts_large=_env_int("SUPERACT_RESTARTS_LARGE", base.restarts_large),
            pinv_cutoff=_env_float("SUPERACT_PINV_CUTOFF", base.pinv_cutoff),
        )

    def is_valid(self) -> tuple[bool, str]:
        """Validate tolerances and caps."""
        problems = []
        for name in ("seesaw_tol", "power_tol", "pinv_cutoff"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive")
        for name in ("max_outer_iters", "max_power_iters", "restarts_small", "restarts_large"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if problems:
            return False, "; ".join(problems)
        return True, "Configuration valid"
