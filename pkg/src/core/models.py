"""
Core data models for the superactivation toolkit.

These models represent channels, states, permutation-invariant operators,
optimization runs and bound curves shared across the services.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from core.exceptions import InvalidDimensionError, InvalidInputError


class ValidationMode(Enum):
    """Which marginal constraint a Choi matrix is checked against."""
    CPTP = "cptp"
    CPU = "cpu"
    PPT = "ppt"


class SeesawMode(Enum):
    """Seesaw engine variants."""
    EXPLICIT = "explicit"
    SYMMETRIC = "symmetric"


class BoundKind(Enum):
    """Kinds of finite-blocklength curves."""
    NORMAL = "normal"
    BERRY_ESSEEN = "berry_esseen"
    PPT_UPPER = "ppt_upper"
    ERASURE_UPPER = "erasure_upper"
    ERROR_EXPONENT = "error_exponent"
    SEESAW = "seesaw"


class CheckSuite(Enum):
    """Self-check suites runnable from the CLI."""
    CORE = "core"
    SYMMETRY = "symmetry"
    EFFECTIVE = "effective"
    ALL = "all"


# ---------------------------------------------------------------------------
# Channels and states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChoiMatrix:
    """Unnormalized Choi matrix with index convention (input ⊗ output)."""
    dim_in: int
    dim_out: int
    gamma: np.ndarray

    def __post_init__(self):
        if self.dim_in < 1 or self.dim_out < 1:
            raise InvalidDimensionError(
                f"Choi dimensions must be positive, got {self.dim_in}->{self.dim_out}"
            )
        size = self.dim_in * self.dim_out
        if self.gamma.shape != (size, size):
            raise InvalidDimensionError(
                f"Choi matrix for {self.dim_in}->{self.dim_out} must be {size}x{size}, "
                f"got {self.gamma.shape}"
            )
        if not np.all(np.isfinite(self.gamma)):
            raise InvalidInputError(f"Choi matrix for {self.dim_in}->{self.dim_out} has non-finite entries")

    @property
    def tensor(self) -> np.ndarray:
        """View as a rank-4 tensor indexed [a, b, a', b']."""
        return self.gamma.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out)

    @property
    def state(self) -> np.ndarray:
        """Normalized Choi state Φ^N = Γ^N / d_A."""
        return self.gamma / self.dim_in


@dataclass(frozen=True)
class DensityOperator:
    """A quantum state on a `dim`-dimensional space."""
    dim: int
    rho: np.ndarray

    def __post_init__(self):
        if self.dim < 1 or self.rho.shape != (self.dim, self.dim):
            raise InvalidDimensionError(
                f"Density operator of dimension {self.dim} has shape {self.rho.shape}"
            )

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))


@dataclass
class ValidationReport:
    """Worst constraint violations of a Choi matrix."""
    hermiticity: float
    psd: float
    marginal: float = 0.0
    ppt: Optional[float] = None

    @property
    def max_violation(self) -> float:
        values = [self.hermiticity, self.psd, self.marginal]
        if self.ppt is not None:
            values.append(self.ppt)
        return max(values)

    def passed(self, tol: float = 1e-9) -> bool:
        return self.max_violation <= tol

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hermiticity": self.hermiticity,
            "psd": self.psd,
            "marginal": self.marginal,
            "ppt": self.ppt,
        }


# ---------------------------------------------------------------------------
# Effective channel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrivateStateSectors:
    """
    Decomposition of a PPT Choi state into shifted private states.

    twist_unitaries maps (i, ℓ) to U^{i,ℓ}, acting on the shield pair
    (reference shield, output shield).
    """
    key_dim: int
    shield_dim: int
    weights: Tuple[float, ...]
    shield_states: Tuple[np.ndarray, ...]
    twist_unitaries: Dict[Tuple[int, int], np.ndarray]

    def unitary(self, i: int, shift: int) -> np.ndarray:
        return self.twist_unitaries[(i, shift)]


@dataclass(frozen=True)
class EffectiveChannelSpec:
    """Parameters of the flagged effective channel Ñ."""
    key_dim: int = 2
    shield_dim: int = 2
    erasure_prob: float = 0.5
    weights: Tuple[float, ...] = (2.0 - np.sqrt(2.0), np.sqrt(2.0) - 1.0)


@dataclass(frozen=True)
class FlaggedSiteChannels:
    """N_k = P^{⊗k} ⊗ id^{⊗(n−k)} described by its two single-site Choi matrices."""
    n: int
    k: int
    erased: ChoiMatrix
    intact: ChoiMatrix

    @property
    def sizes(self) -> Tuple[int, int]:
        return (self.k, self.n - self.k)

    @property
    def site_channels(self) -> Tuple[ChoiMatrix, ChoiMatrix]:
        return (self.erased, self.intact)


# ---------------------------------------------------------------------------
# Symmetry
# ---------------------------------------------------------------------------

# Count vector over local index pairs (a, a'), pair index a*d + a'.
OrbitType = Tuple[int, ...]


@dataclass(frozen=True, order=True)
class Partition:
    """Weakly decreasing positive parts; () is the empty partition of 0."""
    parts: Tuple[int, ...]

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def rows(self) -> int:
        return len(self.parts)

    def part(self, i: int) -> int:
        return self.parts[i] if i < len(self.parts) else 0

    @property
    def label(self) -> str:
        return "[" + ",".join(str(p) for p in self.parts) + "]"

    def __str__(self) -> str:
        return self.label


# One partition for S_n, one per factor for S_k×S_{n−k}; () labels a dense block.
IrrepLabel = Tuple[Partition, ...]


@dataclass
class SymmetricOperator:
    """
    Permutation-invariant operator on R ⊗ S^n in orbit coordinates.

    coeffs has shape (d_ref, d_ref, T_1, ..., T_f) where T_i is the number of
    orbit types of factor i of the group S_{sizes[0]} × ... × S_{sizes[-1]}.
    """
    d_local: int
    d_ref: int
    sizes: Tuple[int, ...]
    coeffs: np.ndarray

    @property
    def n(self) -> int:
        return sum(self.sizes)

    def copy(self) -> "SymmetricOperator":
        return SymmetricOperator(self.d_local, self.d_ref, self.sizes, self.coeffs.copy())


@dataclass
class BlockOperator:
    """Schur–Weyl block form: IrrepLabel → (d_ref·m_λ)-square matrix."""
    sizes: Tuple[int, ...]
    d_ref: int
    blocks: Dict[IrrepLabel, np.ndarray]
    dims: Dict[IrrepLabel, int]
    multiplicities: Dict[IrrepLabel, int]

    @property
    def labels(self) -> List[IrrepLabel]:
        return list(self.blocks.keys())

    def with_blocks(self, blocks: Dict[IrrepLabel, np.ndarray]) -> "BlockOperator":
        return BlockOperator(self.sizes, self.d_ref, blocks, dict(self.dims), dict(self.multiplicities))

    def copy(self) -> "BlockOperator":
        return self.with_blocks({lam: b.copy() for lam, b in self.blocks.items()})


# ---------------------------------------------------------------------------
# Seesaw
# ---------------------------------------------------------------------------

@dataclass
class PowerIterationResult:
    """Outcome of one half-step power iteration."""
    fidelity: float
    operator: BlockOperator
    iterations: int
    converged: bool
    trace: List[float] = field(default_factory=list)


@dataclass
class SeesawConfig:
    """Run parameters of a seesaw optimization."""
    n: int
    d: int = 2
    seesaw_tol: float = 1e-9
    power_tol: float = 1e-11
    max_outer_iters: int = 500
    max_power_iters: int = 5000
    restarts: Optional[int] = None
    master_seed: int = 0
    mode: SeesawMode = SeesawMode.SYMMETRIC
    erasure_prob: float = 0.5
    threads: int = 1
    pinv_cutoff: float = 1e-12
    explicit_max_n: int = 6
    warm_start: Optional[SymmetricOperator] = None

    def resolved_restarts(self, small: int = 16, large: int = 32) -> int:
        if self.restarts is not None:
            return self.restarts
        return small if self.n <= 10 else large


@dataclass
class IterationRecord:
    """One outer seesaw iteration."""
    outer: int
    f_decoder: float
    f_encoder: float


@dataclass
class CodeResult:
    """Encoder, per-weight decoders and the fidelity they achieve."""
    n: int
    d: int
    mode: SeesawMode
    fidelity: float
    encoder_blocks: BlockOperator
    decoders: Dict[int, BlockOperator]
    channel_blocks: Dict[int, BlockOperator]
    weights: Dict[int, float]
    per_k_fidelities: Dict[int, float]
    encoder: Optional[SymmetricOperator] = None
    trace: List[IterationRecord] = field(default_factory=list)
    restart_index: int = 0
    converged: bool = True
    warnings: List[str] = field(default_factory=list)
    erasure_prob: float = 0.5


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EffectiveParams:
    """Inputs to the coherent-information moments of Ñ."""
    erasure_prob: float
    key_dim: int
    weights: Tuple[float, ...]

    @classmethod
    def superactivation(cls) -> "EffectiveParams":
        """The flagged channel obtained from the Horodecki/erasure pair."""
        p = 1.0 / (1.0 + np.sqrt(2.0))
        return cls(erasure_prob=0.5, key_dim=2, weights=(1.0 - p, p))


@dataclass
class BoundSample:
    n: int
    value: float
    valid: bool = True


@dataclass
class BoundCurve:
    """Tabulated samples of one bound at fixed ε (or fixed d)."""
    kind: BoundKind
    parameter: float
    samples: List[BoundSample] = field(default_factory=list)

    def rows(self) -> List[Dict[str, Any]]:
        """Plain rows; non-finite values become None."""
        return [
            {"n": s.n, "value": float(s.value) if np.isfinite(s.value) else None, "valid": bool(s.valid)}
            for s in self.samples
        ]


# ---------------------------------------------------------------------------
# Archive
# ---------------------------------------------------------------------------

@dataclass
class CodeArchive:
    """Manifest plus named payload arrays."""
    manifest: Dict[str, Any]
    arrays: Dict[str, np.ndarray]


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    value: float = 0.0
    tolerance: float = 0.0
    detail: str = ""


@dataclass
class VerificationReport:
    """Ordered list of check outcomes; fails at the first failing check."""
    checks: List[CheckOutcome] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> Optional[CheckOutcome]:
        return next((c for c in self.checks if not c.passed), None)

    def to_dict(self) -> Dict[str, Any]:
        failure = self.first_failure
        return {
            "passed": self.passed,
            "first_failure": failure.name if failure else None,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "value": c.value,
                    "tolerance": c.tolerance,
                    "detail": c.detail,
                }
                for c in self.checks
            ],
        }
