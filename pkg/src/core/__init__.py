"""Core module initialization."""
from core.models import (
    ValidationMode,
    SeesawMode,
    BoundKind,
    CheckSuite,
    ChoiMatrix,
    DensityOperator,
    ValidationReport,
    PrivateStateSectors,
    EffectiveChannelSpec,
    FlaggedSiteChannels,
    OrbitType,
    Partition,
    IrrepLabel,
    SymmetricOperator,
    BlockOperator,
    PowerIterationResult,
    SeesawConfig,
    IterationRecord,
    CodeResult,
    EffectiveParams,
    BoundSample,
    BoundCurve,
    CodeArchive,
    CheckOutcome,
    VerificationReport,
)

from core.interfaces import (
    ISeesawEngine,
    IPowerIteration,
    IRateBound,
)

from core.exceptions import (
    SuperactivationError,
    InvalidDimensionError,
    InvalidKrausError,
    NotTracePreservingError,
    InvalidInputError,
    InvalidCompositionError,
    InvalidParameterError,
    UnsupportedDimensionError,
    SizeLimitError,
    ConvergenceError,
    ArchiveFormatError,
    CrossingNotFoundError,
)

__all__ = [
    "ValidationMode",
    "SeesawMode",
    "BoundKind",
    "CheckSuite",
    "ChoiMatrix",
    "DensityOperator",
    "ValidationReport",
    "PrivateStateSectors",
    "EffectiveChannelSpec",
    "FlaggedSiteChannels",
    "OrbitType",
    "Partition",
    "IrrepLabel",
    "SymmetricOperator",
    "BlockOperator",
    "PowerIterationResult",
    "SeesawConfig",
    "IterationRecord",
    "CodeResult",
    "EffectiveParams",
    "BoundSample",
    "BoundCurve",
    "CodeArchive",
    "CheckOutcome",
    "VerificationReport",
    "ISeesawEngine",
    "IPowerIteration",
    "IRateBound",
    "SuperactivationError",
    "InvalidDimensionError",
    "InvalidKrausError",
    "NotTracePreservingError",
    "InvalidInputError",
    "InvalidCompositionError",
    "InvalidParameterError",
    "UnsupportedDimensionError",
    "SizeLimitError",
    "ConvergenceError",
    "ArchiveFormatError",
    "CrossingNotFoundError",
]
