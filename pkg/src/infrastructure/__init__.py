"""Infrastructure module initialization."""
from infrastructure.config import RuntimeSettings, SeesawDefaults
from infrastructure.tracing import setup_tracing, get_tracer
from infrastructure.archive import write_archive, read_archive, load_archive

__all__ = [
    "RuntimeSettings",
    "SeesawDefaults",
    "setup_tracing",
    "get_tracer",
    "write_archive",
    "read_archive",
    "load_archive",
]
