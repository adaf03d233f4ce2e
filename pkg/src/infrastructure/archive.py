"""
Code archive container.

A single ZIP file holding `manifest.json` and one `.npy` entry per block.
Complex blocks are stored as little-endian float64 arrays with a trailing
axis of length 2 holding (re, im), so each entry is row-major with a shape
header. Entry timestamps are pinned and names are written in sorted order,
so identical inputs give byte-identical files.
"""
import hashlib
import io
import json
import logging
import zipfile
import zlib
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from core.exceptions import ArchiveFormatError
from core.models import CodeArchive
from infrastructure.tracing import get_tracer

tracer = get_tracer(__name__)
logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
TOOL_VERSION = "superactivation 1.0.0"
MANIFEST_NAME = "manifest.json"
ENTRY_SUFFIX = ".npy"
ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)

PathLike = Union[str, Path]


def sha256_hex(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def encode_array(x: np.ndarray) -> bytes:
    """Complex array → .npy bytes of shape x.shape + (2,), dtype <f8."""
    pairs = np.stack([np.real(x), np.imag(x)], axis=-1).astype("<f8")
    buffer = io.BytesIO()
    np.save(buffer, np.ascontiguousarray(pairs), allow_pickle=False)
    return buffer.getvalue()


def decode_array(raw: bytes) -> np.ndarray:
    """
    Inverse of encode_array.

    Raises:
        ArchiveFormatError: If the bytes are not a float64 (re, im) array
    """
    try:
        pairs = np.load(io.BytesIO(raw), allow_pickle=False)
    except (ValueError, OSError, EOFError) as e:
        raise ArchiveFormatError(f"Unreadable payload array: {e}") from e
    if pairs.dtype != np.dtype("<f8") or pairs.ndim < 1 or pairs.shape[-1] != 2:
        raise ArchiveFormatError(f"Payload array has dtype {pairs.dtype} and shape {pairs.shape}")
    return pairs[..., 0] + 1j * pairs[..., 1]


def encode_payload(arrays: Dict[str, np.ndarray]) -> Dict[str, bytes]:
    return {name: encode_array(arrays[name]) for name in sorted(arrays)}


def decode_payload(payload: Dict[str, bytes]) -> Dict[str, np.ndarray]:
    return {name: decode_array(raw) for name, raw in payload.items()}


def payload_index(arrays: Dict[str, np.ndarray], payload: Dict[str, bytes]) -> Dict[str, dict]:
    """Manifest entry per array: declared shape and SHA-256 of the stored bytes."""
    return {
        name: {"shape": list(arrays[name].shape), "sha256": sha256_hex(payload[name])}
        for name in sorted(arrays)
    }


def digest_mismatches(manifest: dict, payload: Dict[str, bytes]) -> List[str]:
    """Names whose stored bytes are missing, unexpected, or differ from the manifest digest."""
    declared = manifest.get("payload")
    if not isinstance(declared, dict):
        return sorted(payload) or [MANIFEST_NAME]
    bad = [name for name in sorted(declared) if name not in payload]
    bad += [name for name in sorted(payload) if name not in declared]
    bad += [
        name for name in sorted(declared)
        if name in payload
        and (not isinstance(declared[name], dict) or sha256_hex(payload[name]) != declared[name].get("sha256"))
    ]
    return bad


def _entry(name: str) -> zipfile.ZipInfo:
    info = zipfile.ZipInfo(name, date_time=ZIP_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    return info


def archive_bytes(archive: CodeArchive) -> bytes:
    """Serialize to ZIP bytes; fills manifest['payload'] with shapes and digests."""
    payload = encode_payload(archive.arrays)
    archive.manifest["format_version"] = FORMAT_VERSION
    archive.manifest["payload"] = payload_index(archive.arrays, payload)
    manifest = json.dumps(archive.manifest, sort_keys=True, indent=2) + "\n"
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as zf:
        zf.writestr(_entry(MANIFEST_NAME), manifest.encode("utf-8"))
        for name in sorted(payload):
            zf.writestr(_entry(name + ENTRY_SUFFIX), payload[name])
    return buffer.getvalue()


def write_archive(archive: CodeArchive, path: PathLike) -> Path:
    """Write the archive to `path` (single writer)."""
    path = Path(path)
    with tracer.start_as_current_span("archive.write", attributes={"path": str(path)}) as span:
        raw = archive_bytes(archive)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(raw)
        span.set_attribute("arrays", len(archive.arrays))
        span.set_attribute("bytes", len(raw))
    logger.info(f"Wrote {len(archive.arrays)} arrays ({len(raw)} bytes) to {path}")
    return path


def read_archive(path: PathLike) -> Tuple[dict, Dict[str, bytes]]:
    """
    Read the manifest and the raw payload bytes without decoding.

    Raises:
        ArchiveFormatError: If the file is not a readable archive or lacks a manifest
    """
    path = Path(path)
    try:
        with zipfile.ZipFile(path) as zf:
            names = zf.namelist()
            if MANIFEST_NAME not in names:
                raise ArchiveFormatError(f"{path} has no {MANIFEST_NAME}")
            manifest = json.loads(zf.read(MANIFEST_NAME).decode("utf-8"))
            payload = {
                name[: -len(ENTRY_SUFFIX)]: zf.read(name)
                for name in names
                if name.endswith(ENTRY_SUFFIX)
            }
    except (zipfile.BadZipFile, zlib.error, EOFError, OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ArchiveFormatError(f"Cannot read archive {path}: {e}") from e
    if not isinstance(manifest, dict):
        raise ArchiveFormatError(f"Manifest of {path} is not a JSON object")
    return manifest, payload


def load_archive(path: PathLike) -> CodeArchive:
    """Read and decode every payload array."""
    manifest, payload = read_archive(path)
    return CodeArchive(manifest=manifest, arrays=decode_payload(payload))
