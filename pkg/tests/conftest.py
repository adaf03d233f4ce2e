"""Shared fixtures and strategies."""
import struct
import zipfile

import numpy as np
import pytest
from hypothesis import strategies as st

from services.channel_core import random_channel
from symmetry.dense import from_dense


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_cptp(rng):
    """Factory for random channels d_in -> d_out."""
    def make(d_in: int, d_out: int, rank=None):
        return random_channel(d_in, d_out, rng, rank)
    return make


def random_matrix(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))


def random_invariant(rng: np.random.Generator, n: int, d_ref: int = 2, sizes=None):
    """Orbit average of a random dense operator on R ⊗ (C²)^{⊗n}."""
    sizes = (n,) if sizes is None else sizes
    return from_dense(random_matrix(rng, d_ref * 2 ** n), 2, d_ref, sizes)


seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def flip_stored_byte(path, prefix: str) -> None:
    """Corrupt the compressed bytes of the first entry whose name starts with `prefix`, in place."""
    raw = bytearray(path.read_bytes())
    with zipfile.ZipFile(path) as zf:
        info = next(i for i in zf.infolist() if i.filename.startswith(prefix))
    start = info.header_offset
    name_len, extra_len = struct.unpack("<HH", raw[start + 26:start + 30])
    raw[start + 30 + name_len + extra_len + info.compress_size // 2] ^= 0xFF
    path.write_bytes(bytes(raw))
