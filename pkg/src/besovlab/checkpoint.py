"""Binary checkpoints: a fixed little-endian header followed by float64 samples.

Layout: magic ``BNSD``, uint32 version, uint32 d, uint32 n, float64 L,
float64 t, 32-byte SHA-256 digest of the fluid parameters, then a and the u
components in row-major order.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .grid import Grid
from .solver import FluidParams, State

MAGIC = b"BNSD"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdd32s")


class CheckpointError(ValueError):
    pass


class MagicMismatchError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class TruncatedPayloadError(CheckpointError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"payload holds {actual} values, expected {expected}")
        self.expected, self.actual = expected, actual


class DigestMismatchError(CheckpointError):
    pass


def params_digest(params: FluidParams) -> bytes:
    blob = json.dumps(dataclasses.asdict(params), sort_keys=True).encode()
    return hashlib.sha256(blob).digest()


def write_checkpoint(path, state: State, params: FluidParams) -> Path:
    path = Path(path)
    g = state.grid
    header = _HEADER.pack(MAGIC, VERSION, g.d, g.n, float(g.L), float(state.t), params_digest(params))
    payload = np.concatenate([state.a[None], state.u]).astype("<f8", copy=False)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(payload).tobytes())
    return path


def read_checkpoint(path, params: FluidParams | None = None) -> State:
    """Load a state; with ``params`` given, the stored digest must match them."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size or raw[:4] != MAGIC:
        raise MagicMismatchError(f"{path}: not a checkpoint (magic {raw[:4]!r})")
    magic, version, d, n, L, t, digest = _HEADER.unpack_from(raw)
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, reader supports {VERSION}")
    expected = (d + 1) * n**d
    body = raw[_HEADER.size :]
    actual, rest = divmod(len(body), 8)
    if actual != expected or rest:
        raise TruncatedPayloadError(expected, actual)
    if params is not None and digest != params_digest(params):
        raise DigestMismatchError(f"{path}: parameter digest does not match the configuration")
    grid = Grid(d, n, L)
    data = np.frombuffer(body, dtype="<f8").reshape((d + 1,) + grid.shape).astype(float)
    return State(grid, data[0], data[1:], t)
