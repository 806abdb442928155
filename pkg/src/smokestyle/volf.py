"""VOLF volume file format.

Little-endian binary: magic "VOLF", u32 version (=1), u32 rank (2 or 3),
u32 extent per axis (nx, ny[, nz]), u32 channel count, then float32 values
stored channel-fastest, then x-fastest.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fields import ColorField, Field, ScalarField, VectorField

MAGIC = b"VOLF"
VERSION = 1


def write_volf(path, values: np.ndarray, rank: int) -> None:
    values = np.asarray(values, dtype=np.float32)
    if values.ndim == rank:
        values = values[..., None]
    if values.ndim != rank + 1:
        raise ValueError(f"expected {rank} spatial axes plus channels, got shape {values.shape}")
    dims = values.shape[:rank]
    channels = values.shape[-1]
    header = struct.pack(f"<4sII{rank}II", MAGIC, VERSION, rank, *dims, channels)
    # disk order: z (3D), y, x, channel
    disk = values.transpose(tuple(reversed(range(rank))) + (rank,))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(disk).tobytes())


def read_volf(path) -> tuple[np.ndarray, int]:
    """Returns (values with shape dims + (channels,), rank)."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a VOLF file")
    version, rank = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported VOLF version {version}")
    if rank not in (2, 3):
        raise ValueError(f"{path}: rank must be 2 or 3, got {rank}")
    dims = struct.unpack_from(f"<{rank}I", raw, 12)
    (channels,) = struct.unpack_from("<I", raw, 12 + 4 * rank)
    offset = 16 + 4 * rank
    count = int(np.prod(dims)) * channels
    flat = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
    disk = flat.reshape(tuple(reversed(dims)) + (channels,))
    values = disk.transpose(tuple(reversed(range(rank))) + (rank,))
    return np.ascontiguousarray(values), rank


def write_field(path, field: Field) -> None:
    write_volf(path, field.values, field.rank)


def read_scalar(path) -> ScalarField:
    values, rank = read_volf(path)
    if values.shape[-1] != 1:
        raise ValueError(f"{path}: expected 1 channel, got {values.shape[-1]}")
    return ScalarField(values[..., 0])


def read_vector(path) -> VectorField:
    values, rank = read_volf(path)
    if values.shape[-1] != rank:
        raise ValueError(f"{path}: expected {rank} channels, got {values.shape[-1]}")
    return VectorField(values)


def read_color(path) -> ColorField:
    values, rank = read_volf(path)
    if values.shape[-1] != 3:
        raise ValueError(f"{path}: expected 3 channels, got {values.shape[-1]}")
    return ColorField(values)
