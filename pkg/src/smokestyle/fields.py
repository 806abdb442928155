"""Dense grid containers for smoke data, plus interpolation and resampling.

Grids are cell-centered: cell (i, j[, k]) sits at position (i+0.5, j+0.5[, k+0.5])
in cell units. Scalar fields have array shape (nx, ny[, nz]); vector and color
fields append a trailing component axis. Sampling outside the grid clamps to the
boundary sample.

Two interpolation routines live here on purpose: a numpy one backing the public
`sample` op and a torch one (`sample_grid_t`) that the differentiable transport
and rendering cores build on. They implement the same scheme and the test suite
cross-checks them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import torch


@dataclass
class ScalarField:
    """Non-negative density grid, shape (nx, ny[, nz])."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim not in (2, 3):
            raise ValueError(f"scalar field must be 2D or 3D, got ndim={self.values.ndim}")
        if any(n < 1 for n in self.values.shape):
            raise ValueError(f"every extent must be >= 1, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("scalar field contains non-finite values")
        if self.values.min() < 0:
            raise ValueError("scalar field contains negative density")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def rank(self) -> int:
        return self.values.ndim


@dataclass
class VectorField:
    """Per-cell velocity in cells/frame, shape (nx, ny[, nz], rank)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        rank = self.values.ndim - 1
        if rank not in (2, 3) or self.values.shape[-1] != rank:
            raise ValueError(
                f"vector field needs one component per spatial axis, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("vector field contains non-finite values")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape[:-1]

    @property
    def rank(self) -> int:
        return self.values.ndim - 1


@dataclass
class ColorField:
    """Per-cell RGB emission in [0, 1], shape (nx, ny[, nz], 3)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim not in (3, 4) or self.values.shape[-1] != 3:
            raise ValueError(f"color field needs exactly 3 channels, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("color field contains non-finite values")
        if self.values.min() < 0 or self.values.max() > 1:
            raise ValueError("color values must lie in [0, 1]")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape[:-1]

    @property
    def rank(self) -> int:
        return self.values.ndim - 1


Field = ScalarField | VectorField | ColorField


def zeros_like_velocity(dims: tuple[int, ...], dtype=np.float32) -> VectorField:
    return VectorField(np.zeros(tuple(dims) + (len(dims),), dtype=dtype))


# ---------------------------------------------------------------------------
# Interpolation

def _interp_np(values: np.ndarray, pos: np.ndarray, channels: bool) -> np.ndarray:
    rank = pos.shape[-1]
    spatial = values.shape[:rank]
    q = pos - 0.5
    i0 = np.floor(q).astype(np.int64)
    f = q - i0
    out = None
    for corner in itertools.product((0, 1), repeat=rank):
        w = np.ones(pos.shape[:-1], dtype=pos.dtype)
        idx = []
        for a in range(rank):
            w = w * (f[..., a] if corner[a] else 1.0 - f[..., a])
            idx.append(np.clip(i0[..., a] + corner[a], 0, spatial[a] - 1))
        v = values[tuple(idx)]
        term = w[..., None] * v if channels else w * v
        out = term if out is None else out + term
    return out


def sample(field: Field, pos) -> float | np.ndarray:
    """Interpolate `field` at `pos` (cell units, centers at i+0.5).

    Bilinear in 2D, trilinear in 3D; positions outside the grid clamp to the
    boundary sample. `pos` may be a single position or an (..., rank) batch.
    """
    pos = np.asarray(pos, dtype=np.float64)
    if not np.all(np.isfinite(pos)):
        raise ValueError("sample position must be finite")
    if pos.shape[-1] != field.rank:
        raise ValueError(f"position has {pos.shape[-1]} coords, field rank is {field.rank}")
    channels = not isinstance(field, ScalarField)
    out = _interp_np(field.values.astype(np.float64), pos, channels)
    if pos.ndim == 1:
        return out if channels else float(out)
    return out


def sample_grid_t(values: torch.Tensor, pos: torch.Tensor) -> torch.Tensor:
    """Torch twin of `sample`: differentiable w.r.t. both values and positions.

    values: (nx, ny[, nz]) or (nx, ny[, nz], C); pos: (..., rank).
    Returns (...,) or (..., C).
    """
    rank = pos.shape[-1]
    channels = values.dim() == rank + 1
    spatial = values.shape[:rank]
    q = pos - 0.5
    i0f = torch.floor(q)
    f = q - i0f
    i0 = i0f.long()
    out = None
    for corner in itertools.product((0, 1), repeat=rank):
        w = None
        idx = []
        for a in range(rank):
            wa = f[..., a] if corner[a] else 1.0 - f[..., a]
            w = wa if w is None else w * wa
            idx.append(torch.clamp(i0[..., a] + corner[a], 0, spatial[a] - 1))
        v = values[tuple(idx)]
        term = w.unsqueeze(-1) * v if channels else w * v
        out = term if out is None else out + term
    return out


def cell_centers_t(shape: tuple[int, ...], dtype=torch.float32) -> torch.Tensor:
    """Grid of cell-center positions, shape (*shape, rank)."""
    axes = [torch.arange(n, dtype=dtype) + 0.5 for n in shape]
    return torch.stack(torch.meshgrid(*axes, indexing="ij"), dim=-1)


# ---------------------------------------------------------------------------
# Resampling and noise

def _area_weights(n_in: int, n_out: int, dtype=np.float64) -> np.ndarray:
    # W[k, i] = overlap of input cell [i, i+1) with output cell [k*s, (k+1)*s), / s
    s = n_in / n_out
    w = np.zeros((n_out, n_in), dtype=dtype)
    for k in range(n_out):
        lo, hi = k * s, (k + 1) * s
        for i in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
            w[k, i] = (min(i + 1.0, hi) - max(float(i), lo)) / s
    return w


def downsample_array(a: np.ndarray, target_shape: tuple[int, ...]) -> np.ndarray:
    """Exact area-averaged reduction of `a` along its leading len(target_shape) axes."""
    if len(target_shape) > a.ndim:
        raise ValueError("target has more axes than the array")
    out = a.astype(np.float64)
    for axis, n_out in enumerate(target_shape):
        n_in = out.shape[axis]
        if n_out < 1:
            raise ValueError("target extent must be >= 1")
        if n_out > n_in:
            raise ValueError(f"cannot downsample axis {axis} from {n_in} to {n_out}")
        if n_out == n_in:
            continue
        w = _area_weights(n_in, n_out)
        out = np.tensordot(w, out, axes=([1], [axis]))
        out = np.moveaxis(out, 0, axis)
    return out.astype(a.dtype) if a.dtype == np.float32 else out


def downsample(field: ScalarField, target_dims: tuple[int, ...]) -> ScalarField:
    """Area/volume-averaged reduction to `target_dims` (componentwise <= dims)."""
    if len(target_dims) != field.rank:
        raise ValueError("target rank differs from field rank")
    return ScalarField(downsample_array(field.values, tuple(target_dims)))


def white_noise(dims: tuple[int, ...], seed: int) -> ScalarField:
    """I.i.d. uniform [0, 1) noise; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    return ScalarField(rng.random(tuple(dims), dtype=np.float32))
