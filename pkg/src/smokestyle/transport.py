"""Semi-Lagrangian density transport and windowed velocity alignment.

`advect` realizes the transport map: output cell x takes the source field
sampled at x - dt*v(x), with linear interpolation and clamped boundaries.
First order, dissipative, and differentiable w.r.t. both the field values
and the velocity (the torch core `advect_t` carries the gradients).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .fields import (
    ColorField,
    ScalarField,
    VectorField,
    cell_centers_t,
    sample_grid_t,
)


@dataclass
class TemporalWindow:
    """Frame count over which stylization velocities are aligned; 1 = per-frame."""

    size: int = 1

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("window size must be >= 1")


def advect_t(values: torch.Tensor, v: torch.Tensor, dt: float) -> torch.Tensor:
    """Backtrace-and-sample. values: spatial (+ optional channel axis); v: spatial + (rank,)."""
    rank = v.shape[-1]
    centers = cell_centers_t(v.shape[:-1], dtype=v.dtype)
    return sample_grid_t(values, centers - dt * v)


def _advect_array(values: np.ndarray, vel: np.ndarray, dt: float) -> np.ndarray:
    with torch.no_grad():
        out = advect_t(
            torch.from_numpy(np.ascontiguousarray(values)),
            torch.from_numpy(np.ascontiguousarray(vel)),
            dt,
        )
    return out.numpy()


def _check_dims(field_dims, v: VectorField):
    if tuple(field_dims) != tuple(v.dims):
        raise ValueError(f"field dims {tuple(field_dims)} do not match velocity dims {tuple(v.dims)}")


def advect(d: ScalarField, v: VectorField, dt: float = 1.0) -> ScalarField:
    _check_dims(d.dims, v)
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    return ScalarField(_advect_array(d.values, v.values, dt))


def advect_color(c: ColorField, v: VectorField, dt: float = 1.0) -> ColorField:
    """Per-channel transport of a color field."""
    _check_dims(c.dims, v)
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    return ColorField(_advect_array(c.values, v.values, dt))


def advect_velocity(w: VectorField, v: VectorField, dt: float = 1.0) -> VectorField:
    """Per-component transport of a vector field along v."""
    _check_dims(w.dims, v)
    return VectorField(_advect_array(w.values, v.values, dt))


def _warp(values: np.ndarray, src: int, dst: int, flow: Sequence[VectorField]) -> np.ndarray:
    # Move data from frame `src` to frame `dst` along the input flow;
    # flow[k] carries frame k to frame k+1.
    out = values
    if src < dst:
        for k in range(src, dst):
            out = _advect_array(out, flow[k].values, 1.0)
    else:
        for k in range(src, dst, -1):
            out = _advect_array(out, flow[k - 1].values, -1.0)
    return out


def align_window(
    stylization_velocities: Sequence[VectorField],
    input_velocities: Sequence[VectorField],
    window: TemporalWindow,
) -> list[VectorField]:
    """Average each frame's stylization velocity with its window neighbours,
    every neighbour first advected to the frame along the input flow.

    Uniform weights over the frames that exist inside the (centered) window.
    """
    n = len(stylization_velocities)
    if len(input_velocities) != n:
        raise ValueError(
            f"sequence length mismatch: {n} stylization vs {len(input_velocities)} input velocities"
        )
    if n == 0:
        raise ValueError("empty velocity sequence")
    if window.size == 1:
        return list(stylization_velocities)

    left = (window.size - 1) // 2
    right = window.size // 2
    aligned = []
    for t in range(n):
        members = range(max(0, t - left), min(n, t + right + 1))
        acc = None
        for s in members:
            warped = _warp(stylization_velocities[s].values, s, t, input_velocities)
            acc = warped.copy() if acc is None else acc + warped
        aligned.append(VectorField(acc / len(members)))
    return aligned
