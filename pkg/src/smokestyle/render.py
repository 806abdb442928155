"""Differentiable orthographic emission-absorption renderers.

Rays run along +z, one per pixel, normal to the image plane; pixel (row j,
col i) looks down the ray through (i+0.5, j+0.5, r), r in [0, r_max]. Per
ray the intensity accumulates density-weighted emission attenuated by the
transmittance exp(-gamma * integral of density up to the current depth).
Each march step integrates its segment analytically under a piecewise-
constant density, so a uniform slab renders exactly at any step count and
the whole map stays differentiable.

2D fields bypass ray marching: the "render" is the density (or color x
density) scaled into [0, 1], so the same optimization path serves 2D data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from PIL import Image

from .fields import ColorField, ScalarField, cell_centers_t, sample_grid_t

TWO_PI = 2.0 * math.pi


@dataclass
class RenderSettings:
    """gamma: transmittance factor; steps/r_max: ray march resolution and length
    in cell units; resolution: output (W, H). None fields resolve from the grid."""

    gamma: float = 1.0
    steps: int | None = None
    r_max: float | None = None
    resolution: tuple[int, int] | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if self.steps is not None and self.steps < 2:
            raise ValueError("steps must be >= 2")
        if self.r_max is not None and not self.r_max > 0:
            raise ValueError("r_max must be > 0")

    def resolve(self, dims: tuple[int, ...]) -> "RenderSettings":
        nx, ny = dims[0], dims[1]
        depth = dims[2] if len(dims) == 3 else 1
        return RenderSettings(
            gamma=self.gamma,
            steps=self.steps if self.steps is not None else max(2, depth),
            r_max=self.r_max if self.r_max is not None else float(depth),
            resolution=self.resolution if self.resolution is not None else (nx, ny),
        )


@dataclass
class ViewAngle:
    """Camera rotation about the vertical (y) axis, radians, wrapped to [0, 2pi)."""

    theta: float = 0.0

    def __post_init__(self):
        self.theta = float(self.theta) % TWO_PI


@dataclass
class RenderedImage:
    """pixels: (H, W) grayscale or (H, W, 3) RGB, finite and >= 0."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if not np.all(np.isfinite(self.pixels)) or self.pixels.min() < -1e-7:
            raise ValueError("rendered image must be finite and non-negative")


# ---------------------------------------------------------------------------
# Torch cores

def _rotated_centers(spatial: tuple[int, ...], theta: float, dtype) -> torch.Tensor:
    centers = cell_centers_t(spatial, dtype=dtype)
    ctr = torch.tensor([n / 2.0 for n in spatial], dtype=dtype)
    p = centers - ctr
    cos, sin = math.cos(theta), math.sin(theta)
    x = cos * p[..., 0] + sin * p[..., 2]
    z = -sin * p[..., 0] + cos * p[..., 2]
    return torch.stack([x, p[..., 1], z], dim=-1) + ctr


def rotate_view_t(d: torch.Tensor, theta: float) -> torch.Tensor:
    """Resample a 3D field into the camera frame rotated by theta about y."""
    theta = float(theta) % TWO_PI
    if d.dim() == 2:
        if theta != 0.0:
            raise ValueError("2D fields only support theta = 0")
        return d
    if theta == 0.0:
        return d
    return sample_grid_t(d, _rotated_centers(tuple(d.shape), theta, d.dtype))


def _normalize_2d(d: torch.Tensor) -> torch.Tensor:
    # scale into [0,1]; the factor is treated as constant so gradients stay uniform
    scale = torch.clamp(d.detach().max(), min=1.0)
    return d / scale


def _ray_positions(dims, settings: RenderSettings, dtype) -> tuple[torch.Tensor, float]:
    nx, ny, _ = dims
    w, h = settings.resolution
    dr = settings.r_max / settings.steps
    xs = (torch.arange(w, dtype=dtype) + 0.5) * (nx / w)
    ys = (torch.arange(h, dtype=dtype) + 0.5) * (ny / h)
    zs = (torch.arange(settings.steps, dtype=dtype) + 0.5) * dr
    yy, xx, zz = torch.meshgrid(ys, xs, zs, indexing="ij")
    return torch.stack([xx, yy, zz], dim=-1), dr


def _march(d: torch.Tensor, c: torch.Tensor | None, settings: RenderSettings):
    pos, dr = _ray_positions(d.shape, settings, d.dtype)
    dsamp = sample_grid_t(d, pos)  # (H, W, steps)
    seg = settings.gamma * dsamp * dr
    trans = torch.exp(-(torch.cumsum(seg, dim=-1) - seg))  # transmittance entering each segment
    contrib = trans * (-torch.expm1(-seg)) / settings.gamma  # exact segment integral of d*tau
    if c is None:
        return contrib.sum(dim=-1)
    csamp = sample_grid_t(c, pos)  # (H, W, steps, 3)
    return (contrib.unsqueeze(-1) * csamp).sum(dim=-2)


def render_grayscale_t(d: torch.Tensor, theta: float, settings: RenderSettings) -> torch.Tensor:
    if d.dim() == 2:
        if float(theta) % TWO_PI != 0.0:
            raise ValueError("2D fields only support theta = 0")
        return _normalize_2d(d).transpose(0, 1)
    settings = settings.resolve(tuple(d.shape))
    return _march(rotate_view_t(d, theta), None, settings)


def render_color_t(
    d: torch.Tensor, c: torch.Tensor, theta: float, settings: RenderSettings
) -> torch.Tensor:
    if d.shape != c.shape[:-1]:
        raise ValueError(f"density dims {tuple(d.shape)} do not match color dims {tuple(c.shape[:-1])}")
    if d.dim() == 2:
        if float(theta) % TWO_PI != 0.0:
            raise ValueError("2D fields only support theta = 0")
        scale = torch.clamp(d.detach().max(), min=1.0)
        return (c * d.unsqueeze(-1) / scale).transpose(0, 1)
    settings = settings.resolve(tuple(d.shape))
    theta = float(theta) % TWO_PI
    if theta != 0.0:
        rot = _rotated_centers(tuple(d.shape), theta, d.dtype)
        d = sample_grid_t(d, rot)
        c = sample_grid_t(c, rot)
    return _march(d, c, settings)


# ---------------------------------------------------------------------------
# Public wrappers

def _as_view(view: "ViewAngle | float") -> ViewAngle:
    return view if isinstance(view, ViewAngle) else ViewAngle(float(view))


def render_grayscale(
    d: ScalarField, view: "ViewAngle | float", settings: RenderSettings
) -> RenderedImage:
    with torch.no_grad():
        out = render_grayscale_t(torch.from_numpy(d.values), _as_view(view).theta, settings)
    return RenderedImage(out.numpy())


def render_color(
    d: ScalarField, c: ColorField, view: "ViewAngle | float", settings: RenderSettings
) -> RenderedImage:
    if d.dims != c.dims:
        raise ValueError(f"density dims {d.dims} do not match color dims {c.dims}")
    with torch.no_grad():
        out = render_color_t(
            torch.from_numpy(d.values), torch.from_numpy(c.values), _as_view(view).theta, settings
        )
    return RenderedImage(out.numpy())


def rotate_view(d: ScalarField, view: "ViewAngle | float") -> ScalarField:
    theta = _as_view(view).theta
    if d.rank == 2 and theta != 0.0:
        raise ValueError("2D fields only support theta = 0")
    with torch.no_grad():
        out = rotate_view_t(torch.from_numpy(d.values), theta)
    return ScalarField(out.numpy())


def write_png(path, pixels: np.ndarray) -> None:
    """8-bit PNG export; values clamp to [0, 1] and scale to [0, 255].
    Row 0 of the file is the top of the image (max y), so plumes point up."""
    a = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    a = np.flipud(a)
    b = np.round(a * 255.0).astype(np.uint8)
    mode = "L" if b.ndim == 2 else "RGB"
    Image.fromarray(b, mode=mode).save(path)
