"""Procedural smoke inputs and synthetic style images for tests and demos.

Desk-scale stand-ins for simulation data: a static Gaussian blob and a small
buoyant plume driven by an updraft with seeded sideways sway. Style images
are saturated geometric textures with strong channel statistics.
"""
from __future__ import annotations

import numpy as np

from .fields import ScalarField, VectorField, zeros_like_velocity
from .transport import advect

SMOKE_KINDS = ("blob", "plume")
STYLE_KINDS = ("stripes", "patches", "noise")

# Saturated palette: high per-channel contrast so Gram targets are colorful.
_PALETTE = np.array(
    [
        (0.92, 0.10, 0.08),
        (0.10, 0.25, 0.90),
        (0.95, 0.80, 0.05),
        (0.05, 0.80, 0.30),
        (0.90, 0.10, 0.80),
        (0.05, 0.85, 0.90),
    ],
    dtype=np.float32,
)


def _check_dims(dims: tuple[int, ...]) -> tuple[int, ...]:
    dims = tuple(int(n) for n in dims)
    if len(dims) not in (2, 3) or any(n < 1 for n in dims):
        raise ValueError(f"dims must be 2 or 3 positive extents, got {dims}")
    return dims


def _cell_grid(dims: tuple[int, ...]) -> list[np.ndarray]:
    axes = [np.arange(n, dtype=np.float64) + 0.5 for n in dims]
    return np.meshgrid(*axes, indexing="ij")


def gaussian_blob(dims: tuple[int, ...], center=None, sigma=None, amplitude=1.0) -> ScalarField:
    """Gaussian bump; default center sits on the central cell so the peak is
    exactly `amplitude` there."""
    dims = _check_dims(dims)
    if center is None:
        center = tuple(n // 2 + 0.5 for n in dims)
    if sigma is None:
        sigma = min(dims) / 6.0
    grids = _cell_grid(dims)
    r2 = sum((g - c) ** 2 for g, c in zip(grids, center))
    values = amplitude * np.exp(-r2 / (2.0 * sigma * sigma))
    return ScalarField(values.astype(np.float32))


def _plume_velocity(dims: tuple[int, ...], phase: float, rng_amp: float) -> VectorField:
    """Updraft plus a sideways sway that varies with height; speeds stay below
    one cell per frame so semi-Lagrangian transport stays well resolved."""
    grids = _cell_grid(dims)
    ny = dims[1]
    height = grids[1] / ny
    up = 0.55 + 0.15 * height
    sway = rng_amp * np.sin(2.0 * np.pi * height * 1.5 + phase)
    comps = [sway, up] + ([np.zeros_like(up)] if len(dims) == 3 else [])
    values = np.stack(comps, axis=-1).astype(np.float32)
    return VectorField(values)


def make_procedural_smoke(
    kind: str, dims: tuple[int, ...], frames: int = 1, seed: int = 0
) -> tuple[list[ScalarField], list[VectorField]]:
    """Deterministic density + velocity sequences.

    blob: static centered Gaussian with zero velocity. plume: a bottom source
    carried upward, density advanced by advect-then-add-source and clipped to
    [0, 1]; total mass never decreases while the source emits.
    """
    dims = _check_dims(dims)
    if frames < 1:
        raise ValueError("frames must be >= 1")
    if kind == "blob":
        d = gaussian_blob(dims)
        v = zeros_like_velocity(dims)
        return [d] * frames, [v] * frames
    if kind != "plume":
        raise ValueError(f"unknown smoke kind {kind!r}; expected one of {SMOKE_KINDS}")

    rng = np.random.default_rng(seed)
    base_phase = rng.uniform(0.0, 2.0 * np.pi)
    sway_amp = rng.uniform(0.15, 0.3)
    source_center = tuple(
        [dims[0] * 0.5, dims[1] * 0.16] + ([dims[2] * 0.5] if len(dims) == 3 else [])
    )
    source = gaussian_blob(dims, center=source_center, sigma=min(dims) / 9.0, amplitude=0.85)

    densities: list[ScalarField] = []
    velocities: list[VectorField] = []
    d = ScalarField(np.clip(source.values, 0.0, 1.0))
    for t in range(frames):
        v = _plume_velocity(dims, base_phase + 0.6 * t, sway_amp)
        densities.append(d)
        velocities.append(v)
        carried = advect(d, v).values + source.values
        d = ScalarField(np.clip(carried, 0.0, 1.0))
    return densities, velocities


def _style_axes(size) -> tuple[int, int]:
    if isinstance(size, int):
        h = w = size
    else:
        h, w = size
    if h < 1 or w < 1:
        raise ValueError(f"style image size must be positive, got {(h, w)}")
    return int(h), int(w)


def make_style_image(kind: str, size=64, seed: int = 0) -> np.ndarray:
    """Synthetic (H, W, 3) style image in [0, 1].

    stripes: hard diagonal color bands. patches: saturated discs on a dark
    field. noise: independent uniform color per pixel.
    """
    h, w = _style_axes(size)
    rng = np.random.default_rng(seed)
    if kind == "noise":
        return rng.random((h, w, 3)).astype(np.float32)
    yy, xx = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5, indexing="ij")
    if kind == "stripes":
        angle = rng.uniform(0.2, np.pi - 0.2)
        period = max(3.0, min(h, w) / 8.0)
        phase = (np.cos(angle) * xx + np.sin(angle) * yy) / period
        band = np.floor(phase).astype(np.int64) % len(_PALETTE)
        return _PALETTE[band].copy()
    if kind == "patches":
        img = np.full((h, w, 3), 0.06, dtype=np.float32)
        for _ in range(14):
            cy, cx = rng.uniform(0, h), rng.uniform(0, w)
            radius = rng.uniform(0.06, 0.18) * min(h, w)
            color = _PALETTE[rng.integers(len(_PALETTE))]
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius * radius
            img[mask] = color
        return img
    raise ValueError(f"unknown style kind {kind!r}; expected one of {STYLE_KINDS}")
