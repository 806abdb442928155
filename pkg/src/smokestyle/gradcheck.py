"""Central finite-difference verification of every differentiable path.

Each suite compares torch autograd against (f(x + h) - f(x - h)) / 2h in
float64. Field-valued operations are reduced to a scalar with a fixed random
positive weighting so one pass exercises all input partials. Relative error
is gated only where the numeric gradient magnitude clears a floor; below it
the quotient is meaningless.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import torch

from .features import default_net, extract_features
from .losses import LossWeights, color_objective, shape_objective, view_mask_pyramids
from .procedural import make_style_image
from .render import RenderSettings, render_color_t, render_grayscale_t
from .transport import advect_t

DEFAULT_STEP = 1e-3
TIGHT_TOL = 1e-3
CNN_TOL = 1e-2
MAGNITUDE_FLOOR = 1e-6


@dataclass
class GradReport:
    name: str
    checked: int
    skipped: int
    max_rel_err: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tolerance

    def __str__(self) -> str:
        status = "ok" if self.passed else "FAIL"
        return (
            f"{self.name}: {status} max_rel_err={self.max_rel_err:.3e} "
            f"(tol {self.tolerance:.0e}, {self.checked} checked, {self.skipped} below floor)"
        )


def central_difference(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    indices: Sequence[int],
    h: float = DEFAULT_STEP,
) -> np.ndarray:
    out = np.zeros(len(indices), dtype=np.float64)
    flat = x0.astype(np.float64).reshape(-1)
    for k, idx in enumerate(indices):
        bumped = flat.copy()
        bumped[idx] += h
        up = f(bumped.reshape(x0.shape))
        bumped[idx] -= 2.0 * h
        down = f(bumped.reshape(x0.shape))
        out[k] = (up - down) / (2.0 * h)
    return out


def autograd_gradient(f: Callable[[torch.Tensor], torch.Tensor], x0: np.ndarray) -> np.ndarray:
    x = torch.from_numpy(x0.astype(np.float64).copy()).requires_grad_(True)
    f(x).backward()
    return x.grad.numpy().reshape(-1).copy()


def compare(
    name: str,
    f: Callable[[torch.Tensor], torch.Tensor],
    x0: np.ndarray,
    indices: Sequence[int] | None = None,
    tolerance: float = TIGHT_TOL,
    h: float = DEFAULT_STEP,
    floor: float = MAGNITUDE_FLOOR,
) -> GradReport:
    """Check autograd against central differences at the given flat indices
    (all components when None)."""
    if indices is None:
        indices = range(x0.size)
    indices = list(indices)

    def f_np(x: np.ndarray) -> float:
        with torch.no_grad():
            return float(f(torch.from_numpy(x)))

    analytic = autograd_gradient(f, x0)[indices]
    numeric = central_difference(f_np, x0, indices, h)
    mask = np.abs(numeric) > floor
    if mask.any():
        rel = np.abs(analytic[mask] - numeric[mask]) / np.abs(numeric[mask])
        max_rel = float(rel.max())
    else:
        max_rel = 0.0
    return GradReport(name, int(mask.sum()), int((~mask).sum()), max_rel, tolerance)


def _weights_for(shape: tuple[int, ...], rng: np.random.Generator) -> torch.Tensor:
    return torch.from_numpy(rng.uniform(0.5, 1.5, size=shape))


def check_advection(seed: int = 7) -> GradReport:
    """d(advect)/dv on a 6x6 grid; fractional velocities keep backtraces off
    the interpolation-lattice kinks."""
    rng = np.random.default_rng(seed)
    d = torch.from_numpy(rng.uniform(0.0, 1.0, size=(6, 6)))
    v0 = rng.uniform(0.15, 0.85, size=(6, 6, 2)) * rng.choice([-1.0, 1.0], size=(6, 6, 2))
    w = _weights_for((6, 6), rng)

    def f(v: torch.Tensor) -> torch.Tensor:
        return (advect_t(d, v, 1.0) * w).sum()

    return compare("advect d/dv", f, v0)


def check_render_grayscale(seed: int = 11) -> GradReport:
    rng = np.random.default_rng(seed)
    d0 = rng.uniform(0.05, 1.0, size=(6, 6, 6))
    settings = RenderSettings(gamma=1.0)
    w = _weights_for((6, 6), rng)

    def f(d: torch.Tensor) -> torch.Tensor:
        return (render_grayscale_t(d, 0.0, settings) * w).sum()

    return compare("render grayscale d/dd", f, d0)


def check_render_color(seed: int = 13) -> GradReport:
    rng = np.random.default_rng(seed)
    d = torch.from_numpy(rng.uniform(0.05, 1.0, size=(6, 6, 6)))
    c0 = rng.uniform(0.1, 0.9, size=(6, 6, 6, 3))
    settings = RenderSettings(gamma=1.0)
    w = _weights_for((6, 6, 3), rng)

    def f(c: torch.Tensor) -> torch.Tensor:
        return (render_color_t(d, c, 0.0, settings) * w).sum()

    return compare("render color d/dc", f, c0)


def check_features(seed: int = 17, samples: int = 10) -> GradReport:
    """d(sum of relu2_1)/d(pixel) at sampled pixels of a 64x64 image; looser
    tolerance absorbs ReLU/pool crossings near the step size."""
    rng = np.random.default_rng(seed)
    image = rng.uniform(0.05, 0.95, size=(64, 64))
    net = default_net(dtype=torch.float64)
    indices = rng.choice(image.size, size=samples, replace=False)

    def f(img: torch.Tensor) -> torch.Tensor:
        return net.extract(net.prepare(img), ("relu2_1",))["relu2_1"].sum()

    # h below the default: a ReLU unit sitting within h of zero flips sides
    # between the +h/-h evaluations and poisons the quotient.
    return compare("features d/dpixel", f, image, indices, tolerance=CNN_TOL, h=1e-5)


def _style_stack_f64(layers: tuple[str, ...], net) -> dict[str, torch.Tensor]:
    style = make_style_image("stripes", 32, seed=3).astype(np.float64)
    return {k: t.detach() for k, t in extract_features(style, layers, net).items()}


def check_shape_objective(seed: int = 19, samples: int = 10) -> GradReport:
    rng = np.random.default_rng(seed)
    net = default_net(dtype=torch.float64)
    layers = ("relu2_1", "relu3_1")
    f_style = _style_stack_f64(layers, net)
    d = torch.from_numpy(rng.uniform(0.05, 1.0, size=(8, 8)))
    v0 = rng.uniform(0.1, 0.6, size=(8, 8, 2)) * rng.choice([-1.0, 1.0], size=(8, 8, 2))
    weights = LossWeights()
    settings = RenderSettings()
    indices = rng.choice(v0.size, size=samples, replace=False)

    def f(v: torch.Tensor) -> torch.Tensor:
        return shape_objective(d, v, f_style, (0.0,), weights, settings, net)

    return compare("shape objective d/dv", f, v0, indices, tolerance=CNN_TOL)


def check_color_objective(seed: int = 23, samples: int = 10) -> GradReport:
    rng = np.random.default_rng(seed)
    net = default_net(dtype=torch.float64)
    layers = ("relu2_1", "relu3_1")
    f_style = _style_stack_f64(layers, net)
    d = torch.from_numpy(rng.uniform(0.05, 1.0, size=(8, 8)))
    c0 = rng.uniform(0.2, 0.8, size=(8, 8, 3))
    weights = LossWeights()
    settings = RenderSettings()
    masks = view_mask_pyramids(d, (0.0,), layers, settings, net)
    indices = rng.choice(c0.size, size=samples, replace=False)

    def f(c: torch.Tensor) -> torch.Tensor:
        return color_objective(d, c, f_style, (0.0,), weights, settings, net, None, masks)

    return compare("color objective d/dc", f, c0, indices, tolerance=CNN_TOL, h=1e-5)


CORE_CHECKS = (check_advection, check_render_grayscale, check_render_color)
OBJECTIVE_CHECKS = (check_features, check_shape_objective, check_color_objective)


def run_all() -> list[GradReport]:
    return [check() for check in CORE_CHECKS + OBJECTIVE_CHECKS]
