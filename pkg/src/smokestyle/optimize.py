"""Two-step stylization pipeline: shape (velocity) pass, then color pass.

The shape pass runs Adam on a velocity field so that renders of the advected
density match the style image's Gram statistics; the color pass then paints
the transported density by optimizing a per-cell RGB emission field under
the guided style loss, holding the density fixed. Sequences align the
per-frame stylization velocities over a temporal window and keep the color
initialization noise coherent by advecting it along the input flow.
"""
from __future__ import annotations

import csv
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from .fields import ColorField, ScalarField, VectorField, white_noise, zeros_like_velocity
from .features import FeatureNet, default_net, extract_features, tile_style
from .losses import LossWeights, color_objective, shape_objective, view_mask_pyramids
from .render import RenderSettings, render_color_t, render_grayscale_t
from .transport import TemporalWindow, advect, align_window
from . import volf

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8

Checkpoint = Callable[[str, int, np.ndarray, float], None]


class NumericalAbort(RuntimeError):
    """Raised when an optimization loss turns non-finite; carries a snapshot path."""

    def __init__(self, message: str, snapshot_path: str):
        super().__init__(f"{message} (diagnostic snapshot: {snapshot_path})")
        self.snapshot_path = snapshot_path


@dataclass
class StylizationConfig:
    """Settings for both passes. learning_rate of None resolves to 0.5 for 2D
    inputs and 1.0 for 3D ones."""

    iterations: int = 300
    learning_rate: float | None = None
    layers: tuple[str, ...] = ("relu2_1", "relu3_1")
    views: tuple[float, ...] = (0.0,)
    view_weights: tuple[float, ...] | None = None
    window: TemporalWindow = field(default_factory=TemporalWindow)
    tiles: int = 1
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    render: RenderSettings = field(default_factory=RenderSettings)
    feature_weights: str | None = None  # FeatureNet weight spec; None = env or random

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.learning_rate is not None and not self.learning_rate > 0:
            raise ValueError("learning rate must be > 0")
        if self.tiles < 1:
            raise ValueError("tiling level must be >= 1")

    def resolve_lr(self, rank: int) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 0.5 if rank == 2 else 1.0

    def net(self, dtype=torch.float32) -> FeatureNet:
        return default_net(self.feature_weights, dtype=dtype)


@dataclass
class StylizedFrame:
    d_star: ScalarField
    v_star: VectorField
    color: ColorField
    loss_history: dict[str, list[float]]


def _style_stack(style_image: np.ndarray, config: StylizationConfig, net: FeatureNet):
    tiled = tile_style(np.asarray(style_image, dtype=np.float32), config.tiles)
    stack = extract_features(tiled, config.layers, net)
    return {name: t.detach() for name, t in stack.items()}


def _abort_snapshot(kind: str, values: np.ndarray, rank: int, history: list[float]) -> str:
    out = Path(tempfile.mkdtemp(prefix="smokestyle-abort-"))
    volf.write_volf(out / f"{kind}.volf", np.nan_to_num(values), rank)
    with open(out / "loss.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "loss"])
        writer.writerows(enumerate(history))
    return str(out)


def stylize_shape(
    d: ScalarField,
    style_image: np.ndarray,
    config: StylizationConfig,
    checkpoint: Checkpoint | None = None,
    checkpoint_every: int | None = None,
) -> tuple[VectorField, ScalarField, list[float]]:
    """Optimize a velocity field whose transport of `d` renders in the style
    of `style_image`. Returns (v*, d* = advect(d, v*), per-iteration losses)."""
    net = config.net()
    f_style = _style_stack(style_image, config, net)
    d_t = torch.from_numpy(np.ascontiguousarray(d.values.astype(np.float32)))
    v = torch.zeros(d.dims + (d.rank,), dtype=torch.float32, requires_grad=True)
    opt = torch.optim.Adam([v], lr=config.resolve_lr(d.rank), betas=ADAM_BETAS, eps=ADAM_EPS)
    history: list[float] = []
    for it in range(config.iterations):
        loss = shape_objective(
            d_t, v, f_style, config.views, config.weights, config.render, net, config.view_weights
        )
        value = float(loss.detach())
        if not np.isfinite(value):
            path = _abort_snapshot("velocity", v.detach().numpy(), d.rank, history)
            raise NumericalAbort(f"shape pass diverged at iteration {it}", path)
        history.append(value)
        opt.zero_grad()
        loss.backward()
        opt.step()
        if checkpoint is not None and checkpoint_every and (it + 1) % checkpoint_every == 0:
            with torch.no_grad():
                img = render_grayscale_t(
                    torch.from_numpy(advect(d, VectorField(v.detach().numpy())).values),
                    config.views[0],
                    config.render,
                )
            checkpoint("shape", it + 1, img.numpy(), value)
    v_star = VectorField(v.detach().numpy())
    return v_star, advect(d, v_star), history


def initial_color(d_star: ScalarField, noise: ScalarField) -> ColorField:
    """Density times noise, replicated across the 3 channels."""
    base = np.clip(d_star.values * noise.values, 0.0, 1.0).astype(np.float32)
    return ColorField(np.repeat(base[..., None], 3, axis=-1))


def stylize_color(
    d_star: ScalarField,
    style_image: np.ndarray,
    config: StylizationConfig,
    init: ColorField | None = None,
    checkpoint: Checkpoint | None = None,
    checkpoint_every: int | None = None,
) -> tuple[ColorField, list[float]]:
    """Optimize an RGB emission field for the (frozen) stylized density.

    Starts from density x white noise unless `init` is given; colors clamp to
    [0, 1] after every step, and the guidance mask is applied once at the end
    by zeroing color wherever the density is zero.
    """
    net = config.net()
    f_style = _style_stack(style_image, config, net)
    if init is None:
        init = initial_color(d_star, white_noise(d_star.dims, config.seed))
    if init.dims != d_star.dims:
        raise ValueError(f"init color dims {init.dims} do not match density dims {d_star.dims}")
    d_t = torch.from_numpy(np.ascontiguousarray(d_star.values.astype(np.float32)))
    c = torch.from_numpy(init.values.astype(np.float32).copy()).requires_grad_(True)
    masks = view_mask_pyramids(d_t, config.views, config.layers, config.render, net)
    opt = torch.optim.Adam([c], lr=config.resolve_lr(d_star.rank), betas=ADAM_BETAS, eps=ADAM_EPS)
    history: list[float] = []
    for it in range(config.iterations):
        loss = color_objective(
            d_t, c, f_style, config.views, config.weights, config.render, net,
            config.view_weights, masks,
        )
        value = float(loss.detach())
        if not np.isfinite(value):
            path = _abort_snapshot("color", c.detach().numpy(), d_star.rank, history)
            raise NumericalAbort(f"color pass diverged at iteration {it}", path)
        history.append(value)
        opt.zero_grad()
        loss.backward()
        opt.step()
        with torch.no_grad():
            c.clamp_(0.0, 1.0)
        if checkpoint is not None and checkpoint_every and (it + 1) % checkpoint_every == 0:
            with torch.no_grad():
                img = render_color_t(d_t, c, config.views[0], config.render)
            checkpoint("color", it + 1, img.numpy(), value)
    out = c.detach().numpy().copy()
    out[d_star.values == 0] = 0.0  # overflow cleanup: one final mask application
    return ColorField(out), history


SequenceCheckpoint = Callable[[int, str, int, np.ndarray, float], None]


def stylize_sequence(
    frames: Sequence[ScalarField],
    input_velocities: Sequence[VectorField] | None,
    style_image: np.ndarray,
    config: StylizationConfig,
    jobs: int = 1,
    checkpoint: SequenceCheckpoint | None = None,
    checkpoint_every: int | None = None,
) -> list[StylizedFrame]:
    """Full pipeline over a frame sequence.

    Shape pass per frame, windowed velocity alignment, transport, then the
    color pass with the initialization noise advected along the input flow so
    consecutive frames start from coherent noise.
    """
    frames = list(frames)
    if input_velocities is None:
        input_velocities = [zeros_like_velocity(f.dims) for f in frames]
    input_velocities = list(input_velocities)
    if len(frames) != len(input_velocities):
        raise ValueError(
            f"sequence length mismatch: {len(frames)} frames vs {len(input_velocities)} velocities"
        )

    def frame_checkpoint(t: int) -> Checkpoint | None:
        if checkpoint is None:
            return None
        return lambda pass_name, it, img, loss: checkpoint(t, pass_name, it, img, loss)

    def run_shape(t: int):
        return stylize_shape(
            frames[t], style_image, config,
            checkpoint=frame_checkpoint(t), checkpoint_every=checkpoint_every,
        )

    if jobs > 1 and len(frames) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            shape_results = list(pool.map(run_shape, range(len(frames))))
    else:
        shape_results = [run_shape(t) for t in range(len(frames))]

    raw_velocities = [r[0] for r in shape_results]
    aligned = align_window(raw_velocities, input_velocities, config.window)

    results = []
    noise = white_noise(frames[0].dims, config.seed)
    for t, frame in enumerate(frames):
        if t > 0:
            # Carry the init noise along the input flow instead of reseeding per
            # frame, so consecutive color passes start from coherent states.
            noise = advect(noise, input_velocities[t - 1])
        d_star = advect(frame, aligned[t])
        color, color_history = stylize_color(
            d_star, style_image, config,
            init=initial_color(d_star, noise),
            checkpoint=frame_checkpoint(t), checkpoint_every=checkpoint_every,
        )
        results.append(
            StylizedFrame(
                d_star=d_star,
                v_star=aligned[t],
                color=color,
                loss_history={"shape": shape_results[t][2], "color": color_history},
            )
        )
    return results
