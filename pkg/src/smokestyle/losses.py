"""Content, style, and composite stylization objectives.

Squared-difference sums are implemented as means over elements so loss
magnitudes (and usable learning rates) do not depend on resolution. The
style statistic is the pixel-normalized Gram matrix from `features.gram`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import torch

from .features import FeatureNet, build_mask_pyramid, default_net, gram, guide_features
from .render import RenderSettings, render_color_t, render_grayscale_t


@dataclass
class LossWeights:
    """alpha: content weight, beta: style weight; optional per-layer style
    weights (must sum to 1; None means equal)."""

    alpha: float = 0.0
    beta: float = 1.0
    layer_weights: Mapping[str, float] | None = None

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("alpha and beta cannot both be zero")
        if self.layer_weights is not None:
            total = sum(self.layer_weights.values())
            if abs(total - 1.0) > 1e-6:
                raise ValueError(f"layer weights must sum to 1, got {total}")

    def layer_weight(self, layer: str, n_layers: int) -> float:
        if self.layer_weights is None:
            return 1.0 / n_layers
        return float(self.layer_weights[layer])


def _check_stacks(fa: Mapping[str, torch.Tensor], fb: Mapping[str, torch.Tensor]):
    if list(fa.keys()) != list(fb.keys()):
        raise ValueError(f"feature stacks differ in layers: {list(fa)} vs {list(fb)}")
    for name in fa:
        if fa[name].shape != fb[name].shape:
            raise ValueError(
                f"layer {name}: shape {tuple(fa[name].shape)} vs {tuple(fb[name].shape)}"
            )


def content_loss(f_image: Mapping[str, torch.Tensor], f_content: Mapping[str, torch.Tensor]) -> torch.Tensor:
    """Sum over layers of the mean squared activation difference."""
    _check_stacks(f_image, f_content)
    total = None
    for name in f_image:
        term = ((f_image[name] - f_content[name]) ** 2).mean()
        total = term if total is None else total + term
    return total


def style_loss(
    f_image: Mapping[str, torch.Tensor],
    f_style: Mapping[str, torch.Tensor],
    masks: Mapping[str, np.ndarray] | None = None,
    weights: LossWeights | None = None,
) -> torch.Tensor:
    """Weighted sum over layers of the mean squared Gram difference.

    When guidance masks are given they multiply the image-side activations
    before the Gram product; the style side stays unmasked. Gram shapes only
    depend on channel counts, so image and style extents may differ.
    """
    if list(f_image.keys()) != list(f_style.keys()):
        raise ValueError(f"feature stacks differ in layers: {list(f_image)} vs {list(f_style)}")
    weights = weights or LossWeights()
    total = None
    for name in f_image:
        fi = f_image[name]
        if masks is not None:
            fi = guide_features(fi, masks[name])
        term = ((gram(fi) - gram(f_style[name])) ** 2).mean()
        term = weights.layer_weight(name, len(f_image)) * term
        total = term if total is None else total + term
    return total


def _as_tensor(x, dtype=None) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x if dtype is None else x.to(dtype)
    values = x.values if hasattr(x, "values") else np.asarray(x)
    t = torch.from_numpy(np.ascontiguousarray(values))
    return t if dtype is None else t.to(dtype)


def _view_weights(views: Sequence[float], view_weights: Sequence[float] | None) -> list[float]:
    if not len(views):
        raise ValueError("at least one view is required")
    if view_weights is None:
        return [1.0 / len(views)] * len(views)
    if len(view_weights) != len(views):
        raise ValueError("one weight per view required")
    total = float(sum(view_weights))
    return [float(w) / total for w in view_weights]


def shape_objective(
    d,
    v,
    style: Mapping[str, torch.Tensor],
    views: Sequence[float],
    weights: LossWeights,
    settings: RenderSettings,
    net: FeatureNet | None = None,
    view_weights: Sequence[float] | None = None,
) -> torch.Tensor:
    """Mean over views of the style loss of the advected density's render;
    differentiable w.r.t. the velocity tensor `v`.

    `style` is the style image's feature stack; its layers select the layers
    used for the image side. Content (weighted by alpha) compares against the
    un-advected density's render and defaults off.
    """
    from .transport import advect_t  # local import to avoid a cycle

    net = net or default_net()
    d_t = _as_tensor(d)
    v_t = _as_tensor(v)
    layers = list(style.keys())
    vw = _view_weights(views, view_weights)
    advected = advect_t(d_t, v_t, 1.0)
    total = None
    for theta, w in zip(views, vw):
        image = render_grayscale_t(advected, theta, settings)
        f_img = net.extract(net.prepare(image), layers)
        term = weights.beta * style_loss(f_img, style, None, weights)
        if weights.alpha > 0:
            with torch.no_grad():
                content_img = render_grayscale_t(d_t, theta, settings)
                f_content = net.extract(net.prepare(content_img), layers)
            term = term + weights.alpha * content_loss(f_img, f_content)
        total = w * term if total is None else total + w * term
    return total


def view_mask_pyramids(
    d_star,
    views: Sequence[float],
    layers: Sequence[str],
    settings: RenderSettings,
    net: FeatureNet | None = None,
) -> list[dict[str, np.ndarray]]:
    """Guidance masks per view: the density rendered at that view, clamped to
    [0, 1], downsampled to every layer's extent."""
    net = net or default_net()
    d_t = _as_tensor(d_star)
    masks = []
    for theta in views:
        with torch.no_grad():
            img = render_grayscale_t(d_t, theta, settings)
        masks.append(build_mask_pyramid(img.numpy(), layers, net))
    return masks


def color_objective(
    d_star,
    c,
    style: Mapping[str, torch.Tensor],
    views: Sequence[float],
    weights: LossWeights,
    settings: RenderSettings,
    net: FeatureNet | None = None,
    view_weights: Sequence[float] | None = None,
    masks: Sequence[Mapping[str, np.ndarray]] | None = None,
) -> torch.Tensor:
    """Mean over views of the guided style loss of the color render;
    differentiable w.r.t. the color tensor `c` only (d_star is held fixed)."""
    net = net or default_net()
    d_t = _as_tensor(d_star).detach()
    c_t = _as_tensor(c)
    layers = list(style.keys())
    vw = _view_weights(views, view_weights)
    if masks is None:
        masks = view_mask_pyramids(d_t, views, layers, settings, net)
    total = None
    for theta, w, view_masks in zip(views, vw, masks):
        image = render_color_t(d_t, c_t, theta, settings)
        f_img = net.extract(net.prepare(image), layers)
        term = weights.beta * style_loss(f_img, style, view_masks, weights)
        total = w * term if total is None else total + w * term
    return total
