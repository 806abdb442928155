"""CNN feature extraction, Gram matrices, guidance masks, and style tiling.

The extractor is the VGG-19 convolutional stack (3x3 convs, ReLU, 2x2 max
pools); activations are addressed by their rectifier names relu1_1..relu5_4.
Weights come from a state-dict file (torchvision ``vgg19().features`` layout
or flat ``conv1_1.weight`` keys), from the ``SMOKESTYLE_VGG_WEIGHTS``
environment variable, or from a deterministic seeded He-initialized filter
bank ("random" / "random:<seed>") for environments without the pretrained
file. Gram statistics are normalized by pixel count, which keeps the style
loss comparable across image sizes and tiling levels.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .fields import downsample_array

DEFAULT_MEAN = (0.485, 0.456, 0.406)
DEFAULT_STD = (0.229, 0.224, 0.225)
WEIGHTS_ENV_VAR = "SMOKESTYLE_VGG_WEIGHTS"
DEFAULT_RANDOM_SEED = 1234

# (block, convs-in-block, in_channels, out_channels) for VGG-19 config E
_BLOCKS = [(1, 2, 3, 64), (2, 2, 64, 128), (3, 4, 128, 256), (4, 4, 256, 512), (5, 4, 512, 512)]


def _build_plan():
    plan = []  # (conv_name, relu_name, in_ch, out_ch, pools_before, torchvision_index)
    tv_index = 0
    pools = 0
    for block, n_convs, in_ch, out_ch in _BLOCKS:
        for i in range(1, n_convs + 1):
            cin = in_ch if i == 1 else out_ch
            plan.append((f"conv{block}_{i}", f"relu{block}_{i}", cin, out_ch, pools, tv_index))
            tv_index += 2  # conv + relu
        pools += 1
        tv_index += 1  # pool
    return plan


_PLAN = _build_plan()
LAYER_NAMES = tuple(p[1] for p in _PLAN)


class FeatureNet:
    """VGG-19 feature stack with named rectifier outputs."""

    def __init__(self, weights: str | os.PathLike | None = None, dtype=torch.float32,
                 mean=DEFAULT_MEAN, std=DEFAULT_STD):
        if weights is None:
            weights = os.environ.get(WEIGHTS_ENV_VAR, "random")
        self.weights_spec = str(weights)
        self.dtype = dtype
        self.mean = torch.tensor(mean, dtype=dtype).view(3, 1, 1)
        self.std = torch.tensor(std, dtype=dtype).view(3, 1, 1)
        self._params = self._load(self.weights_spec)

    # -- weights -----------------------------------------------------------

    def _load(self, spec: str) -> dict[str, tuple[torch.Tensor, torch.Tensor]]:
        if spec == "random" or spec.startswith("random:"):
            seed = int(spec.split(":", 1)[1]) if ":" in spec else DEFAULT_RANDOM_SEED
            return self._random_bank(seed)
        path = Path(spec)
        if not path.exists():
            raise FileNotFoundError(
                f"VGG weights file not found: {path} (set {WEIGHTS_ENV_VAR} or use 'random')"
            )
        state = torch.load(path, map_location="cpu", weights_only=True)
        params = {}
        for conv_name, _, cin, cout, _, tv_idx in _PLAN:
            for key_w, key_b in (
                (f"{conv_name}.weight", f"{conv_name}.bias"),
                (f"features.{tv_idx}.weight", f"features.{tv_idx}.bias"),
                (f"{tv_idx}.weight", f"{tv_idx}.bias"),
            ):
                if key_w in state:
                    w, b = state[key_w], state[key_b]
                    break
            else:
                raise ValueError(f"{path}: no weights found for {conv_name}")
            if tuple(w.shape) != (cout, cin, 3, 3):
                raise ValueError(f"{path}: {conv_name} has shape {tuple(w.shape)}")
            params[conv_name] = (w.to(self.dtype), b.to(self.dtype))
        return params

    def _random_bank(self, seed: int) -> dict[str, tuple[torch.Tensor, torch.Tensor]]:
        gen = torch.Generator().manual_seed(seed)
        params = {}
        for conv_name, _, cin, cout, _, _ in _PLAN:
            std = (2.0 / (cin * 9)) ** 0.5
            w = torch.randn((cout, cin, 3, 3), generator=gen, dtype=torch.float32) * std
            params[conv_name] = (w.to(self.dtype), torch.zeros(cout, dtype=self.dtype))
        return params

    # -- geometry ----------------------------------------------------------

    @staticmethod
    def _plan_entry(layer: str):
        for entry in _PLAN:
            if entry[1] == layer:
                return entry
        raise ValueError(f"unknown layer {layer!r}; valid layers: {', '.join(LAYER_NAMES)}")

    def channels(self, layer: str) -> int:
        return self._plan_entry(layer)[3]

    def layer_extent(self, layer: str, height: int, width: int) -> tuple[int, int]:
        """Spatial extent of `layer`'s activations for a (height, width) input."""
        pools = self._plan_entry(layer)[4]
        return height // (1 << pools), width // (1 << pools)

    # -- forward -----------------------------------------------------------

    def prepare(self, image) -> torch.Tensor:
        """Image (H, W) or (H, W, 3), numpy or tensor, into a normalized (3, H, W)
        tensor; grayscale inputs are replicated across the 3 channels."""
        if isinstance(image, np.ndarray):
            t = torch.from_numpy(np.ascontiguousarray(image))
        else:
            t = image
        t = t.to(self.dtype)
        if t.dim() == 2:
            t = t.unsqueeze(-1).expand(*t.shape, 3)
        if t.dim() != 3 or t.shape[-1] != 3:
            raise ValueError(f"expected (H, W) or (H, W, 3) image, got {tuple(t.shape)}")
        t = t.permute(2, 0, 1)
        return (t - self.mean) / self.std

    def extract(self, image: torch.Tensor, layers) -> dict[str, torch.Tensor]:
        """Run the stack and collect activations at `layers`.

        `image` is a prepared (3, H, W) tensor; gradients flow back to it.
        Returns {layer: (C_l, h_l, w_l)} in the requested order.
        """
        layers = list(layers)
        if not layers:
            raise ValueError("no layers requested")
        entries = {name: self._plan_entry(name) for name in layers}
        deepest = max(_PLAN.index(e) for e in entries.values())
        x = image.unsqueeze(0)
        out: dict[str, torch.Tensor] = {}
        pools_done = 0
        for idx, (conv_name, relu_name, _, _, pools_before, _) in enumerate(_PLAN):
            while pools_done < pools_before:
                x = F.max_pool2d(x, kernel_size=2, stride=2)
                pools_done += 1
            w, b = self._params[conv_name]
            x = F.relu(F.conv2d(x, w, b, padding=1))
            if relu_name in entries:
                out[relu_name] = x.squeeze(0)
            if idx == deepest:
                break
        return {name: out[name] for name in layers}


_default_nets: dict[tuple, FeatureNet] = {}


def default_net(weights: str | None = None, dtype=torch.float32) -> FeatureNet:
    """Cached FeatureNet; the weight bank is read-only and shareable."""
    spec = str(weights) if weights is not None else os.environ.get(WEIGHTS_ENV_VAR, "random")
    key = (spec, dtype)
    if key not in _default_nets:
        _default_nets[key] = FeatureNet(spec, dtype=dtype)
    return _default_nets[key]


def extract_features(image, layers, net: FeatureNet | None = None) -> dict[str, torch.Tensor]:
    """Feature stack of an image (numpy (H,W[,3]) in [0,1] or RenderedImage pixels)."""
    net = net or default_net()
    if hasattr(image, "pixels"):
        image = image.pixels
    return net.extract(net.prepare(image), layers)


def gram(features) -> torch.Tensor:
    """Gram matrix G = F^T F / N of an activation tensor.

    Accepts (C, h, w) activations or a pre-flattened (N, C) matrix; numpy
    input is converted. Normalization by the pixel count N keeps the
    statistic independent of spatial resolution.
    """
    t = torch.as_tensor(features) if not isinstance(features, torch.Tensor) else features
    if t.dim() == 3:
        flat = t.reshape(t.shape[0], -1).transpose(0, 1)  # N x C
    elif t.dim() == 2:
        flat = t
    else:
        raise ValueError(f"expected (C, h, w) or (N, C), got shape {tuple(t.shape)}")
    n = flat.shape[0]
    return flat.transpose(0, 1) @ flat / n


def build_mask_pyramid(density_image: np.ndarray, layers, net: FeatureNet | None = None,
                       image_shape: tuple[int, int] | None = None) -> dict[str, np.ndarray]:
    """Per-layer guidance masks: the density image area-averaged down to each
    layer's spatial extent, clamped to [0, 1]."""
    net = net or default_net()
    img = np.clip(np.asarray(density_image, dtype=np.float64), 0.0, 1.0)
    if img.ndim != 2:
        raise ValueError("density image must be 2D (render or project the field first)")
    h, w = image_shape if image_shape is not None else img.shape
    masks = {}
    for layer in layers:
        extent = net.layer_extent(layer, h, w)
        masks[layer] = np.clip(downsample_array(img, extent), 0.0, 1.0)
    return masks


def guide_features(features: torch.Tensor, mask) -> torch.Tensor:
    """Elementwise product of every channel with the mask (differentiable)."""
    m = torch.as_tensor(mask, dtype=features.dtype)
    if m.shape != features.shape[-2:]:
        raise ValueError(
            f"mask extent {tuple(m.shape)} does not match activations {tuple(features.shape[-2:])}"
        )
    return features * m


def tile_style(image: np.ndarray, level: int) -> np.ndarray:
    """Replicate the style image level x level; higher levels transfer
    proportionally smaller structures."""
    if level < 1:
        raise ValueError("tiling level must be >= 1")
    if level == 1:
        return image
    reps = (level, level) + (1,) * (image.ndim - 2)
    return np.tile(image, reps)
