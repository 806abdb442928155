"""Transport-based smoke stylization.

Optimizes a velocity field so the transported density renders with the Gram
statistics of a style image, then paints the result in a second color pass.
Both passes differentiate through an emission-absorption volume renderer.
"""
from .fields import (
    ColorField,
    ScalarField,
    VectorField,
    downsample,
    sample,
    white_noise,
    zeros_like_velocity,
)
from .features import FeatureNet, LAYER_NAMES, default_net, extract_features, gram, tile_style
from .losses import LossWeights, color_objective, content_loss, shape_objective, style_loss
from .optimize import (
    NumericalAbort,
    StylizationConfig,
    StylizedFrame,
    initial_color,
    stylize_color,
    stylize_sequence,
    stylize_shape,
)
from .procedural import gaussian_blob, make_procedural_smoke, make_style_image
from .render import (
    RenderedImage,
    RenderSettings,
    ViewAngle,
    render_color,
    render_grayscale,
    rotate_view,
    write_png,
)
from .transport import TemporalWindow, advect, advect_color, advect_velocity, align_window
from .volf import read_color, read_scalar, read_vector, read_volf, write_field, write_volf

__all__ = [
    "ColorField",
    "FeatureNet",
    "LAYER_NAMES",
    "LossWeights",
    "NumericalAbort",
    "RenderSettings",
    "RenderedImage",
    "ScalarField",
    "StylizationConfig",
    "StylizedFrame",
    "TemporalWindow",
    "VectorField",
    "ViewAngle",
    "advect",
    "advect_color",
    "advect_velocity",
    "align_window",
    "color_objective",
    "content_loss",
    "default_net",
    "downsample",
    "extract_features",
    "gaussian_blob",
    "gram",
    "initial_color",
    "make_procedural_smoke",
    "make_style_image",
    "read_color",
    "read_scalar",
    "read_vector",
    "read_volf",
    "render_color",
    "render_grayscale",
    "rotate_view",
    "sample",
    "shape_objective",
    "style_loss",
    "stylize_color",
    "stylize_sequence",
    "stylize_shape",
    "tile_style",
    "white_noise",
    "write_field",
    "write_png",
    "write_volf",
    "zeros_like_velocity",
]

__version__ = "0.1.0"
