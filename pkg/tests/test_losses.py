import numpy as np
import pytest
import torch

from smokestyle.fields import ScalarField
from smokestyle.features import FeatureNet, extract_features
from smokestyle.losses import (
    LossWeights,
    color_objective,
    content_loss,
    shape_objective,
    style_loss,
    view_mask_pyramids,
)
from smokestyle.render import RenderSettings, render_grayscale

LAYERS = ("relu2_1", "relu3_1")


@pytest.fixture(scope="module")
def net():
    return FeatureNet("random")


def style_stack(image, net, layers=LAYERS):
    return {k: v.detach() for k, v in extract_features(image, layers, net).items()}


def rand_density(seed, n=16):
    rng = np.random.default_rng(seed)
    return ScalarField(rng.random((n, n), dtype=np.float32))


def test_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(alpha=-1.0)
    with pytest.raises(ValueError):
        LossWeights(beta=-0.1)
    with pytest.raises(ValueError):
        LossWeights(alpha=0.0, beta=0.0)
    with pytest.raises(ValueError):
        LossWeights(layer_weights={"relu2_1": 0.5, "relu3_1": 0.6})


def test_layer_weight_resolution():
    assert LossWeights().layer_weight("relu2_1", 4) == 0.25
    w = LossWeights(layer_weights={"relu2_1": 0.3, "relu3_1": 0.7})
    assert w.layer_weight("relu3_1", 2) == 0.7


def test_content_loss_zero_on_identical_stacks():
    f = {"a": torch.rand(4, 3, 3)}
    assert content_loss(f, {k: v.clone() for k, v in f.items()}) == 0.0


def test_content_loss_hand_oracle():
    fa = {"a": torch.tensor([[[1.0, 2.0]]])}
    fb = {"a": torch.tensor([[[0.0, 0.0]]])}
    assert content_loss(fa, fb).item() == pytest.approx(2.5)  # (1 + 4) / 2


def test_content_loss_rejects_mismatches():
    with pytest.raises(ValueError):
        content_loss({"a": torch.ones(1, 2, 2)}, {"b": torch.ones(1, 2, 2)})
    with pytest.raises(ValueError):
        content_loss({"a": torch.ones(1, 2, 2)}, {"a": torch.ones(1, 3, 3)})


def test_style_loss_zero_when_image_matches_style():
    f = {"a": torch.rand(4, 3, 3), "b": torch.rand(2, 5, 5)}
    loss = style_loss(f, {k: v.clone() for k, v in f.items()})
    assert loss.item() == 0.0


def test_style_loss_hand_oracle():
    # gram(image) = [[2.5]], gram(style) = [[0]]; squared difference 6.25
    f_img = {"a": torch.tensor([[[1.0, 2.0]]])}
    f_sty = {"a": torch.tensor([[[0.0, 0.0]]])}
    assert style_loss(f_img, f_sty).item() == pytest.approx(6.25)


def test_style_loss_layer_weighting():
    f_img = {"a": torch.tensor([[[1.0, 2.0]]]), "b": torch.tensor([[[0.0, 0.0]]])}
    f_sty = {"a": torch.tensor([[[0.0, 0.0]]]), "b": torch.tensor([[[1.0, 2.0]]])}
    weighted = style_loss(f_img, f_sty, weights=LossWeights(layer_weights={"a": 0.2, "b": 0.8}))
    assert weighted.item() == pytest.approx(0.2 * 6.25 + 0.8 * 6.25)


def test_style_loss_extents_may_differ():
    f_img = {"a": torch.rand(4, 3, 3)}
    f_sty = {"a": torch.rand(4, 9, 9)}
    assert torch.isfinite(style_loss(f_img, f_sty))


def test_masks_scale_image_side_only():
    f_img = {"a": torch.tensor([[[1.0, 2.0]]])}
    f_sty = {"a": torch.tensor([[[3.0, 4.0]]])}
    ones = style_loss(f_img, f_sty, masks={"a": np.ones((1, 2))})
    assert ones.item() == pytest.approx(style_loss(f_img, f_sty).item())
    # half mask quarters the image gram, leaves the style gram alone
    half = style_loss(f_img, f_sty, masks={"a": np.full((1, 2), 0.5)})
    g_img, g_sty = 2.5, 12.5
    assert half.item() == pytest.approx((0.25 * g_img - g_sty) ** 2)


def test_shape_objective_zero_for_stationary_match(net):
    d = rand_density(0)
    style = style_stack(render_grayscale(d, 0.0, RenderSettings()), net)
    v = np.zeros((16, 16, 2), np.float32)
    loss = shape_objective(d, v, style, (0.0,), LossWeights(), RenderSettings(), net)
    assert loss.item() == 0.0


def test_shape_objective_content_term_zero_at_identity(net):
    d = rand_density(0)
    style = style_stack(render_grayscale(d, 0.0, RenderSettings()), net)
    v = np.zeros((16, 16, 2), np.float32)
    weights = LossWeights(alpha=0.5, beta=1.0)
    loss = shape_objective(d, v, style, (0.0,), weights, RenderSettings(), net)
    assert loss.item() == 0.0


def test_shape_objective_positive_and_differentiable(net):
    d = rand_density(1)
    style = style_stack(np.random.default_rng(9).random((32, 32, 3), dtype=np.float32), net)
    v = torch.zeros((16, 16, 2), requires_grad=True)
    loss = shape_objective(d, v, style, (0.0,), LossWeights(), RenderSettings(), net)
    assert loss.item() > 0
    loss.backward()
    assert v.grad is not None and torch.isfinite(v.grad).all()
    assert v.grad.abs().max() > 0


def test_view_weights_normalize(net):
    d = rand_density(2)
    style = style_stack(np.random.default_rng(9).random((32, 32, 3), dtype=np.float32), net)
    v = np.zeros((16, 16, 2), np.float32)
    base = shape_objective(d, v, style, (0.0,), LossWeights(), RenderSettings(), net)
    scaled = shape_objective(
        d, v, style, (0.0,), LossWeights(), RenderSettings(), net, view_weights=[5.0]
    )
    assert scaled.item() == pytest.approx(base.item())


def test_view_weight_length_mismatch(net):
    d = rand_density(2)
    style = style_stack(np.random.default_rng(9).random((32, 32, 3), dtype=np.float32), net)
    v = np.zeros((16, 16, 2), np.float32)
    with pytest.raises(ValueError):
        shape_objective(
            d, v, style, (0.0,), LossWeights(), RenderSettings(), net, view_weights=[1.0, 1.0]
        )


def test_mask_pyramids_cover_views_and_layers(net):
    d = rand_density(3)
    masks = view_mask_pyramids(d, (0.0,), LAYERS, RenderSettings(), net)
    assert len(masks) == 1
    assert masks[0]["relu2_1"].shape == (8, 8)
    assert masks[0]["relu3_1"].shape == (4, 4)
    assert all((0 <= m).all() and (m <= 1).all() for m in masks[0].values())


def test_color_objective_matches_precomputed_masks(net):
    d = rand_density(4, n=8)
    rng = np.random.default_rng(5)
    c = rng.random((8, 8, 3), dtype=np.float32)
    style = style_stack(rng.random((32, 32, 3), dtype=np.float32), net)
    settings = RenderSettings()
    masks = view_mask_pyramids(d, (0.0,), LAYERS, settings, net)
    auto = color_objective(d, c, style, (0.0,), LossWeights(), settings, net)
    explicit = color_objective(d, c, style, (0.0,), LossWeights(), settings, net, masks=masks)
    assert auto.item() == explicit.item()


def test_color_objective_gradient_only_where_density_lives(net):
    values = np.zeros((8, 8), np.float32)
    values[4:, :] = 1.0  # right half carries smoke, left half is empty
    d = ScalarField(values)
    rng = np.random.default_rng(6)
    style = style_stack(rng.random((32, 32, 3), dtype=np.float32), net)
    c = torch.rand((8, 8, 3), generator=torch.Generator().manual_seed(6), requires_grad=True)
    loss = color_objective(d, c, style, (0.0,), LossWeights(), RenderSettings(), net)
    assert torch.isfinite(loss) and loss.item() > 0
    loss.backward()
    assert not c.grad[:4].any()  # empty cells cannot influence the render
    assert c.grad[4:].abs().max() > 0
