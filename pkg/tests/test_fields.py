import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smokestyle.fields import (
    ColorField,
    ScalarField,
    VectorField,
    downsample,
    sample,
    white_noise,
    zeros_like_velocity,
)


def test_scalar_field_rejects_negative_values():
    with pytest.raises(ValueError):
        ScalarField(np.array([[0.0, -1.0], [0.0, 0.0]], np.float32))


def test_scalar_field_rejects_non_finite():
    with pytest.raises(ValueError):
        ScalarField(np.array([[np.nan, 0.0], [0.0, 0.0]], np.float32))


def test_scalar_field_rejects_rank_one():
    with pytest.raises(ValueError):
        ScalarField(np.zeros(4, np.float32))


def test_vector_field_component_count_must_match_rank():
    with pytest.raises(ValueError):
        VectorField(np.zeros((4, 4, 3), np.float32))  # 2D grid needs 2 components
    VectorField(np.zeros((4, 4, 2), np.float32))
    VectorField(np.zeros((4, 4, 4, 3), np.float32))


def test_color_field_requires_three_channels_in_unit_range():
    with pytest.raises(ValueError):
        ColorField(np.zeros((4, 4, 2), np.float32))
    with pytest.raises(ValueError):
        ColorField(np.full((4, 4, 3), 1.5, np.float32))
    ColorField(np.full((4, 4, 3), 1.0, np.float32))


def test_zeros_like_velocity_shape():
    v = zeros_like_velocity((3, 5))
    assert v.values.shape == (3, 5, 2)
    assert not v.values.any()


def test_sample_at_cell_center_is_exact():
    values = np.arange(12, dtype=np.float32).reshape(3, 4)
    f = ScalarField(values)
    for i in range(3):
        for j in range(4):
            assert sample(f, (i + 0.5, j + 0.5)) == values[i, j]


def test_sample_midway_between_cells_averages():
    f = ScalarField(np.array([[0.0, 1.0]], np.float32).reshape(2, 1))
    assert sample(f, (1.0, 0.5)) == pytest.approx(0.5)


def test_sample_bilinear_hand_oracle():
    # corners v00=1 v01=2 v10=3 v11=4 at position (1.25, 1.0):
    # fx=0.75, fy=0.5 -> (1*.25 + 3*.75)*.5 + (2*.25 + 4*.75)*.5 = 3.0
    f = ScalarField(np.array([[1.0, 2.0], [3.0, 4.0]], np.float32))
    assert sample(f, (1.25, 1.0)) == pytest.approx(3.0)


def test_sample_clamps_to_boundary():
    f = ScalarField(np.array([[7.0, 1.0], [2.0, 3.0]], np.float32))
    assert sample(f, (-5.0, -5.0)) == 7.0
    assert sample(f, (100.0, 100.0)) == 3.0


def test_sample_rejects_non_finite_position():
    f = ScalarField(np.ones((2, 2), np.float32))
    with pytest.raises(ValueError):
        sample(f, (np.nan, 0.5))
    with pytest.raises(ValueError):
        sample(f, (np.inf, 0.5))


def test_sample_color_field_returns_three_channels():
    c = ColorField(np.linspace(0, 1, 2 * 2 * 3, dtype=np.float32).reshape(2, 2, 3))
    out = sample(c, (0.5, 0.5))
    assert out.shape == (3,)
    assert np.allclose(out, c.values[0, 0])


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float32, (4, 4), elements=st.floats(0, 10, width=32)),
    st.floats(-2, 6),
    st.floats(-2, 6),
)
def test_sample_stays_within_field_range(values, x, y):
    f = ScalarField(values)
    out = sample(f, (x, y))
    assert values.min() - 1e-4 <= out <= values.max() + 1e-4


def test_downsample_preserves_constants():
    f = ScalarField(np.full((8, 6), 3.25, np.float32))
    out = downsample(f, (3, 2))
    assert np.allclose(out.values, 3.25)


def test_downsample_block_average_corner():
    values = np.zeros((4, 4), np.float32)
    values[:2, 2:] = 1.0  # upper-left in (x, right y) orientation
    out = downsample(ScalarField(values), (2, 2))
    assert np.array_equal(out.values, np.array([[0.0, 1.0], [0.0, 0.0]], np.float32))


def test_downsample_matches_brute_force_block_mean():
    rng = np.random.default_rng(3)
    values = rng.random((16, 16), dtype=np.float32)
    out = downsample(ScalarField(values), (4, 4))
    brute = values.reshape(4, 4, 4, 4).mean(axis=(1, 3))
    assert np.allclose(out.values, brute, atol=1e-6)


def test_downsample_non_integer_ratio_overlap_weights():
    # 3 cells into 2: out cell 0 covers cells [0, 1.5) -> (v0 + 0.5 v1) / 1.5
    values = np.array([[1.0], [2.0], [4.0]], np.float32)
    out = downsample(ScalarField(values), (2, 1))
    assert out.values[0, 0] == pytest.approx((1.0 + 0.5 * 2.0) / 1.5)
    assert out.values[1, 0] == pytest.approx((0.5 * 2.0 + 4.0) / 1.5)


def test_downsample_rejects_zero_extent():
    f = ScalarField(np.ones((4, 4), np.float32))
    with pytest.raises(ValueError):
        downsample(f, (0, 2))


def test_downsample_rejects_enlargement():
    f = ScalarField(np.ones((4, 4), np.float32))
    with pytest.raises(ValueError):
        downsample(f, (8, 4))


def test_downsample_twice_equals_single_power_of_two():
    rng = np.random.default_rng(11)
    f = ScalarField(rng.random((16, 16), dtype=np.float32))
    via_8 = downsample(downsample(f, (8, 8)), (4, 4))
    direct = downsample(f, (4, 4))
    assert np.allclose(via_8.values, direct.values, atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float32, (6, 6), elements=st.floats(0, 5, width=32)), st.floats(0.1, 4))
def test_downsample_is_linear_in_the_field(values, k):
    base = downsample(ScalarField(values), (3, 3)).values
    scaled = downsample(ScalarField((k * values).astype(np.float32)), (3, 3)).values
    assert np.allclose(scaled, k * base, atol=1e-5 * max(1.0, k))


def test_downsample_mean_preserved():
    rng = np.random.default_rng(5)
    f = ScalarField(rng.random((12, 9), dtype=np.float32))
    out = downsample(f, (5, 3))
    assert out.values.mean() == pytest.approx(f.values.mean(), abs=1e-6)


def test_white_noise_deterministic_per_seed():
    a = white_noise((16, 16), 42)
    b = white_noise((16, 16), 42)
    assert np.array_equal(a.values, b.values)


def test_white_noise_seeds_differ():
    a = white_noise((16, 16), 1)
    b = white_noise((16, 16), 2)
    assert (a.values != b.values).any()


def test_white_noise_uniform_range_and_mean():
    n = white_noise((64, 64), 7)
    assert n.values.min() >= 0.0
    assert n.values.max() < 1.0
    assert abs(float(n.values.mean()) - 0.5) < 0.05
