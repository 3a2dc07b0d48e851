import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import shift_columns
from specaug.baselines import (
    AffineParams,
    DisplacementGrid,
    affine_augment,
    affine_transform,
    bilinear_sample,
    dense_field,
    elastic_augment,
    elastic_transform,
    gamma_augment,
    gamma_transform,
    grid_positions,
    linear_values,
    replicate_simple,
    sample_affine_params,
    sample_displacement_grid,
)
from specaug.corruption import psnr
from specaug.image import DISEASED, HEALTHY, OUTSIDE, LabelGrid, from_unit_range, to_unit_range
from specaug.rng import NoiseDraw
from specaug.textures import smooth_image


def random_labels(rng, shape, patch_size):
    lattice = LabelGrid.lattice_shape(shape, patch_size)
    return LabelGrid(rng.integers(0, 3, size=lattice), patch_size)


@pytest.mark.parametrize("R", [1, 5])
def test_replicate_simple(rng, R):
    img = rng.normal(size=(5, 4))
    outs = replicate_simple(img, R)
    assert len(outs) == R
    for out in outs:
        assert np.array_equal(out, img)
        assert out is not img


def test_gamma_values_are_linear():
    assert linear_values(5, 0.8, 1.2) == pytest.approx([0.8, 0.9, 1.0, 1.1, 1.2], abs=1e-15)
    assert linear_values(1, 0.8, 1.2) == [1.0]


def test_gamma_one_equals_window_roundtrip(rng):
    img = rng.uniform(-1200, 600, size=(16, 16))
    window = (-1000.0, 400.0)
    expected = from_unit_range(to_unit_range(img, *window), *window)
    assert np.abs(gamma_transform(img, 1.0, window) - expected).max() <= 1e-12


def test_gamma_square_root_of_quarter():
    out = gamma_transform(np.array([[0.25]]), 0.5, (0.0, 1.0))
    assert out[0, 0] == 0.5


@given(st.floats(0.05, 5.0))
def test_gamma_keeps_window_endpoints(gamma):
    out = gamma_transform(np.array([[-1000.0, 400.0]]), gamma, (-1000.0, 400.0))
    assert out.tolist() == [[-1000.0, 400.0]]


def test_gamma_augment_uses_each_gamma(rng):
    img = rng.uniform(0, 1, size=(4, 4))
    outs = gamma_augment(img, 5, 0.8, 1.2, (0.0, 1.0))
    for out, g in zip(outs, [0.8, 0.9, 1.0, 1.1, 1.2]):
        np.testing.assert_allclose(out, img**g, atol=1e-15)
    with pytest.raises(ValueError):
        gamma_augment(img, 2, 1.2, 0.8)


def test_bilinear_sample_exact_on_grid_and_interpolates(rng):
    img = rng.normal(size=(4, 5))
    rr, cc = np.mgrid[:4, :5]
    assert np.array_equal(bilinear_sample(img, rr, cc, 0.0), img)
    mid = bilinear_sample(img, np.array([0.5]), np.array([1.25]), 0.0)[0]
    expected = 0.5 * (0.75 * img[0, 1] + 0.25 * img[0, 2]) + 0.5 * (0.75 * img[1, 1] + 0.25 * img[1, 2])
    assert mid == pytest.approx(expected, abs=1e-14)
    assert bilinear_sample(img, np.array([-0.5]), np.array([0.0]), -9.0)[0] == -9.0
    single = np.array([[3.0]])
    assert bilinear_sample(single, np.array([0.0]), np.array([0.0]), 0.0)[0] == 3.0


def test_identity_affine(rng):
    img = rng.normal(size=(21, 17))
    labels = random_labels(rng, img.shape, 5)
    out, out_labels = affine_transform(img, labels, AffineParams())
    assert np.abs(out - img).max() <= 1e-12
    assert out_labels == labels


def test_hflip_reverses_columns():
    out, _ = affine_transform(np.array([[1.0, 2.0, 3.0]]), None, AffineParams(hflip=True))
    assert out.tolist() == [[3.0, 2.0, 1.0]]
    out, _ = affine_transform(np.array([[1.0], [2.0]]), None, AffineParams(vflip=True))
    assert out.tolist() == [[2.0], [1.0]]


def test_flip_moves_labels():
    labels = LabelGrid(np.array([[HEALTHY, DISEASED, OUTSIDE]]), patch_size=2)
    _, out = affine_transform(np.zeros((2, 6)), labels, AffineParams(hflip=True))
    assert out.labels.tolist() == [[OUTSIDE, DISEASED, HEALTHY]]


def test_rotation_roundtrip_is_close():
    img = smooth_image((64, 64), seed=4)
    there, _ = affine_transform(img, None, AffineParams(rotation_deg=10.0))
    back, _ = affine_transform(there, None, AffineParams(rotation_deg=-10.0))
    # corners rotate out of the image and come back as fill, so compare the centre disc
    rr, cc = np.mgrid[:64, :64]
    disc = (rr - 31.5) ** 2 + (cc - 31.5) ** 2 <= 26**2
    mse = np.mean((back[disc] - img[disc]) ** 2)
    assert 10 * np.log10(np.ptp(img) ** 2 / mse) >= 30


def test_affine_fill_is_image_minimum(rng):
    img = rng.uniform(5, 10, size=(20, 20))
    out, _ = affine_transform(img, None, AffineParams(rotation_deg=45.0))
    assert out[0, 0] == img.min()


def test_sampled_affine_params_respect_ranges():
    for r in range(200):
        p = sample_affine_params(NoiseDraw(1, 0, r), 10.0, (0.95, 1.05))
        assert 0 <= p.rotation_deg <= 10
        assert 0.95 <= p.scale <= 1.05
    flips = [sample_affine_params(NoiseDraw(2, 0, r)).hflip for r in range(2000)]
    assert 0.45 < np.mean(flips) < 0.55


def test_affine_augment_is_deterministic(rng):
    img = rng.normal(size=(30, 30))
    labels = random_labels(rng, img.shape, 10)
    a = affine_augment(img, labels, 3, NoiseDraw(4, 1))
    b = affine_augment(img, labels, 3, NoiseDraw(4, 1))
    assert len(a) == 3
    for (x, lx), (y, ly) in zip(a, b):
        assert np.array_equal(x, y) and lx == ly
    assert not np.array_equal(a[0][0], a[1][0])


def _consistency(rng, transform, shape=(105, 126), patch_size=21):
    """Fraction of in-support patches whose warped label matches the warped patch identity."""
    labels = random_labels(rng, shape, patch_size)
    rr, cc = np.mgrid[: shape[0], : shape[1]]
    row_id, _ = transform(rr // patch_size * 1.0, labels)
    col_id, warped = transform(cc // patch_size * 1.0, labels)
    # the fill (image minimum) is 0, a valid id, so probe support with an image
    # that is positive everywhere except one corner pixel
    probe = np.ones(shape)
    probe[0, 0] = 0.0
    support, _ = transform(probe, None)
    centres_r, centres_c = labels.patch_centers(shape)
    agree = total = 0
    for i, pr in enumerate(centres_r):
        for j, pc in enumerate(centres_c):
            if support[pr, pc] <= 0:
                continue
            total += 1
            src = labels.labels[int(np.rint(row_id[pr, pc])), int(np.rint(col_id[pr, pc]))]
            agree += src == warped.labels[i, j]
    return agree / total, total


def test_affine_labels_follow_image(rng):
    for r in range(5):
        params = sample_affine_params(NoiseDraw(10, 0, r))
        frac, total = _consistency(rng, lambda img, lab: affine_transform(img, lab, params))
        assert total > 0 and frac >= 0.99


def test_elastic_labels_follow_image(rng):
    for r in range(5):
        grid = sample_displacement_grid(NoiseDraw(11, 0, r), (4, 4), 20.0)
        frac, total = _consistency(rng, lambda img, lab: elastic_transform(img, lab, grid))
        assert total > 0 and frac >= 0.99


def test_zero_displacement_is_identity(rng):
    img = rng.normal(size=(64, 64))
    labels = random_labels(rng, img.shape, 20)
    out, out_labels = elastic_transform(img, labels, DisplacementGrid.zeros())
    assert np.abs(out - img).max() <= 1e-12
    assert out_labels == labels


def test_constant_displacement_is_a_shift(rng):
    img = rng.normal(size=(40, 50))
    out, _ = elastic_transform(img, None, DisplacementGrid.constant(0.0, 3.0))
    expected = shift_columns(img, 3, img.min())
    np.testing.assert_allclose(out, expected, atol=1e-9)


def test_constant_image_stays_constant(rng):
    grid = sample_displacement_grid(NoiseDraw(3), (4, 4), 15.0)
    out, _ = elastic_transform(np.full((64, 64), 42.0), None, grid)
    assert np.all(out == 42.0)


def test_dense_field_interpolates_grid_points():
    grid = sample_displacement_grid(NoiseDraw(6), (4, 5), 12.0)
    shape = (61, 81)
    d_row, d_col = dense_field(grid, shape)
    pr, pc = grid_positions(shape, grid.grid_shape)
    for i, r in enumerate(pr.astype(int)):
        for j, c in enumerate(pc.astype(int)):
            assert d_row[r, c] == pytest.approx(grid.vectors[i, j, 0], abs=1e-9)
            assert d_col[r, c] == pytest.approx(grid.vectors[i, j, 1], abs=1e-9)


def test_displacement_magnitudes_respect_cap():
    for r in range(50):
        v = sample_displacement_grid(NoiseDraw(1, 0, r), (4, 4), 7.5).vectors
        assert np.all(np.hypot(v[..., 0], v[..., 1]) <= 7.5 + 1e-12)


def test_elastic_augment_ramps_cap_and_checks_size(rng):
    img = smooth_image((64, 64))
    outs = elastic_augment(img, None, 5, NoiseDraw(2))
    assert len(outs) == 5
    # first replication moves by at most 1 px, so it stays close to the input
    assert psnr(img, outs[0][0]) > psnr(img, outs[-1][0])
    with pytest.raises(ValueError):
        elastic_augment(np.zeros((40, 40)), None, 2, NoiseDraw(2))


def test_displacement_grid_validation():
    with pytest.raises(ValueError):
        DisplacementGrid(np.zeros((1, 4, 2)))
    with pytest.raises(ValueError):
        DisplacementGrid(np.zeros((4, 4)))
