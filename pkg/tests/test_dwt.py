import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import haar_dwt_literal
from specaug.dwt import (
    BASES,
    WaveletPyramid,
    dwt2_forward,
    dwt2_inverse,
    dwt2_level,
    level_shapes,
)

values = st.floats(-1e4, 1e4, allow_nan=False)


@st.composite
def image_and_levels(draw, min_size=2, max_size=64):
    shape = draw(st.tuples(st.integers(min_size, max_size), st.integers(min_size, max_size)))
    top = int(np.floor(np.log2(min(shape))))
    levels = draw(st.integers(1, min(3, top)))
    img = draw(arrays(np.float64, shape, elements=values))
    return img, levels


@pytest.mark.parametrize("name", sorted(BASES))
def test_filters_are_orthonormal(name):
    h = BASES[name].lowpass
    g = BASES[name].highpass
    assert h.sum() == pytest.approx(np.sqrt(2), abs=1e-14)
    assert g.sum() == pytest.approx(0.0, abs=1e-14)
    for k in range(len(h) // 2):
        shifted = lambda x: np.dot(x[2 * k :], x[: len(x) - 2 * k])
        assert shifted(h) == pytest.approx(1.0 if k == 0 else 0.0, abs=1e-14)
        assert shifted(g) == pytest.approx(1.0 if k == 0 else 0.0, abs=1e-14)
        assert np.dot(h[2 * k :], g[: len(g) - 2 * k]) == pytest.approx(0.0, abs=1e-14)
        assert np.dot(g[2 * k :], h[: len(h) - 2 * k]) == pytest.approx(0.0, abs=1e-14)


def test_constant_2x2_haar():
    pyr = dwt2_forward(np.ones((2, 2)), "haar", 1)
    np.testing.assert_allclose(pyr.approx, [[2.0]], atol=1e-15)
    for band in pyr.details[0]:
        np.testing.assert_array_equal(band, [[0.0]])


def test_orientation_convention_2x2():
    # column pattern: lowpass down the rows gives [sqrt2, -sqrt2], highpass
    # across the columns then gives (sqrt2 - (-sqrt2)) / sqrt2 = 2 in H
    pyr = dwt2_forward(np.array([[1.0, -1.0], [1.0, -1.0]]), "haar", 1)
    h, v, d = pyr.details[0]
    np.testing.assert_allclose(pyr.approx, [[0.0]], atol=1e-15)
    np.testing.assert_allclose(h, [[2.0]], atol=1e-15)
    np.testing.assert_allclose(v, [[0.0]], atol=1e-15)
    np.testing.assert_allclose(d, [[0.0]], atol=1e-15)
    # the transposed pattern lands in V
    pyr_t = dwt2_forward(np.array([[1.0, 1.0], [-1.0, -1.0]]), "haar", 1)
    np.testing.assert_allclose(pyr_t.details[0][1], [[2.0]], atol=1e-15)
    np.testing.assert_allclose(pyr_t.details[0][0], [[0.0]], atol=1e-15)


def test_inverse_of_constant_pyramid():
    pyr = WaveletPyramid(np.array([[2.0]]), [(np.zeros((1, 1)),) * 3], (2, 2), "haar")
    np.testing.assert_allclose(dwt2_inverse(pyr), np.ones((2, 2)), atol=1e-15)


@pytest.mark.parametrize("name", sorted(BASES))
def test_zero_pyramid_gives_zero_image(name):
    template = dwt2_forward(np.ones((13, 10)), name, 2)
    zero = template.map_bands(np.zeros_like)
    out = dwt2_inverse(zero, name)
    assert out.shape == (13, 10)
    assert np.array_equal(out, np.zeros((13, 10)))


@pytest.mark.parametrize("levels, shape", [(1, (4, 4)), (2, (4, 4)), (1, (4, 8)), (2, (8, 4)), (3, (8, 8))])
def test_haar_matches_literal_basis_sums(rng, levels, shape):
    img = rng.normal(size=shape)
    pyr = dwt2_forward(img, "haar", levels)
    approx, details = haar_dwt_literal(img, levels)
    # the literal sums carry an extra global 1/sqrt(N*M)
    norm = 1 / np.sqrt(img.size)
    np.testing.assert_allclose(pyr.approx * norm, approx, atol=1e-12)
    for ours, ref in zip(pyr.details, details):
        for a, b in zip(ours, ref):
            np.testing.assert_allclose(a * norm, b, atol=1e-12)


def test_haar_8x8_two_levels_energy(rng):
    img = rng.normal(size=(8, 8))
    pyr = dwt2_forward(img, "haar", 2)
    assert pyr.energy() == pytest.approx(np.sum(img**2), rel=1e-9)
    assert pyr.size() == img.size


def test_db4_16x16_roundtrip(rng):
    img = rng.uniform(-1e4, 1e4, size=(16, 16))
    assert np.abs(dwt2_inverse(dwt2_forward(img, "db4", 2), "db4") - img).max() <= 1e-8


@pytest.mark.parametrize("name, tol", [("haar", 1e-9), ("db4", 1e-8)])
@given(data=image_and_levels())
def test_perfect_reconstruction(name, tol, data):
    img, levels = data
    pyr = dwt2_forward(img, name, levels)
    assert np.abs(dwt2_inverse(pyr, name) - img).max() <= tol


@st.composite
def dyadic_image(draw):
    levels = draw(st.integers(1, 3))
    shape = (draw(st.integers(1, 8)) << levels, draw(st.integers(1, 8)) << levels)
    return draw(arrays(np.float64, shape, elements=values)), levels


@given(dyadic_image())
def test_haar_parseval_even_sizes(data):
    img, levels = data
    pyr = dwt2_forward(img, "haar", levels)
    e = np.sum(img**2)
    assert abs(pyr.energy() - e) <= 1e-9 * max(e, 1e-300)


@pytest.mark.parametrize("name", sorted(BASES))
@given(data=image_and_levels(min_size=4))
def test_cascade_property(name, data):
    img, _ = data
    two = dwt2_forward(img, name, 2)
    approx1, detail1 = dwt2_level(img, name)
    approx2, detail2 = dwt2_level(approx1, name)
    np.testing.assert_allclose(two.approx, approx2, rtol=0, atol=1e-10)
    for a, b in zip(two.details[0], detail2):
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-10)
    for a, b in zip(two.details[1], detail1):
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-10)


@pytest.mark.parametrize("name, tol", [("haar", 0.0), ("db4", 1e-10)])
@pytest.mark.parametrize("shape", [(8, 8), (13, 21), (64, 40)])
def test_constant_image_has_no_detail(name, tol, shape):
    pyr = dwt2_forward(np.full(shape, 731.5), name, 3)
    for level in pyr.details:
        for band in level:
            assert np.abs(band).max() <= tol * 731.5


def test_band_shapes_halve_with_ceiling():
    pyr = dwt2_forward(np.zeros((37, 20)), "haar", 3)
    assert level_shapes((37, 20), 3) == [(37, 20), (19, 10), (10, 5), (5, 3)]
    assert pyr.approx.shape == (5, 3)
    assert [lvl[0].shape for lvl in pyr.details] == [(5, 3), (10, 5), (19, 10)]
    assert all(len({b.shape for b in lvl}) == 1 for lvl in pyr.details)


@pytest.mark.parametrize("shape, levels", [((1, 1), 1), ((3, 8), 2), ((64, 7), 3)])
def test_rejects_too_many_levels(shape, levels):
    with pytest.raises(ValueError):
        dwt2_forward(np.zeros(shape), "haar", levels)


def test_rejects_unknown_wavelet_and_bad_levels():
    with pytest.raises(ValueError):
        dwt2_forward(np.zeros((4, 4)), "sym8", 1)
    with pytest.raises(ValueError):
        dwt2_forward(np.zeros((4, 4)), "haar", 0)


def test_inverse_rejects_inconsistent_bands():
    pyr = dwt2_forward(np.zeros((8, 8)), "haar", 2)
    bad = WaveletPyramid(pyr.approx, [pyr.details[0], (np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((3, 4)))], (8, 8))
    with pytest.raises(ValueError):
        dwt2_inverse(bad)
    with pytest.raises(ValueError):
        dwt2_inverse(WaveletPyramid(np.zeros((3, 3)), pyr.details, (8, 8)))


def test_flatten_order_is_approx_then_coarse_to_fine():
    pyr = dwt2_forward(np.arange(64.0).reshape(8, 8), "haar", 2)
    flat = pyr.flatten()
    assert flat.size == 64
    np.testing.assert_array_equal(flat[:4], pyr.approx.ravel())
    np.testing.assert_array_equal(flat[4:8], pyr.details[0][0].ravel())
    np.testing.assert_array_equal(flat[-16:], pyr.details[1][2].ravel())
    back = pyr.unflatten(flat)
    for a, b in zip(back.bands(), pyr.bands()):
        np.testing.assert_array_equal(a, b)
