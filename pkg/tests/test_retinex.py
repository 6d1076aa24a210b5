"""

    tests.test_retinex.py
    ~~~~~~~~~~~~~~~~~~~~~

    @author: z33k

"""
import numpy as np
import pytest

from rln2.imaging.plane import ImagePlane
from rln2.imaging.retinex import ResidualPair, RetinexPair, decompose, recompose
from rln2.utils import RangeError, ShapeError


class TestDecompose:
    def test_identity(self, make_plane):
        img = make_plane(16, 16)
        assert np.max(np.abs(recompose(decompose(img)).data - img.data)) < 1e-6

    def test_luminance_is_value_channel(self, make_plane):
        img = make_plane(8, 8, lo=0.1)
        pair = decompose(img)
        assert np.allclose(pair.luminance[..., 0], img.data.max(axis=-1))
        assert pair.reflectance.max() <= 1.0 + 1e-12

    def test_black_pixels_floor_luminance(self):
        pair = decompose(ImagePlane(np.zeros((2, 2, 3))), eps=1e-3)
        assert np.all(pair.luminance == 1e-3)
        assert np.all(pair.reflectance == 0.0)

    def test_rejects_non_positive_eps(self, make_plane):
        with pytest.raises(RangeError):
            decompose(make_plane(2, 2), eps=0.0)

    def test_rejects_grayscale(self, make_plane):
        with pytest.raises(ShapeError):
            decompose(make_plane(2, 2, channels=1))


class TestRecompose:
    def test_zero_residual_is_identity(self, make_plane):
        img = make_plane(8, 8)
        pair = decompose(img)
        out = recompose(pair, ResidualPair.zeros(8, 8))
        assert np.max(np.abs(out.data - img.data)) < 1e-6

    def test_residuals_are_additive_per_component(self):
        pair = RetinexPair(np.full((1, 1, 1), 0.5), np.full((1, 1, 3), 0.4))
        residual = ResidualPair(np.full((1, 1, 1), 0.25), np.full((1, 1, 3), 0.1))
        out = recompose(pair, residual)
        assert np.allclose(out.data, 0.75 * 0.5)

    def test_clamps_only_at_the_end(self):
        pair = RetinexPair(np.full((1, 1, 1), 1.0), np.full((1, 1, 3), 0.9))
        residual = ResidualPair(np.full((1, 1, 1), 0.5), np.zeros((1, 1, 3)))
        assert np.allclose(recompose(pair, residual).data, 1.0)
        unclamped = recompose(pair, residual, clamp=False)
        assert np.allclose(unclamped.data, 1.35)
        assert unclamped.in_bounds()

    def test_misaligned_residual(self):
        pair = RetinexPair(np.ones((2, 2, 1)), np.ones((2, 2, 3)))
        with pytest.raises(ShapeError):
            recompose(pair, ResidualPair.zeros(3, 2))


class TestPairs:
    def test_luminance_must_be_positive(self):
        with pytest.raises(RangeError):
            RetinexPair(np.zeros((1, 1, 1)), np.zeros((1, 1, 3)))

    def test_misaligned_components(self):
        with pytest.raises(ShapeError):
            RetinexPair(np.ones((2, 2, 1)), np.ones((2, 3, 3)))

    def test_residual_must_be_finite(self):
        with pytest.raises(RangeError):
            ResidualPair(np.full((1, 1, 1), np.nan), np.zeros((1, 1, 3)))
