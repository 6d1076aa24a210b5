"""

    tests.test_wavelet.py
    ~~~~~~~~~~~~~~~~~~~~~

    @author: z33k

"""
import numpy as np
import pytest
import torch

from rln2.imaging.plane import ImagePlane
from rln2.imaging.wavelet import SubbandSet, call_count, dwt2, haar_dwt, idwt2, \
    reset_call_counts
from rln2.utils import ShapeError


class TestDwt2:
    def test_constant_image_has_no_high_frequencies(self):
        s = dwt2(ImagePlane(np.full((8, 8, 3), 0.25)))
        assert np.allclose(s.ll, 0.5)
        for band in (s.lh, s.hl, s.hh):
            assert np.allclose(band, 0.0)

    def test_single_block_by_hand(self):
        # [a b; c d] = [1 2; 3 4]
        s = dwt2(ImagePlane(np.array([[1.0, 2.0], [3.0, 4.0]])))
        assert s.ll[0, 0, 0] == pytest.approx(5.0)
        assert s.lh[0, 0, 0] == pytest.approx(-2.0)
        assert s.hl[0, 0, 0] == pytest.approx(-1.0)
        assert s.hh[0, 0, 0] == pytest.approx(0.0)

    def test_subband_shapes(self, make_plane):
        s = dwt2(make_plane(16, 12))
        for band in (s.ll, s.lh, s.hl, s.hh):
            assert band.shape == (8, 6, 3)

    def test_perfect_reconstruction(self, make_plane):
        img = make_plane(32, 32)
        assert np.max(np.abs(idwt2(dwt2(img)).data - img.data)) < 1e-6

    def test_parseval(self, make_plane):
        img = make_plane(32, 32)
        assert dwt2(img).energy == pytest.approx(float(np.sum(img.data ** 2)), abs=1e-5)

    @pytest.mark.parametrize("height, width", [(7, 8), (8, 7), (9, 5), (1, 4), (1, 1)])
    def test_odd_sizes_are_padded_and_restored(self, make_plane, height, width):
        img = make_plane(height, width)
        s = dwt2(img)
        assert s.pad == (height % 2, width % 2)
        back = idwt2(s)
        assert back.shape == img.shape
        assert np.max(np.abs(back.data - img.data)) < 1e-9

    def test_rejects_invalid_pad_record(self):
        band = np.zeros((1, 1, 1))
        with pytest.raises(ShapeError):
            SubbandSet(band, band, band, band, pad=(2, 0))


class TestHaarKernel:
    def test_rejects_odd_tensor(self):
        with pytest.raises(ShapeError):
            haar_dwt(torch.zeros(1, 3, 5, 4))

    def test_rejects_empty_tensor(self):
        with pytest.raises(ShapeError):
            haar_dwt(torch.zeros(1, 3, 0, 4))

    def test_call_counter(self):
        reset_call_counts()
        haar_dwt(torch.zeros(1, 1, 4, 4))
        haar_dwt(torch.zeros(1, 1, 2, 2))
        assert call_count("dwt2") == 2
        reset_call_counts()
        assert call_count("dwt2") == 0
