import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import C1, naive_mse, naive_ssim, naive_window_ssim
from pixelveil.errors import InvalidInput, InvalidParameter
from pixelveil.image import Image
from pixelveil.metrics import SsimParams, mse, ssim_full, ssim_window

windows = arrays(np.float64, 9, elements=st.floats(0, 255, allow_nan=False))


def test_params_defaults():
    p = SsimParams()
    assert p.c1 == pytest.approx(6.5025) and p.c2 == pytest.approx(58.5225)
    with pytest.raises(InvalidParameter):
        SsimParams(window=10)
    with pytest.raises(InvalidParameter):
        SsimParams(window=1)


class TestSsimFull:
    def test_identity(self, rgb32, gray16):
        assert abs(ssim_full(rgb32, rgb32) - 1.0) <= 1e-12
        assert abs(ssim_full(gray16, gray16) - 1.0) <= 1e-12

    def test_constants(self):
        a = Image(np.full((16, 16), 100.0))
        b = Image(np.full((16, 16), 50.0))
        expected = (2 * 100 * 50 + C1) / (100**2 + 50**2 + C1)
        assert ssim_full(a, b) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.80010, abs=5e-6)

    def test_matches_naive(self, rng):
        for _ in range(3):
            a = rng.uniform(0, 255, (16, 16))
            b = np.clip(a + rng.normal(0, 30, a.shape), 0, 255)
            assert abs(ssim_full(Image(a), Image(b)) - naive_ssim(a, b)) <= 1e-9

    def test_rgb_averages_channels(self, rng):
        a = rng.uniform(0, 255, (14, 15, 3))
        b = rng.uniform(0, 255, (14, 15, 3))
        per = [ssim_full(Image(a[:, :, i]), Image(b[:, :, i])) for i in range(3)]
        assert ssim_full(Image(a), Image(b)) == pytest.approx(np.mean(per), abs=1e-12)

    def test_symmetric_and_bounded(self, rng):
        for _ in range(10):
            a = Image(rng.uniform(0, 255, (20, 20)))
            b = Image(rng.uniform(0, 255, (20, 20)))
            s = ssim_full(a, b)
            assert abs(s - ssim_full(b, a)) <= 1e-12
            assert -1 <= s <= 1

    def test_mismatch(self, gray16, rgb32):
        with pytest.raises(InvalidInput, match="differ"):
            ssim_full(gray16, rgb32)

    def test_too_small(self):
        with pytest.raises(InvalidInput):
            ssim_full(Image(np.zeros((5, 5))), Image(np.zeros((5, 5))))


class TestSsimWindow:
    def test_identity(self, rng):
        w = rng.uniform(0, 255, 9)
        assert ssim_window(w, w) == 1.0

    def test_constants(self):
        expected = (2 * 85 * 170 + C1) / (85**2 + 170**2 + C1)
        assert ssim_window(np.full(9, 85.0), np.full(9, 170.0)) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.800036, abs=1e-6)

    def test_anticorrelated_clamped(self):
        o = np.array([0, 255] * 4 + [0], dtype=float)
        c = 255 - o
        raw = naive_window_ssim(o, c)
        assert raw < 0
        assert ssim_window(o, c, clamp=False) == pytest.approx(raw, abs=1e-12)
        assert ssim_window(o, c) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(InvalidInput):
            ssim_window(np.zeros(9), np.zeros(4))

    @settings(max_examples=200, deadline=None)
    @given(windows, windows)
    def test_matches_direct_formula(self, o, c):
        assert ssim_window(o, c, clamp=False) == pytest.approx(naive_window_ssim(o, c), abs=1e-9)
        assert 0.0 <= ssim_window(o, c) <= 1.0

    @settings(max_examples=200, deadline=None)
    @given(windows, windows, windows)
    def test_sensitivity_bound(self, o1, o2, c):
        assert abs(ssim_window(o1, c) - ssim_window(o2, c)) <= 1.0


class TestMse:
    def test_identity_and_offset(self, rgb32):
        assert mse(rgb32, rgb32) == 0.0
        a = Image(np.full((8, 8), 50.0))
        b = Image(np.full((8, 8), 60.0))
        assert mse(a, b) == 100.0

    def test_naive(self, rng):
        a = rng.uniform(0, 255, (16, 16, 3))
        b = rng.uniform(0, 255, (16, 16, 3))
        assert abs(mse(Image(a), Image(b)) - naive_mse(a, b)) <= 1e-9

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (4, 5), elements=st.integers(0, 255)), arrays(np.float64, (4, 5), elements=st.integers(0, 255)))
    def test_nonnegative_zero_iff_equal(self, a, b):
        m = mse(Image(a), Image(b))
        assert m >= 0
        assert (m == 0) == np.array_equal(a, b)

    def test_mismatch(self, gray16, rgb32):
        with pytest.raises(InvalidInput):
            mse(gray16, rgb32)
