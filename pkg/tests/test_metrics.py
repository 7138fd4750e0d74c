"""Prediction-error and flow-error measures against brute-force loops."""

import math

import numpy as np
import pytest

from blpcflow.core import FlowField
from blpcflow.errors import DimensionError
from blpcflow.metrics import (
    DEFAULT_NRMS_EPSILON,
    PSNR_EXACT,
    angular_error,
    endpoint_error,
    motion_compensate,
    mse,
    nrms,
    psnr,
)
from conftest import noise_image


def const_field(shape, u, v, valid=None):
    return FlowField(np.full(shape, float(u)), np.full(shape, float(v)), valid)


class TestMotionCompensate:
    def test_integer_flow_matches_roll_in_interior(self):
        f2 = noise_image((32, 32), cell=1, seed=40)
        comp = motion_compensate(f2, const_field((32, 32), 3.0, -2.0))
        rolled = np.roll(f2, (2, -3), axis=(0, 1))
        assert np.allclose(comp[4:-4, 4:-4], rolled[4:-4, 4:-4])

    def test_zero_flow_identity(self):
        f2 = noise_image((16, 16), cell=1, seed=41)
        assert np.allclose(motion_compensate(f2, const_field((16, 16), 0, 0)), f2)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            motion_compensate(np.zeros((8, 8)), const_field((8, 9), 0, 0))


class TestMse:
    def test_identity_is_zero(self):
        img = noise_image((16, 16), cell=1, seed=42)
        assert mse(img, img) == 0.0

    def test_matches_loop(self, rng):
        a = rng.uniform(0, 255, size=(5, 7))
        b = rng.uniform(0, 255, size=(5, 7))
        expected = sum(
            (a[y, x] - b[y, x]) ** 2 for y in range(5) for x in range(7)
        ) / 35.0
        assert mse(a, b) == pytest.approx(expected, rel=1e-12)

    def test_color_uses_l2_norm(self):
        a = np.zeros((1, 1, 3))
        b = np.array([[[1.0, 2.0, 2.0]]])
        assert mse(a, b) == pytest.approx(9.0)


class TestPsnr:
    def test_exact_compensation_marker(self):
        img = np.full((4, 4), 7.0)
        assert psnr(img, img) is PSNR_EXACT
        assert math.isinf(psnr(img, img))

    def test_data_range_formula(self):
        a = np.zeros((4, 4))
        b = np.full((4, 4), 16.0)  # mse 256
        assert psnr(a, b) == pytest.approx(10 * math.log10(255.0**2 / 256.0))

    def test_per_image_max(self):
        a = np.full((4, 4), 100.0)
        b = np.full((4, 4), 110.0)  # mse 100
        assert psnr(a, b, per_image_max=True) == pytest.approx(
            10 * math.log10(100.0**2 / 100.0)
        )


class TestNrms:
    def test_default_epsilon_is_one(self):
        assert DEFAULT_NRMS_EPSILON == 1.0

    def test_matches_brute_force_loop(self, rng):
        comp = rng.uniform(0, 255, size=(6, 6))
        truth = rng.uniform(0, 255, size=(6, 6))
        eps = DEFAULT_NRMS_EPSILON
        h, w = truth.shape
        acc = 0.0
        for y in range(h):
            for x in range(w):
                # replicated central differences at the borders
                gx = 0.5 * (
                    truth[y, min(x + 1, w - 1)] - truth[y, max(x - 1, 0)]
                )
                gy = 0.5 * (
                    truth[min(y + 1, h - 1), x] - truth[max(y - 1, 0), x]
                )
                acc += (comp[y, x] - truth[y, x]) ** 2 / (gx * gx + gy * gy + eps)
        expected = math.sqrt(acc / (h * w))
        assert nrms(comp, truth) == pytest.approx(expected, abs=1e-9)

    def test_identity_is_zero(self):
        img = noise_image((8, 8), cell=1, seed=43)
        assert nrms(img, img) == 0.0


class TestAngularError:
    def test_identical_flow_zero(self):
        f = const_field((8, 8), 2.0, -1.0)
        amap, mean, n = angular_error(f, f)
        assert mean == pytest.approx(0.0, abs=1e-12)
        assert n == 64
        assert np.allclose(amap, 0.0, atol=1e-9)

    def test_unit_axes_sixty_degrees(self):
        # (1, 0, 1) vs (0, 1, 1): cos = 1/2 -> exactly 60 degrees
        a = const_field((4, 4), 1.0, 0.0)
        b = const_field((4, 4), 0.0, 1.0)
        _, mean, _ = angular_error(a, b)
        assert abs(mean - 60.0) <= 1e-9

    def test_invalid_pixels_excluded(self):
        valid = np.ones((4, 4), dtype=bool)
        valid[0, 0] = False
        a = const_field((4, 4), 1.0, 0.0, valid)
        b = const_field((4, 4), 1.0, 0.0)
        amap, _, n = angular_error(a, b)
        assert n == 15
        assert np.isnan(amap[0, 0])


class TestEndpointError:
    def test_identity_zero(self):
        f = const_field((8, 8), 1.0, 1.0)
        _, mean, n = endpoint_error(f, f)
        assert mean == 0.0 and n == 64

    def test_euclidean_distance(self):
        a = const_field((4, 4), 3.0, 0.0)
        b = const_field((4, 4), 0.0, 4.0)
        emap, mean, _ = endpoint_error(a, b)
        assert mean == pytest.approx(5.0)
        assert np.allclose(emap, 5.0)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            endpoint_error(const_field((4, 4), 0, 0), const_field((4, 5), 0, 0))
