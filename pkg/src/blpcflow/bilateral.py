"""Gaussian kernels and the asymmetric bilateral prefilter.

The prefilter carries the intensity context of a small frame-1
neighbourhood onto both frames before correlation: a set of anchor
intensities is read from the m x m patch around the frame-1 window
center, each anchor defines one shiftable "slice" (a range-weighted
image that can be filtered by plain convolution), and the slices are
recombined by range-weighted blending, scaled by a soft retention
confidence (the mean anchor match, saturating near 1). Pixels whose
intensity matches no anchor are driven toward zero, so only the region
that shares the center pixel's appearance survives into the
correlation. The confidence scaling is graded rather than a hard
keep/zero decision, for two reasons: a hard mask lets weakly matching
pixels through at full anchor value (the whitened correlation then
locks onto that leaked speckle instead of the retained region), and
the blending alone flattens the retained region to a near-constant
value, while the graded confidence re-injects intensity-dependent
contrast that the correlation can lock onto.

All window-domain convolutions are circular (wrap), matching the DFT
model, and use the torus-distance Gaussian of the window grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import as_image
from .errors import ConfigError, DimensionError

# A slice (or the combined output) is suppressed where its accumulated
# range weight falls below this fraction of a perfect anchor match.
DIVISION_FLOOR = 1e-5

# The retention confidence (mean anchor range-weight) saturates to
# exactly 1 above this value, so a perfect match passes the blended
# value through unchanged (keeps the large-sigma_r degenerate case an
# exact Gaussian convolution) while any realistic partial match stays
# on the proportional part of the curve.
CONFIDENCE_SATURATION = 0.98


@dataclass(frozen=True)
class BilateralParams:
    """Configuration of the asymmetric filter.

    ``sigma_s1`` must be much tighter than ``sigma_s2``: frame 1 keeps
    only the immediate surroundings of the window center while frame 2
    retains matching evidence over the whole search range.
    """

    sigma_s1: float
    sigma_s2: float
    sigma_r: float = 30.0
    slice_m: int = 3

    def __post_init__(self):
        if self.sigma_s1 <= 0 or self.sigma_s2 <= 0:
            raise ConfigError("spatial sigmas must be positive")
        if self.sigma_s1 >= self.sigma_s2:
            raise ConfigError(
                f"sigma_s1 ({self.sigma_s1}) must be smaller than "
                f"sigma_s2 ({self.sigma_s2})"
            )
        if self.sigma_r <= 0:
            raise ConfigError("sigma_r must be positive")
        if self.slice_m < 1 or self.slice_m % 2 == 0:
            raise ConfigError(f"slice_m must be odd and >= 1, got {self.slice_m}")

    @classmethod
    def for_window(cls, m_w: int, sigma_r: float = 30.0, slice_m: int = 3) -> "BilateralParams":
        """Defaults scaled to the correlation window size."""
        return cls(sigma_s1=m_w / 8.0, sigma_s2=m_w / 2.0, sigma_r=sigma_r, slice_m=slice_m)


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    """(2r+1)^2 grid of (1 / 2 pi sigma^2) exp(-d^2 / 2 sigma^2)."""
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    if radius < int(np.ceil(3 * sigma)):
        raise ConfigError(f"radius {radius} < 3 sigma = {3 * sigma:.2f}")
    d = np.arange(-radius, radius + 1, dtype=np.float64)
    sq = d[:, None] ** 2 + d[None, :] ** 2
    return np.exp(-sq / (2.0 * sigma * sigma)) / (2.0 * np.pi * sigma * sigma)


@lru_cache(maxsize=64)
def _torus_gaussian(sigma: float, h: int, w: int) -> np.ndarray:
    """Gaussian on the (h, w) torus, origin at index (0, 0), FFT-ready."""
    dy = np.minimum(np.arange(h), h - np.arange(h)).astype(np.float64)
    dx = np.minimum(np.arange(w), w - np.arange(w)).astype(np.float64)
    sq = dy[:, None] ** 2 + dx[None, :] ** 2
    return np.exp(-sq / (2.0 * sigma * sigma)) / (2.0 * np.pi * sigma * sigma)


@lru_cache(maxsize=64)
def _torus_gaussian_rfft(sigma: float, h: int, w: int) -> np.ndarray:
    return np.fft.rfft2(_torus_gaussian(sigma, h, w))


def _range_weight(diff: np.ndarray, sigma_r: float) -> np.ndarray:
    # Peak-1 form: the Gaussian prefactor cancels in every ratio the
    # filter takes, and keeping it would make the division floor depend
    # on sigma_r.
    return np.exp(-(diff * diff) / (2.0 * sigma_r * sigma_r))


def _wrap_convolve(image: np.ndarray, kernel_rfft: np.ndarray) -> np.ndarray:
    return np.fft.irfft2(np.fft.rfft2(image) * kernel_rfft, s=image.shape)


def reference_bilateral(window: np.ndarray, params: BilateralParams) -> np.ndarray:
    """Exact brute-force bilateral filter, circular spatial weights.

    The oracle the slice approximation is validated against; it uses
    ``sigma_s1`` and ``sigma_r`` and visits every pixel pair.
    """
    img = as_image(window)
    h, w = img.shape
    if h == 0 or w == 0:
        raise DimensionError("empty window")
    kernel = _torus_gaussian(params.sigma_s1, h, w)
    num = np.zeros_like(img)
    den = np.zeros_like(img)
    for dy in range(h):
        for dx in range(w):
            neighbour = np.roll(img, (-dy, -dx), axis=(0, 1))
            wgt = kernel[dy, dx] * _range_weight(img - neighbour, params.sigma_r)
            num += wgt * neighbour
            den += wgt
    return num / den


def anchor_intensities(window1: np.ndarray, slice_m: int) -> np.ndarray:
    """The fixed-intensity set: the m x m patch around the window center.

    Duplicate values are retained; wrap indexing covers windows smaller
    than the patch.
    """
    img = as_image(window1)
    h, w = img.shape
    half = slice_m // 2
    cy, cx = h // 2, w // 2
    ys = (np.arange(cy - half, cy + half + 1)) % h
    xs = (np.arange(cx - half, cx + half + 1)) % w
    return img[np.ix_(ys, xs)].ravel()


def _filter_one_frame(
    image: np.ndarray, anchors: np.ndarray, sigma_s: float, sigma_r: float
) -> np.ndarray:
    h, w = image.shape
    kf = _torus_gaussian_rfft(sigma_s, h, w)
    kernel_sum = float(np.sum(_torus_gaussian(sigma_s, h, w)))
    floor = DIVISION_FLOOR * kernel_sum
    out_num = np.zeros_like(image)
    out_den = np.zeros_like(image)
    for a in anchors:
        wr = _range_weight(image - a, sigma_r)
        num = _wrap_convolve(wr * image, kf)
        den = _wrap_convolve(wr, kf)
        slice_k = np.where(den < floor, 0.0, num / np.where(den < floor, 1.0, den))
        out_num += wr * slice_k
        out_den += wr
    n = len(anchors)
    total_floor = DIVISION_FLOOR * n
    blend = np.where(
        out_den < total_floor, 0.0, out_num / np.where(out_den < total_floor, 1.0, out_den)
    )
    # Soft retention confidence: the mean anchor match attenuates weak
    # matches proportionally instead of keeping them at full anchor
    # value, and doubles as an intensity-dependent modulation that
    # preserves texture contrast inside the retained region.
    return blend * np.minimum(1.0, out_den / (CONFIDENCE_SATURATION * n))


def bilateral_slice_filter(
    image: np.ndarray, anchors: np.ndarray, sigma_s: float, sigma_r: float
) -> np.ndarray:
    """Anchor-sliced bilateral filter of one frame (see module docstring)."""
    return _filter_one_frame(as_image(image), np.asarray(anchors, dtype=np.float64), sigma_s, sigma_r)


def slice_output(
    image: np.ndarray, anchor: float, sigma_s: float, sigma_r: float
) -> np.ndarray:
    """A single slice of the filter: equals the exact bilateral output at
    every pixel whose intensity equals the anchor."""
    img = as_image(image)
    h, w = img.shape
    kf = _torus_gaussian_rfft(sigma_s, h, w)
    kernel_sum = float(np.sum(_torus_gaussian(sigma_s, h, w)))
    floor = DIVISION_FLOOR * kernel_sum
    wr = _range_weight(img - anchor, sigma_r)
    num = _wrap_convolve(wr * img, kf)
    den = _wrap_convolve(wr, kf)
    return np.where(den < floor, 0.0, num / np.where(den < floor, 1.0, den))


def asymmetric_bilateral_pair(
    window1: np.ndarray, frame2_region: np.ndarray, params: BilateralParams
) -> tuple[np.ndarray, np.ndarray]:
    """Filter both frames with anchors drawn from frame 1's center patch.

    Frame 1 is filtered with the tight ``sigma_s1``, frame 2 with the
    wide ``sigma_s2``; both share the anchor set and ``sigma_r``.
    """
    w1 = as_image(window1)
    r2 = as_image(frame2_region)
    if w1.shape != r2.shape:
        raise DimensionError(f"shape mismatch {w1.shape} vs {r2.shape}")
    anchors = anchor_intensities(w1, params.slice_m)
    out1 = _filter_one_frame(w1, anchors, params.sigma_s1, params.sigma_r)
    out2 = _filter_one_frame(r2, anchors, params.sigma_s2, params.sigma_r)
    return out1, out2
