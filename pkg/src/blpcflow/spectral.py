"""2-D DFT machinery, phase correlation and subpixel peak refinement.

The correlation surface is the real part of the inverse DFT of the
unit-magnitude-normalized cross-power spectrum. For an exact circular
integer shift it is a delta of height 1 at the shift.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import FlowVector, as_image
from .errors import DegenerateInputError, DimensionError

# Bins whose spectral magnitude product falls below this fraction of the
# mean are zeroed instead of divided.
SPECTRAL_FLOOR_REL = 1e-12

# Below this surface value a second peak is considered absent.
PEAK_FLOOR = 1e-9


class Peak(NamedTuple):
    x: int
    y: int
    value: float


@dataclass(frozen=True)
class CorrelationSurface:
    """Phase-correlation surface with its two strongest separated peaks.

    ``peak2`` is the largest value outside a 3x3 wrap-aware exclusion
    neighbourhood of ``peak1``, so subpixel lobes of the main peak are
    not mistaken for a second motion.
    """

    data: np.ndarray
    peak1: Peak
    peak2: Peak

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def forward_dft(image: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2-D DFT of a real image."""
    img = as_image(image)
    h, w = img.shape
    if h < 2 or w < 2:
        raise DimensionError(f"DFT needs at least 2x2, got {w}x{h}")
    return np.fft.fft2(img)


def inverse_dft(spectrum: np.ndarray) -> np.ndarray:
    """Inverse 2-D DFT; returns the complex result."""
    s = np.asarray(spectrum, dtype=np.complex128)
    if s.ndim != 2 or min(s.shape) < 2:
        raise DimensionError(f"bad spectrum shape {s.shape}")
    return np.fft.ifft2(s)


def find_top_two_peaks(surface: np.ndarray) -> tuple[Peak, Peak]:
    """Global maximum, then the maximum outside its 3x3 neighbourhood."""
    h, w = surface.shape
    i1 = int(np.argmax(surface))
    y1, x1 = divmod(i1, w)
    p1 = Peak(x1, y1, float(surface[y1, x1]))
    masked = surface.copy()
    ys = (np.arange(y1 - 1, y1 + 2)) % h
    xs = (np.arange(x1 - 1, x1 + 2)) % w
    masked[np.ix_(ys, xs)] = -np.inf
    i2 = int(np.argmax(masked))
    y2, x2 = divmod(i2, w)
    p2 = Peak(x2, y2, float(surface[y2, x2]))
    return p1, p2


def phase_correlation_surface(a: np.ndarray, b: np.ndarray) -> CorrelationSurface:
    """Correlate two co-sited images of identical dimensions.

    The peak location is the circular shift taking ``a`` to ``b``
    (``b = roll(a, shift)`` puts the peak at ``shift``).
    """
    a = as_image(a)
    b = as_image(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    if not np.any(a) or not np.any(b):
        raise DegenerateInputError("phase correlation of an all-zero image")
    fa = np.fft.fft2(a)
    fb = np.fft.fft2(b)
    cross = fb * np.conj(fa)
    mag = np.abs(fb) * np.abs(fa)
    floor = SPECTRAL_FLOOR_REL * float(np.mean(mag))
    norm = np.where(mag < floor, 0.0, cross / np.where(mag < floor, 1.0, mag))
    surface = np.fft.ifft2(norm).real
    p1, p2 = find_top_two_peaks(surface)
    return CorrelationSurface(data=surface, peak1=p1, peak2=p2)


def peak_ratio(surface: CorrelationSurface, floor: float = PEAK_FLOOR) -> float | None:
    """Highest over second-highest peak, or None when only one peak exists.

    ``None`` is the single-peak sentinel: the second peak sits at or below
    the numeric floor, so the ratio is +inf in spirit but never reported
    as a float infinity.
    """
    p2 = surface.peak2.value
    if p2 <= floor:
        return None
    return surface.peak1.value / p2


def unwrap_shift(index: int, n: int) -> int:
    """Map a DFT bin index to a signed shift in [-n/2, n/2)."""
    return index - n if index >= n // 2 + n % 2 else index


def subpixel_refine(surface: CorrelationSurface) -> FlowVector:
    """Refine the integer peak with the three-point ratio estimator.

    The fractional offset along each axis is D / (C(0,0) + |D|) with
    D the difference of the two surface values adjacent to the peak,
    read with wrap indexing; it always lies strictly inside (-1, 1).
    Negative surface samples are floored at zero: a negative correlation
    carries no peak mass, and the side lobe adjacent to the main peak of
    an ideal single-shift surface is negative — flooring it makes the
    estimator exact on such surfaces instead of biased by ~0.09 px.
    """
    data = surface.data
    h, w = data.shape
    x0, y0, _ = surface.peak1

    def c(k: int, l: int) -> float:
        return max(float(data[(y0 + l) % h, (x0 + k) % w]), 0.0)

    c00 = c(0, 0)
    dx_num = c(1, 0) - c(-1, 0)
    dy_num = c(0, 1) - c(0, -1)
    fx = dx_num / (c00 + abs(dx_num)) if c00 + abs(dx_num) > 0 else 0.0
    fy = dy_num / (c00 + abs(dy_num)) if c00 + abs(dy_num) > 0 else 0.0
    return FlowVector(unwrap_shift(x0, w) + fx, unwrap_shift(y0, h) + fy)
