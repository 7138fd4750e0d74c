"""Shared raster types and deterministic pixel primitives.

Conventions used throughout the package:

* images are 2-D ``float64`` arrays indexed ``[y, x]`` with x growing
  rightward and y downward, origin at the top-left;
* intensities live in the nominal range [0, 255];
* flow is anchored on frame 1: a flow vector (dx, dy) at pixel p means
  the content at p in frame 1 appears at p + (dx, dy) in frame 2, so
  backward warping reads ``frame2(x + dx, y + dy)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DimensionError

# Rec. 601 luma weights used for every RGB -> gray conversion.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class FlowVector(NamedTuple):
    """Per-pixel displacement in pixels, frame-1 anchored."""

    dx: float
    dy: float


def as_image(data) -> np.ndarray:
    """Validate and normalize an image to a 2-D float64 array."""
    a = np.asarray(data, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"image must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionError("image contains non-finite values")
    return a


def rgb_to_luma(rgb) -> np.ndarray:
    """Rec. 601 luma of an (H, W, 3) array, kept as float."""
    a = np.asarray(rgb, dtype=np.float64)
    if a.ndim != 3 or a.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) RGB array, got {a.shape}")
    w = np.asarray(LUMA_WEIGHTS)
    return a @ w


@dataclass
class FlowField:
    """Dense per-pixel flow with a validity mask.

    ``u`` holds dx (horizontal) and ``v`` holds dy (vertical), both
    (H, W) float64; ``valid`` is an (H, W) bool mask.
    """

    u: np.ndarray
    v: np.ndarray
    valid: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.u.shape != self.v.shape or self.u.ndim != 2:
            raise DimensionError(
                f"flow components disagree: {self.u.shape} vs {self.v.shape}"
            )
        if self.valid is None:
            self.valid = np.ones(self.u.shape, dtype=bool)
        else:
            self.valid = np.asarray(self.valid, dtype=bool)
            if self.valid.shape != self.u.shape:
                raise DimensionError("validity mask shape mismatch")
        bad = ~np.isfinite(self.u) | ~np.isfinite(self.v)
        if np.any(bad & self.valid):
            raise DimensionError("non-finite flow at a valid pixel")

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    @classmethod
    def zeros(cls, height: int, width: int) -> "FlowField":
        z = np.zeros((height, width))
        return cls(z, z.copy())


@dataclass(frozen=True)
class Window:
    """A wrap-padded square block extracted around a pixel."""

    center: tuple[int, int]  # (x, y) in the parent image
    size: int
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.pixels.shape != (self.size, self.size):
            raise DimensionError(
                f"window pixels {self.pixels.shape} != size {self.size}"
            )


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def extract_window(image: np.ndarray, center: tuple[int, int], size: int) -> Window:
    """Extract the ``size x size`` block centered at ``center`` (x, y).

    Out-of-bounds coordinates wrap modulo the image dimensions, matching
    the circular-shift model of the DFT. The block's top-left corner sits
    at ``center - size // 2``.
    """
    img = as_image(image)
    h, w = img.shape
    if not is_power_of_two(size):
        raise ConfigError(f"window size must be a power of two, got {size}")
    if size > min(w, h):
        raise DimensionError(f"window size {size} exceeds image {w}x{h}")
    cx, cy = int(center[0]), int(center[1])
    half = size // 2
    ys = (np.arange(cy - half, cy - half + size)) % h
    xs = (np.arange(cx - half, cx - half + size)) % w
    return Window(center=(cx, cy), size=size, pixels=img[np.ix_(ys, xs)])


def bilinear_sample(image: np.ndarray, x: float, y: float) -> float:
    """Bilinear blend of the 4 neighbours; coordinates clamp at borders."""
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    x = min(max(float(x), 0.0), w - 1.0)
    y = min(max(float(y), 0.0), h - 1.0)
    x0 = int(np.floor(x))
    y0 = int(np.floor(y))
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return float(top * (1 - fy) + bot * fy)
