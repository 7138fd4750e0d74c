"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from blpcflow.synth import Texture, _value_noise


def noise_image(
    shape: tuple[int, int] = (64, 64),
    cell: int = 1,
    seed: int = 0,
    salt: int = 0,
    base: float = 128.0,
    amplitude: float = 60.0,
) -> np.ndarray:
    """Deterministic broadband test texture."""
    return _value_noise(Texture(base, amplitude, cell=cell, salt=salt), shape, seed, (0.0, 0.0))


def ramp_shift(image: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """Exact circular shift of ``image`` by (dx, dy) via a frequency-domain
    phase ramp; content moves by +dx (right) and +dy (down)."""
    h, w = image.shape
    ky = np.fft.fftfreq(h)[:, None]
    kx = np.fft.fftfreq(w)[None, :]
    ramp = np.exp(-2j * np.pi * (kx * dx + ky * dy))
    return np.fft.ifft2(np.fft.fft2(image) * ramp).real


def two_motion_composite(
    size: int = 64,
    fg_motion: tuple[int, int] = (-2, 3),
    bg_motion: tuple[int, int] = (1, 0),
    fg_base: float = 200.0,
    bg_base: float = 50.0,
    seed: int = 11,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Textured foreground square over a textured background, both moving.

    Returns (frame1, frame2, fg_mask) with the square covering the
    central half of the canvas in frame 1.
    """
    bg1 = noise_image((size, size), cell=2, seed=seed, salt=0, base=bg_base, amplitude=25.0)
    bg2 = np.roll(bg1, (bg_motion[1], bg_motion[0]), axis=(0, 1))
    fg1 = noise_image((size, size), cell=2, seed=seed, salt=1, base=fg_base, amplitude=25.0)
    fg2 = np.roll(fg1, (fg_motion[1], fg_motion[0]), axis=(0, 1))
    q = size // 4
    mask1 = np.zeros((size, size), dtype=bool)
    mask1[q : size - q, q : size - q] = True
    mask2 = np.roll(mask1, (fg_motion[1], fg_motion[0]), axis=(0, 1))
    frame1 = np.where(mask1, fg1, bg1)
    frame2 = np.where(mask2, fg2, bg2)
    return frame1, frame2, mask1


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
