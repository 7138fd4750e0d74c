"""Windowed motion estimators: plain PC, bilateral-prefiltered PC, and
the ratio-triggered combination of the two.

The multi-motion trigger: the peak ratio P1/P2 is >= 1 by construction
and approaches 1 when a second motion puts a comparable peak on the
surface. The bilateral fallback therefore fires when the ratio falls
BELOW the threshold T_r (a clean single-peak surface has a large ratio
and keeps the plain PC estimate). T_r defaults to 1 + 1/log2(m_w).

``dense_flow`` runs the same estimators at every pixel in batched form
(row-at-a-time FFTs); it exists for the dense benchmark protocol and
for ratio-map rendering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import bilateral as bl
from .bilateral import BilateralParams
from .core import FlowField, FlowVector, as_image, extract_window, is_power_of_two
from .errors import ConfigError
from .spectral import (
    PEAK_FLOOR,
    SPECTRAL_FLOOR_REL,
    find_top_two_peaks,
    peak_ratio,
    phase_correlation_surface,
    subpixel_refine,
)

# Filtered windows whose dynamic range drops below this are treated as
# fully suppressed and fall back to the plain PC estimate.
MIN_FILTERED_ENERGY = 1e-6


class Method(Enum):
    PC = "pc"
    BLPC = "blpc"
    LK = "lk"


@dataclass(frozen=True)
class PointEstimate:
    location: tuple[int, int]  # (x, y)
    flow: FlowVector
    ratio: float | None  # None = single-peak sentinel
    method: Method
    peak_value: float
    degraded: bool = False


def default_ratio_threshold(m_w: int) -> float:
    """T_r grows toward 1 with the window size's logarithm."""
    return 1.0 + 1.0 / math.log2(m_w)


def _clamp_flow(v: FlowVector, m_w: int) -> FlowVector:
    half = m_w / 2.0
    return FlowVector(
        min(max(v.dx, -half), half), min(max(v.dy, -half), half)
    )


def _check_window_size(m_w: int) -> None:
    if not is_power_of_two(m_w) or m_w < 8:
        raise ConfigError(f"window size must be a power of two >= 8, got {m_w}")


def window_estimate(
    w1: np.ndarray,
    w2: np.ndarray,
    location: tuple[int, int],
    method: str = "auto",
    params: BilateralParams | None = None,
    ratio_threshold: float | None = None,
) -> PointEstimate:
    """Estimate the shift between two already-extracted square windows.

    ``method`` is ``pc`` (plain correlation), ``blpc`` (always apply the
    bilateral prefilter) or ``auto`` (apply it only when the peak ratio
    falls below the threshold). If filtering suppresses essentially
    everything, the plain PC result is returned with a
    degraded-confidence flag.
    """
    m_w = w1.shape[0]
    surface = phase_correlation_surface(w1, w2)
    flow = _clamp_flow(subpixel_refine(surface), m_w)
    base = PointEstimate(
        location=(int(location[0]), int(location[1])),
        flow=flow,
        ratio=peak_ratio(surface),
        method=Method.PC,
        peak_value=surface.peak1.value,
    )
    if method == "pc":
        return base
    if method == "auto":
        t_r = (
            ratio_threshold
            if ratio_threshold is not None
            else default_ratio_threshold(m_w)
        )
        if base.ratio is None or base.ratio >= t_r:
            return base
    if params is None:
        params = BilateralParams.for_window(m_w)
    f1, f2 = bl.asymmetric_bilateral_pair(w1, w2, params)
    if np.ptp(f1) < MIN_FILTERED_ENERGY or np.ptp(f2) < MIN_FILTERED_ENERGY:
        return replace(base, degraded=True)
    surface = phase_correlation_surface(f1, f2)
    flow = _clamp_flow(subpixel_refine(surface), m_w)
    return PointEstimate(
        location=(int(location[0]), int(location[1])),
        flow=flow,
        ratio=peak_ratio(surface),
        method=Method.BLPC,
        peak_value=surface.peak1.value,
    )


def pc_estimate(
    frame1: np.ndarray, frame2: np.ndarray, center: tuple[int, int], m_w: int
) -> PointEstimate:
    """Classical phase correlation on co-sited wrap-padded windows."""
    _check_window_size(m_w)
    w1 = extract_window(frame1, center, m_w).pixels
    w2 = extract_window(frame2, center, m_w).pixels
    return window_estimate(w1, w2, center, method="pc")


def blpc_estimate(
    frame1: np.ndarray,
    frame2: np.ndarray,
    center: tuple[int, int],
    m_w: int,
    params: BilateralParams | None = None,
) -> PointEstimate:
    """PC on the bilateral-prefiltered window pair.

    The anchors come from the frame-1 window center, so the estimate
    tracks the motion of the region sharing that pixel's intensity
    context. If filtering suppresses essentially everything, the plain
    PC result is returned with a degraded-confidence flag.
    """
    _check_window_size(m_w)
    w1 = extract_window(frame1, center, m_w).pixels
    w2 = extract_window(frame2, center, m_w).pixels
    return window_estimate(w1, w2, center, method="blpc", params=params)


def estimate_at(
    frame1: np.ndarray,
    frame2: np.ndarray,
    center: tuple[int, int],
    m_w: int,
    params: BilateralParams | None = None,
    ratio_threshold: float | None = None,
) -> PointEstimate:
    """Run PC first, switch to BLPC when the ratio test flags multiple
    motions (ratio below the threshold; the sentinel never triggers)."""
    _check_window_size(m_w)
    w1 = extract_window(frame1, center, m_w).pixels
    w2 = extract_window(frame2, center, m_w).pixels
    return window_estimate(
        w1, w2, center, method="auto", params=params, ratio_threshold=ratio_threshold
    )


# ---------------------------------------------------------------------------
# Dense (per-pixel) batched path


def _batched_pc(
    w1: np.ndarray, w2: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """PC surfaces + subpixel flow for a (B, m, m) batch of window pairs.

    Returns (dx, dy, peak1, ratio) arrays of length B; the ratio uses
    +inf where the second peak is absent (array form of the sentinel).
    """
    b, m, _ = w1.shape
    f1 = np.fft.fft2(w1)
    f2 = np.fft.fft2(w2)
    cross = f2 * np.conj(f1)
    mag = np.abs(f2) * np.abs(f1)
    floor = np.maximum(
        SPECTRAL_FLOOR_REL * mag.mean(axis=(1, 2), keepdims=True), 1e-300
    )
    low = mag < floor
    surf = np.fft.ifft2(np.where(low, 0.0, cross / np.where(low, 1.0, mag))).real

    flat = surf.reshape(b, -1)
    i1 = np.argmax(flat, axis=1)
    y1, x1 = np.divmod(i1, m)
    p1 = flat[np.arange(b), i1]

    masked = flat.copy()
    off = np.array([-1, 0, 1])
    for oy in off:
        for ox in off:
            masked[np.arange(b), ((y1 + oy) % m) * m + (x1 + ox) % m] = -np.inf
    p2 = np.max(masked, axis=1)
    ratio = np.where(p2 > PEAK_FLOOR, p1 / np.maximum(p2, PEAK_FLOOR), np.inf)

    idx = np.arange(b)

    def c(k: int, l: int) -> np.ndarray:
        # negative samples floored at zero, as in subpixel_refine
        return np.maximum(surf[idx, (y1 + l) % m, (x1 + k) % m], 0.0)

    c00 = c(0, 0)
    dxn = c(1, 0) - c(-1, 0)
    dyn = c(0, 1) - c(0, -1)
    with np.errstate(invalid="ignore", divide="ignore"):
        fx = np.where(c00 + np.abs(dxn) > 0, dxn / (c00 + np.abs(dxn)), 0.0)
        fy = np.where(c00 + np.abs(dyn) > 0, dyn / (c00 + np.abs(dyn)), 0.0)
    half = m // 2
    sx = np.where(x1 >= half, x1 - m, x1) + fx
    sy = np.where(y1 >= half, y1 - m, y1) + fy
    return (
        np.clip(sx, -m / 2.0, m / 2.0),
        np.clip(sy, -m / 2.0, m / 2.0),
        p1,
        ratio,
    )


def _batched_bilateral(
    wins: np.ndarray, anchors: np.ndarray, sigma_s: float, sigma_r: float
) -> np.ndarray:
    """Anchor-sliced bilateral filter of a (B, m, m) window batch with
    per-window anchor rows (B, n)."""
    b, m, _ = wins.shape
    kf = bl._torus_gaussian_rfft(sigma_s, m, m)
    kernel_sum = float(np.sum(bl._torus_gaussian(sigma_s, m, m)))
    floor = bl.DIVISION_FLOOR * kernel_sum
    inv2s2 = 1.0 / (2.0 * sigma_r * sigma_r)
    out_num = np.zeros_like(wins)
    out_den = np.zeros_like(wins)
    for k in range(anchors.shape[1]):
        a = anchors[:, k][:, None, None]
        wr = np.exp(-((wins - a) ** 2) * inv2s2)
        num = np.fft.irfft2(np.fft.rfft2(wr * wins) * kf, s=(m, m))
        den = np.fft.irfft2(np.fft.rfft2(wr) * kf, s=(m, m))
        low = den < floor
        out_num += wr * np.where(low, 0.0, num / np.where(low, 1.0, den))
        out_den += wr
    n = anchors.shape[1]
    total_floor = bl.DIVISION_FLOOR * n
    low = out_den < total_floor
    blend = np.where(low, 0.0, out_num / np.where(low, 1.0, out_den))
    return blend * np.minimum(1.0, out_den / (bl.CONFIDENCE_SATURATION * n))


def dense_flow(
    frame1: np.ndarray,
    frame2: np.ndarray,
    method: str = "pc",
    m_w: int = 32,
    params: BilateralParams | None = None,
    ratio_threshold: float | None = None,
    with_ratio_map: bool = False,
) -> FlowField | tuple[FlowField, np.ndarray]:
    """Per-pixel windowed estimation over the whole frame.

    ``method`` is ``pc`` (plain correlation everywhere), ``blpc``
    (bilateral prefilter everywhere) or ``auto`` (ratio-triggered).
    With ``with_ratio_map`` the per-pixel peak ratio of the method's
    surface is returned as a float array (+inf marks single peaks).
    """
    f1 = as_image(frame1)
    f2 = as_image(frame2)
    if f1.shape != f2.shape:
        raise ConfigError(f"frame shapes differ: {f1.shape} vs {f2.shape}")
    _check_window_size(m_w)
    if params is None:
        params = BilateralParams.for_window(m_w)
    t_r = ratio_threshold if ratio_threshold is not None else default_ratio_threshold(m_w)
    h, w = f1.shape
    half = m_w // 2
    p1 = np.pad(f1, half, mode="wrap")
    p2 = np.pad(f2, half, mode="wrap")
    sw1 = np.lib.stride_tricks.sliding_window_view(p1, (m_w, m_w))
    sw2 = np.lib.stride_tricks.sliding_window_view(p2, (m_w, m_w))
    sm = params.slice_m
    shalf = sm // 2
    ax = np.lib.stride_tricks.sliding_window_view(
        np.pad(f1, shalf, mode="wrap"), (sm, sm)
    )

    u = np.empty((h, w))
    v = np.empty((h, w))
    rmap = np.empty((h, w)) if with_ratio_map else None
    for y in range(h):
        w1 = np.ascontiguousarray(sw1[y, :w], dtype=np.float64)
        w2 = np.ascontiguousarray(sw2[y, :w], dtype=np.float64)
        dx, dy, _, ratio = _batched_pc(w1, w2)
        if method != "pc":
            if method == "blpc":
                sel = np.arange(w)
            else:  # auto
                sel = np.nonzero(ratio < t_r)[0]
            if sel.size:
                anchors = ax[y, sel].reshape(sel.size, -1)
                b1 = _batched_bilateral(w1[sel], anchors, params.sigma_s1, params.sigma_r)
                b2 = _batched_bilateral(w2[sel], anchors, params.sigma_s2, params.sigma_r)
                bdx, bdy, _, bratio = _batched_pc(b1, b2)
                # near-zero filtered energy keeps the PC estimate
                ok = (np.ptp(b1, axis=(1, 2)) >= MIN_FILTERED_ENERGY) & (
                    np.ptp(b2, axis=(1, 2)) >= MIN_FILTERED_ENERGY
                )
                tgt = sel[ok]
                dx[tgt] = bdx[ok]
                dy[tgt] = bdy[ok]
                ratio[tgt] = bratio[ok]
        u[y] = dx
        v[y] = dy
        if rmap is not None:
            rmap[y] = ratio
    field = FlowField(u, v)
    if with_ratio_map:
        return field, rmap
    return field
