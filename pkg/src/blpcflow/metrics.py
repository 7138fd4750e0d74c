"""Evaluation measures: motion-compensated prediction error and flow
error statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .core import FlowField, as_image
from .errors import DimensionError

DEFAULT_NRMS_EPSILON = 1.0
DATA_RANGE_MAX = 255.0

# Distinguished marker for a zero-MSE (exact) compensation.
PSNR_EXACT = math.inf


@dataclass(frozen=True)
class EvalReport:
    method_name: str
    mse: float | None = None
    psnr: float | None = None
    nrms: float | None = None
    ae: float | None = None      # mean degrees
    aef: float | None = None     # mean pixels
    runtime: float | None = None
    n_valid: int | None = None


def motion_compensate(frame2: np.ndarray, flow: FlowField) -> np.ndarray:
    """Backward bilinear warp of frame 2 by the flow onto frame 1's grid."""
    f2 = as_image(frame2)
    if f2.shape != flow.shape:
        raise DimensionError(f"frame {f2.shape} vs flow {flow.shape}")
    h, w = f2.shape
    gy, gx = np.mgrid[0:h, 0:w]
    return map_coordinates(f2, [gy + flow.v, gx + flow.u], order=1, mode="nearest")


def _pixel_sq_error(compensated: np.ndarray, truth: np.ndarray) -> np.ndarray:
    a = np.asarray(compensated, dtype=np.float64)
    b = np.asarray(truth, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    d = a - b
    if d.ndim == 3:  # color: squared L2 norm of the RGB difference
        return np.sum(d * d, axis=2)
    return d * d


def mse(compensated: np.ndarray, truth: np.ndarray) -> float:
    return float(np.mean(_pixel_sq_error(compensated, truth)))


def psnr(
    compensated: np.ndarray, truth: np.ndarray, per_image_max: bool = False
) -> float:
    """10 log10(max^2 / MSE); ``PSNR_EXACT`` (inf) when MSE is zero.

    ``max`` is the 255 data-range ceiling by default; ``per_image_max``
    uses the compensated image's own maximum instead.
    """
    m = mse(compensated, truth)
    if m == 0.0:
        return PSNR_EXACT
    peak = float(np.max(compensated)) if per_image_max else DATA_RANGE_MAX
    return 10.0 * math.log10(peak * peak / m)


def _replicated_central_gradient(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.pad(img, 1, mode="edge")
    gx = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    gy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    return gx, gy


def nrms(
    compensated: np.ndarray, truth: np.ndarray, epsilon: float = DEFAULT_NRMS_EPSILON
) -> float:
    """Gradient-normalized RMS difference with floor ``epsilon``."""
    sq = _pixel_sq_error(compensated, truth)
    t = np.asarray(truth, dtype=np.float64)
    if t.ndim == 3:
        t = t.mean(axis=2)
    gx, gy = _replicated_central_gradient(t)
    return float(np.sqrt(np.mean(sq / (gx * gx + gy * gy + epsilon))))


def _valid_both(flow: FlowField, gt: FlowField) -> np.ndarray:
    if flow.shape != gt.shape:
        raise DimensionError(f"flow {flow.shape} vs gt {gt.shape}")
    return flow.valid & gt.valid


def angular_error(flow: FlowField, gt: FlowField) -> tuple[np.ndarray, float, int]:
    """Per-pixel angle in degrees between (u, v, 1) and (u_gt, v_gt, 1).

    Returns (per-pixel map with NaN at excluded pixels, mean over valid
    pixels, count of pixels used).
    """
    m = _valid_both(flow, gt)
    num = 1.0 + flow.u * gt.u + flow.v * gt.v
    den = np.sqrt(1.0 + flow.u**2 + flow.v**2) * np.sqrt(1.0 + gt.u**2 + gt.v**2)
    ang = np.degrees(np.arccos(np.clip(num / den, -1.0, 1.0)))
    out = np.where(m, ang, np.nan)
    n = int(np.count_nonzero(m))
    mean = float(np.mean(ang[m])) if n else 0.0
    return out, mean, n


def endpoint_error(flow: FlowField, gt: FlowField) -> tuple[np.ndarray, float, int]:
    """Per-pixel Euclidean flow distance, mean over valid pixels, count."""
    m = _valid_both(flow, gt)
    e = np.hypot(flow.u - gt.u, flow.v - gt.v)
    out = np.where(m, e, np.nan)
    n = int(np.count_nonzero(m))
    mean = float(np.mean(e[m])) if n else 0.0
    return out, mean, n
