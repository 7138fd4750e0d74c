"""Coarse-to-fine sparse-to-dense optical flow pipeline.

Per pyramid layer, smallest first: keypoints are seeded from the frame
difference (first layer) or the motion-compensated residual (later
layers), windowed spectral estimation runs at each keypoint with the
ratio-triggered bilateral fallback, budget-dropped difference points
get a Lucas-Kanade estimate instead, and the sparse vectors are
densified with an edge-aware weighted blend before being upsampled into
the next layer.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import map_coordinates
from scipy.spatial import cKDTree

from .bilateral import BilateralParams
from .core import FlowField, FlowVector, as_image, extract_window
from .errors import ConfigError, DimensionError
from .estimator import Method, PointEstimate, window_estimate


@dataclass(frozen=True)
class FrameworkConfig:
    alpha: float = 2.0                 # difference threshold scale
    s_u: int = 16                      # uniform sampling stride
    t_p: int = 2000                    # keypoint budget
    m_w: int = 32                      # correlation window size
    m_min: int = 640                   # pyramid stop width
    n_min: int = 360                   # pyramid stop height
    sigma_r: float = 30.0
    slice_m: int = 3
    t_r: float | None = None           # ratio-test override
    method: str = "auto"               # pc | blpc | auto
    lk_window: int = 15
    lambda_min: float = 1e-4
    densify_sigma_s: float | None = None   # defaults to s_u
    densify_sigma_r: float = 25.0
    densify_k: int = 16
    threads: int = 1

    def __post_init__(self):
        if self.s_u < 2:
            raise ConfigError(f"s_u must be >= 2, got {self.s_u}")
        if self.t_p < 16:
            raise ConfigError(f"t_p must be >= 16, got {self.t_p}")
        if min(self.alpha, self.m_w, self.m_min, self.n_min) <= 0:
            raise ConfigError("alpha, m_w, m_min, n_min must be positive")
        if self.method not in ("pc", "blpc", "auto"):
            raise ConfigError(f"unknown method {self.method!r}")

    def bilateral_params(self, m_w: int | None = None) -> BilateralParams:
        return BilateralParams.for_window(
            m_w or self.m_w, sigma_r=self.sigma_r, slice_m=self.slice_m
        )


@dataclass
class Pyramid:
    """Image pairs ordered small to original, with inter-layer factors.

    ``factors[i]`` is the power-of-two scale between layer i and layer
    i+1; at most three layers exist.
    """

    layers: list[tuple[np.ndarray, np.ndarray]]
    factors: list[int]


@dataclass
class KeyPointSet:
    uniform: list[tuple[int, int]]
    difference: list[tuple[int, int]]
    retained_difference: list[tuple[int, int]]
    dropped: list[tuple[int, int]]


@dataclass
class LayerStats:
    shape: tuple[int, int]
    spectral_estimates: int = 0
    lk_estimates: int = 0
    dropped: int = 0
    mean_residual: float = 0.0


@dataclass
class PipelineStats:
    layers: list[LayerStats] = field(default_factory=list)


def _decimate(img: np.ndarray) -> np.ndarray:
    """2x2 box average; odd dimensions replicate-padded first."""
    h, w = img.shape
    if h % 2 or w % 2:
        img = np.pad(img, ((0, h % 2), (0, w % 2)), mode="edge")
        h, w = img.shape
    return img.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def build_pyramid(frame1: np.ndarray, frame2: np.ndarray, cfg: FrameworkConfig) -> Pyramid:
    """Decimate until below m_min x n_min; insert one middle layer when
    more than one decimation occurred (at the power of two nearest the
    geometric mean, ties toward the finer layer)."""
    f1 = as_image(frame1)
    f2 = as_image(frame2)
    if f1.shape != f2.shape:
        raise DimensionError("frame dimensions differ")

    levels = [(f1, f2)]  # levels[k] is decimated k times
    while not (levels[-1][0].shape[1] < cfg.m_min and levels[-1][0].shape[0] < cfg.n_min):
        a, b = levels[-1]
        if min(a.shape) < 2:
            break
        levels.append((_decimate(a), _decimate(b)))

    n_dec = len(levels) - 1
    if n_dec == 0:
        return Pyramid(layers=[levels[0]], factors=[])
    if n_dec == 1:
        return Pyramid(layers=[levels[1], levels[0]], factors=[2])
    # middle exponent: nearest integer to n_dec/2, ties toward the finer
    # (less decimated) layer
    mid = n_dec // 2
    return Pyramid(
        layers=[levels[n_dec], levels[mid], levels[0]],
        factors=[2 ** (n_dec - mid), 2 ** mid],
    )


def _uniform_grid(shape: tuple[int, int], s_u: int) -> list[tuple[int, int]]:
    h, w = shape
    ys = range(s_u // 2, h, s_u)
    xs = range(s_u // 2, w, s_u)
    return [(x, y) for y in ys for x in xs]


def select_keypoints_from_difference(
    diff: np.ndarray, cfg: FrameworkConfig
) -> KeyPointSet:
    """Keypoints from a uniform grid plus thresholded difference pixels,
    subsampled in scan order to stay within the budget."""
    d = as_image(diff)
    uniform = _uniform_grid(d.shape, cfg.s_u)
    sigma = float(np.std(d))
    if sigma == 0.0:
        return KeyPointSet(uniform, [], [], [])
    t_d = cfg.alpha * sigma
    ys, xs = np.nonzero(d >= t_d)
    difference = list(zip(xs.tolist(), ys.tolist()))  # row-major scan order
    room = cfg.t_p - len(uniform)
    if len(uniform) + len(difference) <= cfg.t_p:
        retained = difference
    elif room <= 0:
        retained = []
    else:
        j = -(-len(difference) // room)  # smallest stride meeting the budget
        retained = difference[::j]
    retained_set = set(retained)
    dropped = [p for p in difference if p not in retained_set]
    return KeyPointSet(uniform, difference, retained, dropped)


def select_keypoints(
    frame1: np.ndarray, frame2: np.ndarray, cfg: FrameworkConfig
) -> KeyPointSet:
    f1 = as_image(frame1)
    f2 = as_image(frame2)
    if f1.shape != f2.shape:
        raise DimensionError("frame dimensions differ")
    return select_keypoints_from_difference(np.abs(f1 - f2), cfg)


LK_ITERATIONS = 5       # warp-refinement steps per point
LK_STEP_TOL = 1e-3      # early stop once the update falls below this
LK_TRUST_RADIUS = 0.25  # moves beyond this need a clear fit improvement
LK_IMPROVEMENT = 0.9    # required SSD ratio for moves past the radius


def _batched_lk(
    frame1: np.ndarray,
    frame2: np.ndarray,
    points: np.ndarray,
    init_uv: np.ndarray,
    window: int,
    lambda_min: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Iterative Lucas-Kanade at a batch of points.

    ``points`` is (B, 2) integer (x, y); ``init_uv`` is the (B, 2)
    linearization point (a differential method only converges within
    the texture's correlation length, so large motions need a starting
    vector — the caller passes the nearest spectral estimate). Frame 2
    is resampled at the current vector each iteration; the spatial
    template and its structure tensor come from frame 1 and stay fixed.
    Returns (uv, valid); invalid means a rank-deficient tensor, a
    non-finite solve, or divergence past the window radius.
    """
    f1 = as_image(frame1)
    f2 = as_image(frame2)
    h, w = f1.shape
    half = window // 2
    # circular central differences, matching the wrap model of the warp
    gx_img = 0.5 * (np.roll(f1, -1, axis=1) - np.roll(f1, 1, axis=1))
    gy_img = 0.5 * (np.roll(f1, -1, axis=0) - np.roll(f1, 1, axis=0))
    xs = points[:, 0][:, None, None]
    ys = points[:, 1][:, None, None]
    offs = np.arange(-half, half + 1)
    b = len(points)
    wy = np.broadcast_to(
        (ys + offs[None, :, None]) % h, (b, window, window)
    ).astype(np.float64)
    wx = np.broadcast_to(
        (xs + offs[None, None, :]) % w, (b, window, window)
    ).astype(np.float64)
    iyy = wy.astype(int)
    ixx = wx.astype(int)
    ix = gx_img[iyy, ixx]
    iy = gy_img[iyy, ixx]
    t1 = f1[iyy, ixx]
    gxx = np.sum(ix * ix, axis=(1, 2))
    gxy = np.sum(ix * iy, axis=(1, 2))
    gyy = np.sum(iy * iy, axis=(1, 2))
    tr = gxx + gyy
    det = gxx * gyy - gxy * gxy
    lam2 = tr / 2.0 - np.sqrt(np.maximum(tr * tr / 4.0 - det, 0.0))
    n = window * window
    valid = (lam2 / n >= lambda_min) & (det > 0)
    safe_det = np.where(valid, det, 1.0)

    u = init_uv[:, 0].astype(np.float64).copy()
    v = init_uv[:, 1].astype(np.float64).copy()
    ssd_init = None
    for _ in range(LK_ITERATIONS):
        warped = map_coordinates(
            f2, [wy + v[:, None, None], wx + u[:, None, None]], order=1, mode="grid-wrap"
        )
        it = warped - t1
        if ssd_init is None:
            ssd_init = np.sum(it * it, axis=(1, 2))
        bx = np.sum(ix * it, axis=(1, 2))
        by = np.sum(iy * it, axis=(1, 2))
        du = np.where(valid, -(gyy * bx - gxy * by) / safe_det, 0.0)
        dv = np.where(valid, -(gxx * by - gxy * bx) / safe_det, 0.0)
        u += du
        v += dv
        if float(np.max(np.abs(du) + np.abs(dv), initial=0.0)) < LK_STEP_TOL:
            break
    diverged = (
        ~np.isfinite(u)
        | ~np.isfinite(v)
        | (np.abs(u - init_uv[:, 0]) > window)
        | (np.abs(v - init_uv[:, 1]) > window)
    )
    valid &= ~diverged
    # A gradient step on broadband texture can lock onto a false local
    # minimum; keep the solution only if it matches the window at least
    # as well as the starting vector did.
    uf = np.where(valid, u, init_uv[:, 0])
    vf = np.where(valid, v, init_uv[:, 1])
    warped = map_coordinates(
        f2, [wy + vf[:, None, None], wx + uf[:, None, None]], order=1, mode="grid-wrap"
    )
    it = warped - t1
    ssd_final = np.sum(it * it, axis=(1, 2))
    assert ssd_init is not None
    # Trust-region acceptance: bilinear resampling smooths high-frequency
    # texture, which lets a drifting solution "improve" the fit without
    # matching the motion. A solution is kept only if it stayed near its
    # linearization point or clearly beat the starting fit.
    move = np.hypot(uf - init_uv[:, 0], vf - init_uv[:, 1])
    small = (move <= LK_TRUST_RADIUS) & (ssd_final <= ssd_init)
    improved = ssd_final <= LK_IMPROVEMENT * ssd_init
    valid &= small | improved
    u = np.where(valid, u, 0.0)
    v = np.where(valid, v, 0.0)
    return np.column_stack([u, v]), valid


def lucas_kanade_at(
    frame1: np.ndarray,
    frame2: np.ndarray,
    center: tuple[int, int],
    window: int = 15,
    lambda_min: float = 1e-4,
    init: FlowVector | None = None,
) -> tuple[FlowVector, bool]:
    """Least-squares flow from the structure tensor, iterated with
    backward warping.

    Returns (vector, valid); a rank-deficient tensor (smaller eigenvalue
    below ``lambda_min``) yields a flagged zero vector. ``init`` sets
    the linearization point for motions beyond the differential range.
    """
    if window < 5 or window % 2 == 0:
        raise ConfigError(f"LK window must be odd and >= 5, got {window}")
    f1 = as_image(frame1)
    f2 = as_image(frame2)
    if f1.shape != f2.shape:
        raise DimensionError("frame dimensions differ")
    start = init or FlowVector(0.0, 0.0)
    uv, valid = _batched_lk(
        f1,
        f2,
        np.array([[int(center[0]), int(center[1])]]),
        np.array([[start.dx, start.dy]]),
        window,
        lambda_min,
    )
    return FlowVector(float(uv[0, 0]), float(uv[0, 1])), bool(valid[0])


def densify(
    estimates: list[PointEstimate],
    guide: np.ndarray,
    sigma_s: float = 16.0,
    sigma_r: float = 25.0,
    k: int = 16,
) -> FlowField:
    """Edge-aware scattered-data interpolation onto the guide's grid.

    Each pixel blends its K nearest estimates with spatial and
    guide-intensity Gaussian weights; degraded estimates count half.
    Zero total weight falls back to the nearest estimate.
    """
    g = as_image(guide)
    pts = [e for e in estimates if np.isfinite(e.flow.dx) and np.isfinite(e.flow.dy)]
    if not pts:
        raise ConfigError("densify needs at least one valid estimate")
    h, w = g.shape
    xy = np.array([e.location for e in pts], dtype=np.float64)
    uv = np.array([(e.flow.dx, e.flow.dy) for e in pts])
    base = np.array([0.5 if e.degraded else 1.0 for e in pts])
    gval = g[
        np.clip(xy[:, 1].astype(int), 0, h - 1), np.clip(xy[:, 0].astype(int), 0, w - 1)
    ]

    kk = min(k, len(pts))
    tree = cKDTree(xy)
    gy, gx = np.mgrid[0:h, 0:w]
    coords = np.column_stack([gx.ravel(), gy.ravel()]).astype(np.float64)
    dist, idx = tree.query(coords, k=kk)
    if kk == 1:
        dist = dist[:, None]
        idx = idx[:, None]
    wgt = (
        np.exp(-(dist**2) / (2.0 * sigma_s * sigma_s))
        * np.exp(-((g.ravel()[:, None] - gval[idx]) ** 2) / (2.0 * sigma_r * sigma_r))
        * base[idx]
    )
    tot = wgt.sum(axis=1)
    u = (wgt * uv[idx, 0]).sum(axis=1)
    v = (wgt * uv[idx, 1]).sum(axis=1)
    zero = tot <= 0.0
    safe = np.where(zero, 1.0, tot)
    u = np.where(zero, uv[idx[:, 0], 0], u / safe)
    v = np.where(zero, uv[idx[:, 0], 1], v / safe)
    return FlowField(u.reshape(h, w), v.reshape(h, w))


def warp_frame2(frame2: np.ndarray, flow: FlowField) -> np.ndarray:
    """Backward-warp frame 2 toward frame 1 (bilinear, circular).

    Out-of-frame samples wrap, matching the circular-shift model used by
    the windowed estimators and the wrap padding of the dense protocol.
    """
    f2 = as_image(frame2)
    h, w = f2.shape
    gy, gx = np.mgrid[0:h, 0:w]
    return map_coordinates(
        f2, [gy + flow.v, gx + flow.u], order=1, mode="grid-wrap"
    )


def warp_and_residual(
    frame1: np.ndarray, frame2: np.ndarray, flow: FlowField
) -> tuple[np.ndarray, np.ndarray]:
    f1 = as_image(frame1)
    warped = warp_frame2(frame2, flow)
    if warped.shape != f1.shape:
        raise DimensionError("flow dimensions do not match the layer")
    return warped, np.abs(f1 - warped)


def upsample_flow(flow: FlowField, shape: tuple[int, int], factor: int) -> FlowField:
    """Bilinear resize of each component to ``shape``, vectors scaled by
    the inter-layer factor."""
    h2, w2 = shape
    h1, w1 = flow.shape
    gy = (np.arange(h2) + 0.5) * (h1 / h2) - 0.5
    gx = (np.arange(w2) + 0.5) * (w1 / w2) - 0.5
    cy, cx = np.meshgrid(gy, gx, indexing="ij")
    u = map_coordinates(flow.u, [cy, cx], order=1, mode="nearest") * factor
    v = map_coordinates(flow.v, [cy, cx], order=1, mode="nearest") * factor
    return FlowField(u, v)


def _layer_window(cfg: FrameworkConfig, shape: tuple[int, int]) -> int:
    m_w = cfg.m_w
    while m_w > min(shape) and m_w > 8:
        m_w //= 2
    return m_w


def _estimate_layer(
    frame1: np.ndarray,
    frame2: np.ndarray,
    kps: KeyPointSet,
    cfg: FrameworkConfig,
    stats: LayerStats,
    base: FlowField | None = None,
) -> list[PointEstimate]:
    """Total-motion estimates at the layer's keypoints.

    ``base`` is the coarser layers' accumulated field (already at this
    layer's resolution). Each spectral window unwarps frame 2 by the
    ROUNDED base vector — the frame-2 window is extracted at the center
    offset by that integer shift, so no resampling distorts the texture
    — and the integer shift is added back to the window's estimate.
    Lucas-Kanade points run on the original pair with the nearest
    spectral estimate (or the base vector) as the linearization point.
    """
    m_w = _layer_window(cfg, frame1.shape)
    params = cfg.bilateral_params(m_w)
    t_r = cfg.t_r
    method = cfg.method

    seen: set[tuple[int, int]] = set()
    spectral_points = []
    for p in kps.uniform + kps.retained_difference:
        if p not in seen:
            seen.add(p)
            spectral_points.append(p)

    def one(p):
        if base is None:
            gx = gy = 0
        else:
            gx = int(round(base.u[p[1], p[0]]))
            gy = int(round(base.v[p[1], p[0]]))
        w1 = extract_window(frame1, p, m_w).pixels
        w2 = extract_window(frame2, (p[0] + gx, p[1] + gy), m_w).pixels
        e = window_estimate(
            w1, w2, p, method=method, params=params, ratio_threshold=t_r
        )
        if gx or gy:
            e = replace(e, flow=FlowVector(e.flow.dx + gx, e.flow.dy + gy))
        return e

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            estimates = list(pool.map(one, spectral_points))
    else:
        estimates = [one(p) for p in spectral_points]
    stats.spectral_estimates = len(estimates)
    stats.dropped = len(kps.dropped)

    lk_points = [p for p in kps.dropped if p not in seen]
    seen.update(lk_points)
    if lk_points:
        # Initialize each dropped point at its nearest spectral estimate:
        # LK only converges within the texture's correlation length, so
        # it refines the local spectral motion rather than starting cold.
        finite = [
            e for e in estimates if np.isfinite(e.flow.dx) and np.isfinite(e.flow.dy)
        ]
        pts = np.array(lk_points, dtype=np.int64)
        if finite:
            tree = cKDTree(np.array([e.location for e in finite], dtype=np.float64))
            _, nearest = tree.query(pts.astype(np.float64))
            init = np.array(
                [(finite[i].flow.dx, finite[i].flow.dy) for i in np.atleast_1d(nearest)]
            )
        elif base is not None:
            init = np.column_stack(
                [base.u[pts[:, 1], pts[:, 0]], base.v[pts[:, 1], pts[:, 0]]]
            )
        else:
            init = np.zeros((len(lk_points), 2))
        uv, valid = _batched_lk(
            frame1, frame2, pts, init, cfg.lk_window, cfg.lambda_min
        )
        for i, p in enumerate(lk_points):
            if valid[i]:
                estimates.append(
                    PointEstimate(
                        p,
                        FlowVector(float(uv[i, 0]), float(uv[i, 1])),
                        None,
                        Method.LK,
                        peak_value=0.0,
                    )
                )
                stats.lk_estimates += 1
    return estimates


def run_pipeline(
    frame1: np.ndarray, frame2: np.ndarray, cfg: FrameworkConfig | None = None
) -> tuple[FlowField, PipelineStats]:
    """Full coarse-to-fine estimation; returns the final-layer dense
    field and per-layer diagnostics."""
    cfg = cfg or FrameworkConfig()
    f1 = as_image(frame1)
    f2 = as_image(frame2)
    if f1.shape != f2.shape or f1.size == 0:
        raise DimensionError("frames must be nonempty and equal-sized")
    pyr = build_pyramid(f1, f2, cfg)
    stats = PipelineStats()
    sigma_sd = cfg.densify_sigma_s if cfg.densify_sigma_s is not None else float(cfg.s_u)

    accumulated: FlowField | None = None
    for li, (l1, l2) in enumerate(pyr.layers):
        lstats = LayerStats(shape=l1.shape)
        if accumulated is None:
            base = None
            diff = np.abs(l1 - l2)
        else:
            base = upsample_flow(accumulated, l1.shape, pyr.factors[li - 1])
            _, diff = warp_and_residual(l1, l2, base)
        kps = select_keypoints_from_difference(diff, cfg)
        estimates = _estimate_layer(l1, l2, kps, cfg, lstats, base)
        if any(np.isfinite(e.flow.dx) for e in estimates):
            accumulated = densify(
                estimates, l1, sigma_s=sigma_sd, sigma_r=cfg.densify_sigma_r, k=cfg.densify_k
            )
        elif base is not None:
            accumulated = base
        else:
            accumulated = FlowField.zeros(*l1.shape)
        _, res = warp_and_residual(l1, l2, accumulated)
        lstats.mean_residual = float(np.mean(res))
        stats.layers.append(lstats)
    assert accumulated is not None
    return accumulated, stats


def estimate_flow(
    frame1: np.ndarray, frame2: np.ndarray, cfg: FrameworkConfig | None = None
) -> FlowField:
    field, _ = run_pipeline(frame1, frame2, cfg)
    return field
