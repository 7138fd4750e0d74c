"""Synthetic multi-motion scenes with dense frame-1-anchored ground truth.

Textures are periodic value noise: a seeded lattice of random values is
interpolated smoothly (cosine-eased bilinear) at arbitrary fractional
coordinates, so an element displaced by a subpixel vector is rendered
exactly by re-evaluating its texture at shifted coordinates. Shape
masks use analytic edge coverage, which keeps moving boundaries
antialiased in both frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import FlowField, FlowVector
from .errors import SceneSpecError

MIN_WINDOW_VARIANCE = 100.0  # broadband-energy check at generation time


@dataclass(frozen=True)
class Texture:
    base: float
    amplitude: float
    # Lattice spacing in pixels. The default keeps the texture broadband
    # (energy up to near-Nyquist): whitened correlation divides every
    # frequency bin by its magnitude, so low-pass textures leave the
    # spectrum dominated by numerically amplified junk bins and break
    # the correlation peak.
    cell: int = 2
    salt: int = 0         # decorrelates elements sharing a scene seed


@dataclass(frozen=True)
class SceneObject:
    shape: str            # "rectangle" | "disk"
    center: tuple[float, float]
    size: tuple[float, float]  # (w, h) for rectangles, (d, d) for disks
    texture: Texture
    motion: FlowVector


@dataclass(frozen=True)
class SceneSpec:
    name: str
    width: int = 256
    height: int = 256
    background: Texture = field(default_factory=lambda: Texture(128.0, 60.0))
    background_motion: FlowVector = FlowVector(0.0, 0.0)
    objects: tuple[SceneObject, ...] = ()
    seed: int = 0


def _lattice(tex: Texture, shape: tuple[int, int], seed: int) -> np.ndarray:
    h, w = shape
    lh = max(h // tex.cell, 2)
    lw = max(w // tex.cell, 2)
    rng = np.random.default_rng(np.random.SeedSequence([seed, tex.salt]))
    return rng.uniform(-1.0, 1.0, size=(lh, lw))


def _value_noise(
    tex: Texture, shape: tuple[int, int], seed: int, shift: tuple[float, float]
) -> np.ndarray:
    """Evaluate the periodic texture on the pixel grid displaced by
    ``shift`` (content moves by +shift)."""
    h, w = shape
    lat = _lattice(tex, shape, seed)
    lh, lw = lat.shape
    ys = (np.arange(h) - shift[1]) / tex.cell
    xs = (np.arange(w) - shift[0]) / tex.cell
    gy, gx = np.meshgrid(ys % lh, xs % lw, indexing="ij")
    y0 = np.floor(gy).astype(int) % lh
    x0 = np.floor(gx).astype(int) % lw
    fy = gy - np.floor(gy)
    fx = gx - np.floor(gx)
    # cosine easing keeps the field C1-smooth under subpixel motion
    fy = 0.5 - 0.5 * np.cos(np.pi * fy)
    fx = 0.5 - 0.5 * np.cos(np.pi * fx)
    y1 = (y0 + 1) % lh
    x1 = (x0 + 1) % lw
    top = lat[y0, x0] * (1 - fx) + lat[y0, x1] * fx
    bot = lat[y1, x0] * (1 - fx) + lat[y1, x1] * fx
    return tex.base + tex.amplitude * (top * (1 - fy) + bot * fy)


def _coverage_mask(
    obj: SceneObject, shape: tuple[int, int], shift: tuple[float, float]
) -> np.ndarray:
    h, w = shape
    cx = obj.center[0] + shift[0]
    cy = obj.center[1] + shift[1]
    gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
    if obj.shape == "rectangle":
        hw, hh = obj.size[0] / 2.0, obj.size[1] / 2.0
        mx = np.clip(hw + 0.5 - np.abs(gx - cx), 0.0, 1.0)
        my = np.clip(hh + 0.5 - np.abs(gy - cy), 0.0, 1.0)
        return mx * my
    if obj.shape == "disk":
        r = obj.size[0] / 2.0
        d = np.hypot(gx - cx, gy - cy)
        return np.clip(r + 0.5 - d, 0.0, 1.0)
    raise SceneSpecError(f"unknown shape {obj.shape!r}")


def _check_on_canvas(obj: SceneObject, shape: tuple[int, int]) -> None:
    h, w = shape
    hw, hh = obj.size[0] / 2.0, obj.size[1] / 2.0
    cx, cy = obj.center
    if cx + hw < 0 or cx - hw > w or cy + hh < 0 or cy - hh > h:
        raise SceneSpecError(f"object at {obj.center} lies fully outside the canvas")


def render_pair(spec: SceneSpec) -> tuple[np.ndarray, np.ndarray, FlowField]:
    """Render (frame1, frame2, gt); gt is anchored on frame 1 and fully
    valid (occluded-in-frame-2 pixels keep their frame-1 vector)."""
    shape = (spec.height, spec.width)
    bg = spec.background_motion
    frame1 = _value_noise(spec.background, shape, spec.seed, (0.0, 0.0))
    frame2 = _value_noise(spec.background, shape, spec.seed, (bg.dx, bg.dy))
    u = np.full(shape, bg.dx)
    v = np.full(shape, bg.dy)
    for obj in spec.objects:
        _check_on_canvas(obj, shape)
        m1 = _coverage_mask(obj, shape, (0.0, 0.0))
        m2 = _coverage_mask(obj, shape, (obj.motion.dx, obj.motion.dy))
        t1 = _value_noise(obj.texture, shape, spec.seed, (0.0, 0.0))
        t2 = _value_noise(obj.texture, shape, spec.seed, (obj.motion.dx, obj.motion.dy))
        frame1 = (1 - m1) * frame1 + m1 * t1
        frame2 = (1 - m2) * frame2 + m2 * t2
        inside = m1 > 0.5
        u[inside] = obj.motion.dx
        v[inside] = obj.motion.dy
    _verify_texture_energy(frame1)
    return frame1, frame2, FlowField(u, v)


def _verify_texture_energy(frame: np.ndarray, block: int = 32) -> None:
    h, w = frame.shape
    for y in range(0, h - block + 1, block):
        for x in range(0, w - block + 1, block):
            var = float(np.var(frame[y : y + block, x : x + block]))
            if var <= MIN_WINDOW_VARIANCE:
                raise SceneSpecError(
                    f"texture variance {var:.1f} too low at block ({x}, {y})"
                )


def standard_suite(seed: int = 0) -> list[SceneSpec]:
    """Nine deterministic multi-motion scenes: translation pairs and
    triples, thin objects, low-contrast foregrounds, subpixel motion."""
    fv = FlowVector
    tex = Texture

    # Region intensity design: texture amplitude ~27-30 keeps every
    # 32x32 block above the variance floor while leaving the base
    # levels (around 30 / 128 / 225) separated by about two range
    # sigmas, so the prefilter can tell the regions apart.
    def obj(shape, cx, cy, w, h, base, dx, dy, salt, amp=30.0):
        amp = min(amp, base, 255.0 - base)  # keep intensities inside [0, 255]
        return SceneObject(
            shape, (cx, cy), (w, h), tex(base, amp, salt=salt), fv(dx, dy)
        )

    scenes = [
        SceneSpec(
            "square_over_moving_bg",
            background=tex(62.0, 30.0),
            background_motion=fv(2.0, 0.0),
            objects=(obj("rectangle", 128, 128, 96, 96, 193.0, -4.0, 3.0, salt=1),),
            seed=seed,
        ),
        SceneSpec(
            "disk_over_moving_bg",
            background=tex(193.0, 30.0),
            background_motion=fv(-3.0, 2.0),
            objects=(obj("disk", 110, 140, 100, 100, 60.0, 5.0, -2.0, salt=2),),
            seed=seed + 1,
        ),
        SceneSpec(
            "three_motions",
            background=tex(128.0, 27.0),
            background_motion=fv(1.0, 1.0),
            objects=(
                obj("rectangle", 80, 80, 72, 72, 227.0, -5.0, 0.0, salt=3, amp=27.0),
                obj("disk", 180, 170, 84, 84, 28.0, 3.0, -4.0, salt=4, amp=27.0),
            ),
            seed=seed + 2,
        ),
        SceneSpec(
            "thin_bar",
            background=tex(75.0, 30.0),
            background_motion=fv(0.0, 2.0),
            objects=(obj("rectangle", 128, 120, 12, 150, 210.0, 6.0, -1.0, salt=5),),
            seed=seed + 3,
        ),
        SceneSpec(
            "low_contrast_square",
            background=tex(100.0, 30.0),
            background_motion=fv(3.0, -1.0),
            # foreground means only ~2 sigma_r away: deliberately hard
            objects=(obj("rectangle", 130, 130, 90, 90, 160.0, -3.0, 2.0, salt=6),),
            seed=seed + 4,
        ),
        SceneSpec(
            "subpixel_motions",
            background=tex(180.0, 30.0),
            background_motion=fv(0.75, -0.5),
            objects=(obj("rectangle", 120, 136, 92, 92, 50.0, -2.25, 1.5, salt=7),),
            seed=seed + 5,
        ),
        SceneSpec(
            "opposing_squares",
            background=tex(128.0, 27.0),
            background_motion=fv(0.0, 0.0),
            objects=(
                obj("rectangle", 78, 128, 64, 64, 227.0, 4.0, 0.0, salt=8, amp=27.0),
                obj("rectangle", 178, 128, 64, 64, 28.0, -4.0, 0.0, salt=9, amp=27.0),
            ),
            seed=seed + 6,
        ),
        SceneSpec(
            "large_motion",
            background=tex(185.0, 30.0),
            background_motion=fv(-2.0, -2.0),
            objects=(obj("disk", 128, 128, 110, 110, 55.0, 10.0, 7.0, salt=10),),
            seed=seed + 7,
        ),
        SceneSpec(
            "overlapping_objects",
            background=tex(128.0, 27.0),
            background_motion=fv(2.0, 1.0),
            objects=(
                obj("rectangle", 120, 120, 100, 100, 227.0, -3.0, -2.0, salt=11, amp=27.0),
                obj("disk", 150, 150, 80, 80, 28.0, 4.0, 3.0, salt=12, amp=27.0),
            ),
            seed=seed + 8,
        ),
    ]
    return scenes


def render_suite(seed: int = 0) -> list[tuple[SceneSpec, np.ndarray, np.ndarray, FlowField]]:
    out = []
    for spec in standard_suite(seed):
        f1, f2, gt = render_pair(spec)
        out.append((spec, f1, f2, gt))
    return out
