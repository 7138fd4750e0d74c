"""Image and flow file I/O plus flow visualization.

Supported rasters: binary/ASCII PGM and PNG (8-bit gray, or RGB reduced
to Rec. 601 luma on read). Flow interchange uses the Middlebury ``.flo``
layout: float32 tag 202021.25, int32 width/height, row-major (u, v)
float32 pairs; components with magnitude above 1e9 mark invalid pixels.
All writes are atomic (temp file + rename).
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .core import FlowField, rgb_to_luma
from .errors import (
    FlowFormatError,
    FlowLengthError,
    ImageFormatError,
    UnsupportedFormatError,
)

FLO_TAG = 202021.25
FLO_INVALID = 1e10       # sentinel written at invalid pixels
FLO_INVALID_LIMIT = 1e9  # magnitudes above this read back as invalid


def atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# PGM


def _parse_pgm(data: bytes) -> np.ndarray:
    pos = 0

    def skip_space():
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break

    def token() -> bytes:
        nonlocal pos
        skip_space()
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("unexpected end of PGM header", offset=start)
        return data[start:pos]

    magic = token()
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"bad PGM magic {magic!r}", offset=0)
    try:
        width = int(token())
        height = int(token())
        maxval = int(token())
    except ValueError as exc:
        raise ImageFormatError(f"non-numeric PGM header field: {exc}", offset=pos) from exc
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"bad PGM dimensions {width}x{height}", offset=pos)
    if maxval > 255:
        raise UnsupportedFormatError(f"only 8-bit PGM supported, maxval={maxval}")
    if maxval <= 0:
        raise ImageFormatError(f"bad PGM maxval {maxval}", offset=pos)

    n = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        raster = data[pos : pos + n]
        if len(raster) < n:
            raise ImageFormatError(
                f"PGM raster truncated: expected {n} bytes, got {len(raster)}",
                offset=pos + len(raster),
            )
        arr = np.frombuffer(raster, dtype=np.uint8, count=n)
    else:
        try:
            values = [int(t) for t in data[pos:].split()]
        except ValueError as exc:
            raise ImageFormatError(f"bad ASCII PGM sample: {exc}", offset=pos) from exc
        if len(values) < n:
            raise ImageFormatError(
                f"ASCII PGM truncated: expected {n} samples, got {len(values)}",
                offset=len(data),
            )
        arr = np.asarray(values[:n], dtype=np.float64)
    return arr.reshape(height, width).astype(np.float64)


def read_image(path: str | Path) -> np.ndarray:
    """Load a grayscale image as float64; RGB inputs become Rec. 601 luma."""
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".ppm"):
        return _parse_pgm(path.read_bytes())
    try:
        img = PILImage.open(path)
    except Exception as exc:
        raise ImageFormatError(f"cannot parse {path.name}: {exc}") from exc
    if img.mode in ("I;16", "I", "F"):
        raise UnsupportedFormatError(f"unsupported bit depth/mode {img.mode!r}")
    if img.mode in ("RGB", "RGBA"):
        return rgb_to_luma(np.asarray(img.convert("RGB"), dtype=np.float64))
    return np.asarray(img.convert("L"), dtype=np.float64)


def write_image(image: np.ndarray, path: str | Path) -> None:
    """Quantize to 8 bits and write PGM or PNG by extension, atomically."""
    path = Path(path)
    data = np.clip(np.rint(np.asarray(image, dtype=np.float64)), 0, 255).astype(np.uint8)
    if path.suffix.lower() == ".pgm":
        h, w = data.shape
        payload = f"P5\n{w} {h}\n255\n".encode() + data.tobytes()
    else:
        import io

        buf = io.BytesIO()
        PILImage.fromarray(data, mode="L").save(buf, format="PNG")
        payload = buf.getvalue()
    atomic_write_bytes(path, payload)


def write_rgb(image: np.ndarray, path: str | Path) -> None:
    data = np.clip(np.rint(np.asarray(image)), 0, 255).astype(np.uint8)
    import io

    buf = io.BytesIO()
    PILImage.fromarray(data, mode="RGB").save(buf, format="PNG")
    atomic_write_bytes(path, buf.getvalue())


# ---------------------------------------------------------------------------
# .flo


def read_flo(path: str | Path) -> FlowField:
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise FlowFormatError(f"file too short for a .flo header ({len(data)} bytes)")
    (tag,) = struct.unpack("<f", data[:4])
    if tag != FLO_TAG:
        raise FlowFormatError(f"bad .flo tag {tag!r}, expected {FLO_TAG}")
    width, height = struct.unpack("<ii", data[4:12])
    if width <= 0 or height <= 0:
        raise FlowFormatError(f"bad .flo dimensions {width}x{height}")
    expected = 12 + 8 * width * height
    if len(data) != expected:
        raise FlowLengthError(
            f".flo payload is {len(data)} bytes, header implies {expected}"
        )
    uv = np.frombuffer(data, dtype="<f4", offset=12).reshape(height, width, 2)
    u = uv[..., 0].astype(np.float64)
    v = uv[..., 1].astype(np.float64)
    valid = (np.abs(u) <= FLO_INVALID_LIMIT) & (np.abs(v) <= FLO_INVALID_LIMIT)
    u = np.where(valid, u, 0.0)
    v = np.where(valid, v, 0.0)
    return FlowField(u, v, valid)


def write_flo(flow: FlowField, path: str | Path) -> None:
    h, w = flow.shape
    u = np.where(flow.valid, flow.u, FLO_INVALID).astype("<f4")
    v = np.where(flow.valid, flow.v, FLO_INVALID).astype("<f4")
    uv = np.stack([u, v], axis=-1)
    payload = struct.pack("<fii", FLO_TAG, w, h) + uv.tobytes()
    atomic_write_bytes(path, payload)


# ---------------------------------------------------------------------------
# Visualization


def _hsv_to_rgb(hue: np.ndarray, sat: np.ndarray, val: np.ndarray) -> np.ndarray:
    """Vectorized HSV -> RGB, all inputs in [0, 1]."""
    i = np.floor(hue * 6.0).astype(int) % 6
    f = hue * 6.0 - np.floor(hue * 6.0)
    p = val * (1 - sat)
    q = val * (1 - f * sat)
    t = val * (1 - (1 - f) * sat)
    r = np.choose(i, [val, q, p, p, t, val])
    g = np.choose(i, [t, val, val, q, p, p])
    b = np.choose(i, [p, p, t, val, val, q])
    return np.stack([r, g, b], axis=-1)


def flow_to_color(flow: FlowField, max_magnitude: float | None = None) -> np.ndarray:
    """Color-wheel rendering: hue = direction, saturation = magnitude.

    Zero flow maps to white, invalid pixels to black. Without an
    explicit ``max_magnitude`` the 99th percentile of valid magnitudes
    normalizes the saturation.
    """
    mag = np.hypot(flow.u, flow.v)
    if max_magnitude is None:
        valid_mags = mag[flow.valid]
        max_magnitude = float(np.percentile(valid_mags, 99)) if valid_mags.size else 1.0
    if max_magnitude <= 0:
        max_magnitude = 1.0
    hue = (np.arctan2(flow.v, flow.u) % (2 * np.pi)) / (2 * np.pi)
    sat = np.clip(mag / max_magnitude, 0.0, 1.0)
    rgb = _hsv_to_rgb(hue, sat, np.ones_like(hue))
    rgb = np.where(flow.valid[..., None], rgb, 0.0)
    return np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)


def ratio_map_to_gray(ratio: np.ndarray, cap: float = 1e3) -> np.ndarray:
    """Log-scaled 8-bit rendering of a peak-ratio map; +inf (single
    peak) saturates to white."""
    r = np.asarray(ratio, dtype=np.float64)
    r = np.where(np.isfinite(r), np.clip(r, 1.0, cap), cap)
    scaled = np.log(r) / np.log(cap)
    return np.clip(np.rint(scaled * 255.0), 0, 255).astype(np.uint8)
