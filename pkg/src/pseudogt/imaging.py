"""Raster containers, file formats and binary-mask geometry.

Rasters are plain numpy arrays:

* image      -- float64 ``(H, W)`` or ``(H, W, 3)``, values in [0, 1]
* mask       -- bool ``(H, W)``
* flow field -- ``(H, W, 2)`` holding ``(u, v)`` in pixels/frame
* scalar map -- float ``(H, W)``

The ``as_*`` helpers validate and normalise inputs; every other function in
the package goes through them at its boundary.
"""
from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from scipy import ndimage

FLO_MAGIC = 202021.25
_FLO_HEADER = struct.Struct("<fii")

# Stand-in for an infinite distance (empty reference mask).
DISTANCE_INF = float(np.finfo(np.float64).max)


class FormatError(ValueError):
    """A file does not follow the expected on-disk layout."""


# ---------------------------------------------------------------------------
# validation

def as_image(image) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] != 3):
        raise ValueError(f"image must be HxW or HxWx3, got shape {img.shape}")
    if img.shape[0] == 0 or img.shape[1] == 0:
        raise ValueError("image has an empty dimension")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image intensities must lie in [0, 1]")
    return img


def as_mask(mask) -> np.ndarray:
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {m.shape}")
    return m.astype(bool, copy=False)


def as_flow(flow) -> np.ndarray:
    f = np.asarray(flow)
    if f.ndim != 3 or f.shape[2] != 2:
        raise ValueError(f"flow must be HxWx2, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("flow contains non-finite values")
    return f


def check_same_shape(*arrays, what: str = "inputs") -> tuple[int, int]:
    shapes = {tuple(np.shape(a)[:2]) for a in arrays}
    if len(shapes) != 1:
        raise ValueError(f"dimension mismatch between {what}: {sorted(shapes)}")
    return shapes.pop()


def to_grayscale(image) -> np.ndarray:
    """Luma (0.299, 0.587, 0.114) for RGB input; grayscale passes through."""
    img = as_image(image)
    if img.ndim == 2:
        return img
    return np.clip(img @ np.array([0.299, 0.587, 0.114]), 0.0, 1.0)


# ---------------------------------------------------------------------------
# Middlebury .flo

def write_flo(flow, path) -> None:
    f = as_flow(flow)
    h, w = f.shape[:2]
    payload = np.ascontiguousarray(f, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(_FLO_HEADER.pack(FLO_MAGIC, w, h))
        fh.write(payload)


def _read_float_raster(path, channels: int) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _FLO_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, w, h = _FLO_HEADER.unpack_from(data)
    if magic != FLO_MAGIC:
        raise FormatError(f"{path}: bad magic number {magic!r}")
    if w <= 0 or h <= 0:
        raise FormatError(f"{path}: nonpositive dimensions {w}x{h}")
    n = w * h * channels
    if len(data) - _FLO_HEADER.size < 4 * n:
        raise FormatError(f"{path}: truncated payload, expected {n} floats")
    values = np.frombuffer(data, dtype="<f4", count=n, offset=_FLO_HEADER.size)
    return values.astype(np.float32).reshape(h, w, channels)


def read_flo(path) -> np.ndarray:
    """Read a Middlebury flow file into a float32 ``(H, W, 2)`` array."""
    flow = _read_float_raster(path, 2)
    if not np.all(np.isfinite(flow)):
        raise FormatError(f"{path}: non-finite flow components")
    return flow


def write_scalar_map(values, path) -> None:
    """Single-channel variant of the .flo layout (magic, width, height, floats)."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError("scalar map must be 2-D")
    h, w = v.shape
    with open(path, "wb") as fh:
        fh.write(_FLO_HEADER.pack(FLO_MAGIC, w, h))
        fh.write(np.ascontiguousarray(v, dtype="<f4").tobytes())


def read_scalar_map(path) -> np.ndarray:
    return _read_float_raster(path, 1)[:, :, 0]


# ---------------------------------------------------------------------------
# raster I/O

def _single_channel(pil: PILImage.Image, path) -> np.ndarray:
    if pil.mode == "P":
        # palette index 0 is background in DAVIS-style annotations
        return (np.asarray(pil) > 0).astype(np.uint8) * 255
    if pil.mode in ("L", "1"):
        return np.asarray(pil.convert("L"))
    if pil.mode in ("RGB", "RGBA"):
        rgb = np.asarray(pil.convert("RGB"))
        if not (np.array_equal(rgb[..., 0], rgb[..., 1]) and np.array_equal(rgb[..., 0], rgb[..., 2])):
            raise FormatError(f"{path}: multi-channel mask with unequal channels")
        return rgb[..., 0]
    if pil.mode.startswith("I"):
        arr = np.asarray(pil).astype(np.int64)
        return np.where(arr > 32767, 255, 0).astype(np.uint8)
    raise FormatError(f"{path}: unsupported raster mode {pil.mode}")


def load_mask(path) -> np.ndarray:
    try:
        with PILImage.open(path) as pil:
            pil.load()
            raw = _single_channel(pil, path)
    except (OSError, PILImage.UnidentifiedImageError) as exc:
        raise FormatError(f"{path}: unreadable mask raster ({exc})") from exc
    return raw > 127


def save_mask(mask, path) -> None:
    m = as_mask(mask)
    PILImage.fromarray(np.where(m, 255, 0).astype(np.uint8), mode="L").save(path, format="PNG")


def load_image(path) -> np.ndarray:
    """Load an 8- or 16-bit raster as float64 in [0, 1]; RGB stays 3-channel."""
    try:
        with PILImage.open(path) as pil:
            pil.load()
            if pil.mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(pil).astype(np.float64) / 65535.0
                return np.clip(arr, 0.0, 1.0)
            if pil.mode in ("L", "1"):
                return np.asarray(pil.convert("L")).astype(np.float64) / 255.0
            return np.asarray(pil.convert("RGB")).astype(np.float64) / 255.0
    except (OSError, PILImage.UnidentifiedImageError) as exc:
        raise FormatError(f"{path}: unreadable image ({exc})") from exc


def save_image(image, path) -> None:
    img = as_image(image)
    PILImage.fromarray(np.round(img * 255.0).astype(np.uint8)).save(path, format="PNG")


def load_confidence(path) -> np.ndarray:
    """Confidence map from an 8/16-bit raster or a single-channel float file."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if len(head) == 4 and struct.unpack("<f", head)[0] == FLO_MAGIC:
        return read_scalar_map(path).astype(np.float64)
    img = load_image(path)
    if img.ndim == 3:
        raise FormatError(f"{path}: confidence map must be single-channel")
    return img


# ---------------------------------------------------------------------------
# morphology

def disk(radius: int) -> np.ndarray:
    """Discrete Euclidean disk ``dx**2 + dy**2 <= r**2``."""
    r = int(radius)
    if r < 0:
        raise ValueError("radius must be >= 0")
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return xx * xx + yy * yy <= r * r


def erode(mask, radius: int) -> np.ndarray:
    m = as_mask(mask)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0 or not m.any():
        return m.copy()
    # outside the raster counts as background, so objects shrink at the border
    return ndimage.binary_erosion(m, structure=disk(radius), border_value=0)


def dilate(mask, radius: int) -> np.ndarray:
    m = as_mask(mask)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0 or not m.any():
        return m.copy()
    return ndimage.binary_dilation(m, structure=disk(radius), border_value=0)


def connected_components(mask) -> list[tuple[int, int, np.ndarray]]:
    """8-connected components as ``(label, pixel_count, mask)``, largest first.

    Labels are re-assigned 1..n in output order; equal sizes keep raster-scan
    order of first appearance.
    """
    m = as_mask(mask)
    labels, n = ndimage.label(m, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return []
    counts = np.bincount(labels.ravel(), minlength=n + 1)[1:]
    order = sorted(range(n), key=lambda i: (-counts[i], i))
    return [(rank + 1, int(counts[i]), labels == i + 1) for rank, i in enumerate(order)]


def largest_component(mask) -> np.ndarray:
    comps = connected_components(mask)
    if not comps:
        return np.zeros_like(as_mask(mask))
    return comps[0][2]


def distance_transform(mask) -> np.ndarray:
    """Exact Euclidean distance from every pixel to the nearest true pixel."""
    m = as_mask(mask)
    if not m.any():
        return np.full(m.shape, DISTANCE_INF)
    return ndimage.distance_transform_edt(~m)


# ---------------------------------------------------------------------------
# resampling

def sample_bilinear(image: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear lookup at real coordinates, clamping to the nearest border pixel."""
    h, w = image.shape[:2]
    xs = np.clip(xs, 0.0, w - 1)
    ys = np.clip(ys, 0.0, h - 1)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    if image.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = image[y0, x0] * (1.0 - fx) + image[y0, x1] * fx
    bottom = image[y1, x0] * (1.0 - fx) + image[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def bilinear_warp(image, flow) -> np.ndarray:
    """``out(x) = image(x + flow(x))`` with bilinear interpolation."""
    img = np.asarray(image, dtype=np.float64)
    f = as_flow(flow)
    check_same_shape(img, f, what="image and flow")
    h, w = f.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    return sample_bilinear(img, xx + f[..., 0], yy + f[..., 1])


def resize_bilinear(image: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Resample to ``shape`` (H, W) with pixel-centre alignment."""
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape[:2]
    nh, nw = shape
    ys = (np.arange(nh) + 0.5) * (h / nh) - 0.5
    xs = (np.arange(nw) + 0.5) * (w / nw) - 0.5
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return sample_bilinear(img, xx, yy)


def ensure_parent(path) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
