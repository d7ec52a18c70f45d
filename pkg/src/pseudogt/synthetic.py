"""Deterministic synthetic frames and fixtures used by tests and scripts."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy import ndimage

from .imaging import save_image, save_mask


def textured_image(shape, seed: int = 0, scales=(1.5, 3.0, 6.0)) -> np.ndarray:
    """Band-limited random texture in [0, 1] built from smoothed noise."""
    rng = np.random.default_rng(seed)
    img = np.zeros(shape)
    for s in scales:
        img += ndimage.gaussian_filter(rng.standard_normal(shape), s, mode="wrap") * s
    img -= img.min()
    img /= img.max()
    return 0.1 + 0.8 * img


def shifted_pair(size: int, shift, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Frames where the second is the first translated by ``shift = (dx, dy)``.

    Both are crops of one larger texture, so ``second(x + shift) == first(x)``
    and the true flow is ``shift`` everywhere.
    """
    dx, dy = (int(s) for s in shift)
    pad = max(abs(dx), abs(dy)) + 1
    big = textured_image((size + 2 * pad, size + 2 * pad), seed=seed)
    first = big[pad:pad + size, pad:pad + size]
    second = big[pad - dy:pad - dy + size, pad - dx:pad - dx + size]
    return first.copy(), second.copy()


def moving_square(size: int = 96, side: int = 32, shift=(4, 0), seed: int = 0):
    """Textured square moving over a static textured background.

    Returns ``(first, second, square_mask)`` with the mask at the first-frame
    position of the square.
    """
    dx, dy = shift
    background = textured_image((size, size), seed=seed, scales=(1.0, 2.0))
    patch = textured_image((side, side), seed=seed + 1, scales=(1.0, 2.0))
    patch = 0.15 + 0.7 * (1.0 - patch)
    top = left = (size - side) // 2
    first = background.copy()
    first[top:top + side, left:left + side] = patch
    second = background.copy()
    second[top + dy:top + dy + side, left + dx:left + dx + side] = patch
    mask = np.zeros((size, size), dtype=bool)
    mask[top:top + side, left:left + side] = True
    return first, second, mask


def moving_square_proposals(mask: np.ndarray) -> list[tuple[str, str, float, np.ndarray]]:
    """Three proposals overlapping the moving square by 1.0, 0.5 and 0.0."""
    ys, xs = np.nonzero(mask)
    top, left = ys.min(), xs.min()
    side = ys.max() - top + 1
    h, w = mask.shape
    half = np.zeros_like(mask)
    # straddles the left edge of the square: half inside, half on static ground
    half[top + side // 4:top + 3 * side // 4, left - side // 4:left + side // 4] = True
    corner = np.zeros_like(mask)
    corner[2:2 + side // 4, 2:2 + side // 4] = True
    return [
        ("p0", "person", 0.98, mask.copy()),
        ("p1", "dog", 0.91, half),
        ("p2", "chair", 0.75, corner),
    ]


def write_moving_square_fixture(root, with_proposals: bool = True) -> Path:
    """Write a two-frame sequence plus a proposals manifest under ``root``."""
    root = Path(root)
    frames = root / "frames"
    frames.mkdir(parents=True, exist_ok=True)
    first, second, mask = moving_square()
    save_image(first, frames / "00000.png")
    save_image(second, frames / "00001.png")
    save_mask(mask, root / "true_square.png")
    if with_proposals:
        pdir = root / "proposals"
        pdir.mkdir(exist_ok=True)
        records = []
        for pid, cat, score, m in moving_square_proposals(mask):
            save_mask(m, pdir / f"{pid}.png")
            records.append({"id": pid, "category": cat, "score": score, "mask": f"{pid}.png"})
        (pdir / "proposals.json").write_text(json.dumps(records, indent=2) + "\n")
    return root
