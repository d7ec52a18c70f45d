"""Regenerate the bundled test fixtures under tests/fixtures/.

    python scripts/make_fixtures.py

Everything is deterministic, so rerunning produces identical files.
"""
import json
import struct
from pathlib import Path

import numpy as np

from pseudogt.imaging import save_mask
from pseudogt.synthetic import write_moving_square_fixture

ROOT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def square(shape, top, left, h, w):
    m = np.zeros(shape, dtype=bool)
    m[top:top + h, left:left + w] = True
    return m


def eval_dataset(root: Path):
    """Two 3-frame sequences on a 16x16 grid with hand-countable IoUs.

    seq_a: frame 1 exact (1.0), frame 2 shifted two columns (8/24).
    seq_b: frame 1 half the object (8/16), frame 2 empty prediction (0.0).
    Frame 0 of both is deliberately wrong; the default policy skips it.
    """
    shape = (16, 16)
    gt = square(shape, 4, 4, 4, 4)
    seqs = {
        "seq_a": [np.zeros(shape, bool), gt, square(shape, 4, 6, 4, 4)],
        "seq_b": [np.zeros(shape, bool), square(shape, 4, 4, 2, 4), np.zeros(shape, bool)],
    }
    entries = []
    for name, preds in seqs.items():
        d = root / name
        d.mkdir(parents=True, exist_ok=True)
        entry = {"name": name, "ground_truth": [], "predictions": []}
        for i, p in enumerate(preds):
            save_mask(gt, d / f"gt_{i:05d}.png")
            save_mask(p, d / f"pred_{i:05d}.png")
            entry["ground_truth"].append(f"{name}/gt_{i:05d}.png")
            entry["predictions"].append(f"{name}/pred_{i:05d}.png")
        entries.append(entry)
    (root / "manifest.json").write_text(json.dumps({"sequences": entries}, indent=2) + "\n")


def reference_flo(path: Path):
    """2x1 field (u, v) = (1.5, -2), (0.25, 8) written byte by byte."""
    data = struct.pack("<f", 202021.25) + struct.pack("<ii", 2, 1)
    data += struct.pack("<4f", 1.5, -2.0, 0.25, 8.0)
    path.write_bytes(data)


if __name__ == "__main__":
    ROOT.mkdir(parents=True, exist_ok=True)
    write_moving_square_fixture(ROOT / "moving_square")
    eval_dataset(ROOT / "eval_dataset")
    reference_flo(ROOT / "reference_2x1.flo")
    print(f"fixtures written to {ROOT}")
