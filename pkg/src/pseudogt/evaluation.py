"""Segmentation metrics, dataset reports and the erosion/dilation study."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .imaging import as_mask, check_same_shape, dilate, erode, load_mask


class ManifestError(ValueError):
    pass


def _counts(prediction, ground_truth):
    p = as_mask(prediction)
    g = as_mask(ground_truth)
    check_same_shape(p, g, what="prediction and ground truth")
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return tp, fp, fn


def iou(prediction, ground_truth) -> float:
    """Intersection over union; two empty masks agree perfectly (1.0)."""
    tp, fp, fn = _counts(prediction, ground_truth)
    union = tp + fp + fn
    return 1.0 if union == 0 else tp / union


def _f(precision: float, recall: float) -> float:
    s = precision + recall
    return 0.0 if s == 0 else 2.0 * precision * recall / s


def region_fscore(prediction, ground_truth) -> tuple[float, float, float]:
    tp, fp, fn = _counts(prediction, ground_truth)
    if tp + fp + fn == 0:
        return 1.0, 1.0, 1.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall, _f(precision, recall)


def default_boundary_tolerance(shape) -> int:
    return int(math.ceil(0.008 * math.hypot(shape[0], shape[1])))


def boundary_map(mask) -> np.ndarray:
    m = as_mask(mask)
    return m ^ erode(m, 1)


def boundary_fscore(prediction, ground_truth, tolerance: Optional[int] = None) -> float:
    p = as_mask(prediction)
    g = as_mask(ground_truth)
    check_same_shape(p, g, what="prediction and ground truth")
    if tolerance is None:
        tolerance = default_boundary_tolerance(p.shape)
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    bp = boundary_map(p)
    bg = boundary_map(g)
    np_, ng = int(bp.sum()), int(bg.sum())
    if np_ == 0 and ng == 0:
        return 1.0
    if np_ == 0 or ng == 0:
        return 0.0
    precision = np.count_nonzero(bp & dilate(bg, tolerance)) / np_
    recall = np.count_nonzero(bg & dilate(bp, tolerance)) / ng
    return _f(precision, recall)


@dataclass(frozen=True)
class EvalPolicy:
    # frame 0 carries the pseudo ground truth that seeds the method
    exclude_first: bool = True
    exclude_last: bool = False
    boundary_tolerance: Optional[int] = None

    def admits(self, index: int, n_frames: int) -> bool:
        if self.exclude_first and index == 0:
            return False
        if self.exclude_last and index == n_frames - 1:
            return False
        return True

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FramePair:
    prediction: np.ndarray
    ground_truth: np.ndarray
    frame_index: int

    def __post_init__(self):
        self.prediction = as_mask(self.prediction)
        self.ground_truth = as_mask(self.ground_truth)
        check_same_shape(self.prediction, self.ground_truth, what=f"frame {self.frame_index}")


def _admitted(frames: Sequence[FramePair], policy: EvalPolicy) -> list[FramePair]:
    n = max((f.frame_index for f in frames), default=-1) + 1
    return [f for f in frames if policy.admits(f.frame_index, n)]


def sequence_miou(frames: Sequence[FramePair], policy: EvalPolicy | None = None) -> float:
    policy = policy or EvalPolicy()
    admitted = _admitted(frames, policy)
    if not admitted:
        raise ValueError("no admissible frames after policy filtering")
    return float(np.mean([iou(f.prediction, f.ground_truth) for f in admitted]))


@dataclass
class EvalReport:
    per_frame: list[dict] = field(default_factory=list)
    per_sequence: list[dict] = field(default_factory=list)
    dataset: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def evaluate_sequence(name: str, frames: Sequence[FramePair], policy: EvalPolicy):
    n = max((f.frame_index for f in frames), default=-1) + 1
    per_frame = []
    for f in frames:
        tol = policy.boundary_tolerance
        if tol is None:
            tol = default_boundary_tolerance(f.prediction.shape)
        per_frame.append({
            "sequence": name,
            "frame_index": f.frame_index,
            "admitted": policy.admits(f.frame_index, n),
            "iou": iou(f.prediction, f.ground_truth),
            "region_f": region_fscore(f.prediction, f.ground_truth)[2],
            "boundary_f": boundary_fscore(f.prediction, f.ground_truth, tol),
        })
    used = [r for r in per_frame if r["admitted"]]
    if not used:
        raise ValueError(f"sequence {name}: no admissible frames after policy filtering")
    summary = {
        "sequence": name,
        "n_frames": len(used),
        "mean_iou": float(np.mean([r["iou"] for r in used])),
        "region_f": float(np.mean([r["region_f"] for r in used])),
        "boundary_f": float(np.mean([r["boundary_f"] for r in used])),
    }
    return per_frame, summary


def _load_sequence(entry: dict, base: Path) -> tuple[str, list[FramePair]]:
    name = entry.get("name")
    if not name:
        raise ManifestError("sequence entry without a name")
    gts = entry.get("ground_truth") or []
    preds = entry.get("predictions") or []
    if len(gts) != len(preds):
        raise ManifestError(f"sequence {name}: {len(preds)} predictions for {len(gts)} ground-truth frames")
    frames = []
    for i, (gp, pp) in enumerate(zip(gts, preds)):
        paths = {"ground truth": base / gp, "prediction": base / pp}
        for kind, path in paths.items():
            if not path.is_file():
                raise ManifestError(f"sequence {name}, frame {i}: missing {kind} mask {path}")
        g = load_mask(paths["ground truth"])
        p = load_mask(paths["prediction"])
        try:
            frames.append(FramePair(p, g, i))
        except ValueError as exc:
            raise ManifestError(f"sequence {name}, frame {i}: {exc}") from exc
    return name, frames


def read_manifest(path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ManifestError(f"manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from exc
    doc.setdefault("base_dir", str(path.parent))
    return doc


def evaluate_dataset(manifest, policy: EvalPolicy | None = None, workers: int = 1) -> EvalReport:
    """Evaluate every sequence listed in a manifest (dict or JSON path).

    Dataset scores are means of per-sequence means.
    """
    policy = policy or EvalPolicy()
    if not isinstance(manifest, dict):
        manifest = read_manifest(manifest)
    sequences = manifest.get("sequences") or []
    if not sequences:
        raise ManifestError("no sequences")
    base = Path(manifest.get("base_dir", "."))

    def work(entry):
        name, frames = _load_sequence(entry, base)
        return evaluate_sequence(name, frames, policy)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, sequences))
    else:
        results = [work(e) for e in sequences]

    report = EvalReport(config={
        "policy": policy.to_dict(),
        "aggregation": "mean of sequence means",
        "both_empty_iou": 1.0,
    })
    for per_frame, summary in results:
        report.per_frame.extend(per_frame)
        report.per_sequence.append(summary)
    report.dataset = {
        key: float(np.mean([s[key] for s in report.per_sequence]))
        for key in ("mean_iou", "region_f", "boundary_f")
    }
    return report


def render_table(report: EvalReport) -> str:
    """Plain-text table with scores as percentages to one decimal."""
    rows = [(s["sequence"], s["mean_iou"], s["region_f"], s["boundary_f"]) for s in report.per_sequence]
    rows.append(("Mean", report.dataset["mean_iou"], report.dataset["region_f"], report.dataset["boundary_f"]))
    width = max(8, max(len(r[0]) for r in rows))
    lines = [f"{'Sequence':<{width}}  {'mIoU':>6}  {'F':>6}  {'F_bnd':>6}"]
    lines.append("-" * len(lines[0]))
    for i, (name, m, fr, fb) in enumerate(rows):
        if i == len(rows) - 1:
            lines.append("-" * len(lines[0]))
        lines.append(f"{name:<{width}}  {100 * m:6.1f}  {100 * fr:6.1f}  {100 * fb:6.1f}")
    return "\n".join(lines) + "\n"


def erosion_dilation_analysis(pseudo_gt, ground_truth, radii: Sequence[int] = (5,)) -> list[dict]:
    """IoU against the ground truth after eroding/dilating the pseudo ground truth."""
    p = as_mask(pseudo_gt)
    g = as_mask(ground_truth)
    check_same_shape(p, g, what="pseudo ground truth and ground truth")
    if any(r < 1 for r in radii):
        raise ValueError("radii must be >= 1")
    rows = [{"radius": 0, "variant": "baseline", "iou": iou(p, g)}]
    for r in radii:
        rows.append({"radius": int(r), "variant": "erode", "iou": iou(erode(p, r), g)})
        rows.append({"radius": int(r), "variant": "dilate", "iou": iou(dilate(p, r), g)})
    return rows


def render_analysis(rows: list[dict]) -> str:
    lines = [f"{'radius':>6}  {'variant':<8}  {'mIoU':>6}"]
    for r in rows:
        lines.append(f"{r['radius']:>6}  {r['variant']:<8}  {100 * r['iou']:6.1f}")
    return "\n".join(lines) + "\n"
