"""Motion-cue selection of instance proposals into one foreground mask."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .flow import FlowParams, compute_flow, flow_magnitude
from .imaging import as_mask, check_same_shape, largest_component, load_mask

log = logging.getLogger(__name__)

SOURCE_PROPOSALS = "proposals"
SOURCE_FLOW_FALLBACK = "flow_fallback"


@dataclass(frozen=True)
class InstanceProposal:
    id: str
    category: str
    score: float
    mask: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "mask", as_mask(self.mask))
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"proposal {self.id}: score {self.score} outside [0, 1]")
        if not self.mask.any():
            raise ValueError(f"proposal {self.id}: empty mask")


@dataclass(frozen=True)
class TagConfig:
    flow_threshold: float = 0.25
    normalize: bool = True
    overlap_threshold: float = 0.8
    # None means 0.1% of the frame area
    min_flow_pixels: Optional[int] = None
    largest_component_only: bool = True

    def __post_init__(self):
        if not 0.0 < self.flow_threshold < 1.0:
            raise ValueError("flow_threshold must lie in (0, 1)")
        if not 0.0 < self.overlap_threshold <= 1.0:
            raise ValueError("overlap_threshold must lie in (0, 1]")
        if self.min_flow_pixels is not None and self.min_flow_pixels < 0:
            raise ValueError("min_flow_pixels must be >= 0")

    def min_pixels_for(self, shape) -> int:
        if self.min_flow_pixels is not None:
            return int(self.min_flow_pixels)
        return int(math.ceil(0.001 * shape[0] * shape[1]))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PseudoGroundTruth:
    mask: np.ndarray
    source: str
    selected_ids: list[str]
    flow_mask: np.ndarray
    status: str = "ok"
    metadata: dict = field(default_factory=dict)

    def provenance(self) -> dict:
        return {
            "source": self.source,
            "status": self.status,
            "selected_ids": list(self.selected_ids),
            "mask_pixels": int(self.mask.sum()),
            "flow_mask_pixels": int(self.flow_mask.sum()),
            **self.metadata,
        }


def threshold_flow(magnitude, config: TagConfig) -> np.ndarray:
    mag = np.asarray(magnitude, dtype=np.float64)
    if not np.all(np.isfinite(mag)) or (mag < 0).any():
        raise ValueError("magnitude must be finite and nonnegative")
    peak = mag.max() if mag.size else 0.0
    if peak <= 0.0:
        return np.zeros(mag.shape, dtype=bool)
    if config.normalize:
        mag = mag / peak
    return mag > config.flow_threshold


def proposal_overlap(proposal, flow_mask) -> float:
    """Fraction of the proposal's own pixels that fall inside the flow mask."""
    p = as_mask(proposal)
    f = as_mask(flow_mask)
    check_same_shape(p, f, what="proposal and flow mask")
    area = int(p.sum())
    if area == 0:
        raise ValueError("empty proposal")
    return int(np.count_nonzero(p & f)) / area


def select_proposals(proposals, flow_mask, config: TagConfig) -> list[InstanceProposal]:
    return [p for p in proposals
            if proposal_overlap(p.mask, flow_mask) > config.overlap_threshold]


def merge_to_foreground(selected, shape=None) -> np.ndarray:
    """Pixelwise union of proposal masks; class labels are dropped."""
    selected = list(selected)
    if not selected:
        if shape is None:
            raise ValueError("shape is required to merge an empty selection")
        return np.zeros(shape, dtype=bool)
    out = np.zeros(selected[0].mask.shape, dtype=bool)
    for p in selected:
        check_same_shape(out, p.mask, what="proposal masks")
        out |= p.mask
    return out


def tag_from_flow(flow, proposals, config: TagConfig) -> PseudoGroundTruth:
    """Pseudo ground truth from a precomputed flow field."""
    flow_mask = threshold_flow(flow_magnitude(flow), config)
    shape = flow_mask.shape
    for p in proposals:
        check_same_shape(flow_mask, p.mask, what=f"frames and proposal {p.id}")
    meta = {"tag_config": config.to_dict(), "min_flow_pixels_effective": config.min_pixels_for(shape)}

    if flow_mask.sum() < config.min_pixels_for(shape):
        log.warning("degenerate motion: flow mask has %d pixels", int(flow_mask.sum()))
        return PseudoGroundTruth(np.zeros(shape, dtype=bool), SOURCE_FLOW_FALLBACK, [],
                                 flow_mask, status="degenerate_motion", metadata=meta)

    selected = select_proposals(proposals, flow_mask, config)
    meta["overlaps"] = {p.id: proposal_overlap(p.mask, flow_mask) for p in proposals}
    if selected:
        return PseudoGroundTruth(merge_to_foreground(selected), SOURCE_PROPOSALS,
                                 [p.id for p in selected], flow_mask, metadata=meta)

    fallback = largest_component(flow_mask) if config.largest_component_only else flow_mask.copy()
    return PseudoGroundTruth(fallback, SOURCE_FLOW_FALLBACK, [], flow_mask, metadata=meta)


def make_pseudo_gt(first, second, proposals, flow_params: FlowParams | None = None,
                   config: TagConfig | None = None) -> PseudoGroundTruth:
    flow_params = flow_params or FlowParams()
    config = config or TagConfig()
    check_same_shape(first, second, what="frames")
    flow = compute_flow(first, second, flow_params)
    result = tag_from_flow(flow, list(proposals), config)
    result.metadata["flow_params"] = flow_params.to_dict()
    return result


def load_proposals(manifest_path) -> list[InstanceProposal]:
    """Read ``proposals.json``: records of id, category, score and a mask path."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "proposals.json"
    try:
        records = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{manifest_path}: invalid JSON ({exc})") from exc
    if not isinstance(records, list):
        raise ValueError(f"{manifest_path}: expected a list of proposal records")
    out = []
    for i, rec in enumerate(records):
        try:
            mask = load_mask(manifest_path.parent / rec["mask"])
            out.append(InstanceProposal(str(rec["id"]), str(rec["category"]), float(rec["score"]), mask))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"{manifest_path}: malformed record {i}: {exc}") from exc
    return out
