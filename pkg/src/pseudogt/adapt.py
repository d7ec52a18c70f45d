"""Training-example harvesting for online adaptation.

High-confidence pixels become positives, pixels far from the last predicted
object become negatives, and everything else is ignored.  Only the selection
rule lives here; the finetuning that consumes it does not.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .imaging import as_mask, check_same_shape, distance_transform


@dataclass(frozen=True)
class AdaptConfig:
    positive_threshold: float = 0.97
    negative_distance: float = 200.0

    def __post_init__(self):
        if not 0.0 < self.positive_threshold < 1.0:
            raise ValueError("positive_threshold must lie in (0, 1)")
        if self.negative_distance < 0:
            raise ValueError("negative_distance must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdaptationExamples:
    positives: np.ndarray
    negatives: np.ndarray
    dontcare: np.ndarray


def select_adaptation_examples(confidence, last_mask, config: AdaptConfig | None = None) -> AdaptationExamples:
    config = config or AdaptConfig()
    conf = np.asarray(confidence, dtype=np.float64)
    last = as_mask(last_mask)
    check_same_shape(conf, last, what="confidence and last mask")
    if conf.ndim != 2 or not np.all(np.isfinite(conf)) or conf.min() < 0 or conf.max() > 1:
        raise ValueError("confidence must be a 2-D map with values in [0, 1]")

    positives = conf >= config.positive_threshold
    # positives win where a confident pixel is also far from the last mask
    negatives = (distance_transform(last) > config.negative_distance) & ~positives
    dontcare = ~(positives | negatives)
    return AdaptationExamples(positives, negatives, dontcare)
