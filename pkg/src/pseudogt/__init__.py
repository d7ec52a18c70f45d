"""Motion-cue pseudo ground truth for video object segmentation."""
from .adapt import AdaptConfig, AdaptationExamples, select_adaptation_examples
from .evaluation import (
    EvalPolicy,
    EvalReport,
    FramePair,
    boundary_fscore,
    erosion_dilation_analysis,
    evaluate_dataset,
    iou,
    region_fscore,
    sequence_miou,
)
from .flow import FlowParams, build_pyramid, compute_flow, flow_magnitude, solve_level
from .imaging import (
    bilinear_warp,
    connected_components,
    dilate,
    distance_transform,
    erode,
    load_mask,
    read_flo,
    save_mask,
    write_flo,
)
from .tagger import (
    InstanceProposal,
    PseudoGroundTruth,
    TagConfig,
    make_pseudo_gt,
    merge_to_foreground,
    proposal_overlap,
    select_proposals,
    threshold_flow,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig",
    "AdaptationExamples",
    "FlowParams",
    "build_pyramid",
    "compute_flow",
    "flow_magnitude",
    "select_adaptation_examples",
    "solve_level",
    "EvalPolicy",
    "EvalReport",
    "FramePair",
    "InstanceProposal",
    "PseudoGroundTruth",
    "TagConfig",
    "bilinear_warp",
    "boundary_fscore",
    "connected_components",
    "dilate",
    "distance_transform",
    "erode",
    "erosion_dilation_analysis",
    "evaluate_dataset",
    "iou",
    "load_mask",
    "make_pseudo_gt",
    "merge_to_foreground",
    "proposal_overlap",
    "read_flo",
    "region_fscore",
    "save_mask",
    "select_proposals",
    "sequence_miou",
    "threshold_flow",
    "write_flo",
]
