"""Detection post-processing and evaluation toolkit: anchors, label
assignment, NMS, multi-scale voted ensembling, and PR-curve evaluation."""

from .anchors import AnchorConfig, AnchorGrid, base_anchors, grid_anchors
from .evaluation import (EvalReport, ImageEval, PRCurve, SubsetResult, evaluate,
                         match_image, pr_curve)
from .geometry import Box, ImageSize, area, clip, iou, is_small, rescale
from .postprocess import (Detection, EnsembleConfig, companion_filter, greedy_nms,
                          top_k, voted_ensemble)
from .targets import (AssignmentResult, GroundTruth, Label, RegressionTarget,
                      assign_rcnn, assign_rpn, decode, encode, sample_minibatch)
from .widerio import (AnnotationRecord, DetectionRecord, FaceAnnotation, ParseError,
                      read_annotations, read_detections, read_subset_list,
                      write_detections)

__all__ = [
    "AnchorConfig", "AnchorGrid", "base_anchors", "grid_anchors",
    "EvalReport", "ImageEval", "PRCurve", "SubsetResult", "evaluate",
    "match_image", "pr_curve",
    "Box", "ImageSize", "area", "clip", "iou", "is_small", "rescale",
    "Detection", "EnsembleConfig", "companion_filter", "greedy_nms",
    "top_k", "voted_ensemble",
    "AssignmentResult", "GroundTruth", "Label", "RegressionTarget",
    "assign_rcnn", "assign_rpn", "decode", "encode", "sample_minibatch",
    "AnnotationRecord", "DetectionRecord", "FaceAnnotation", "ParseError",
    "read_annotations", "read_detections", "read_subset_list", "write_detections",
]
