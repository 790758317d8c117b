"""Greedy detection-to-GT matching, PR curves and average precision."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .geometry import iou
from .postprocess import Detection
from .targets import GroundTruth


@dataclass
class ImageEval:
    """Per-image matching outcome; detections whose best overlap is an
    invalid (ignore-region) GT are dropped before scoring."""

    detections: list[Detection]
    gts: list[GroundTruth]
    tp_flags: list[bool]

    @property
    def num_valid_gts(self) -> int:
        return sum(1 for g in self.gts if not g.invalid)


@dataclass
class PRCurve:
    points: list[tuple[float, float]]  # (recall, precision), recall non-decreasing
    ap: float


@dataclass
class SubsetResult:
    curve: PRCurve
    num_gts: int
    num_dets: int


@dataclass
class EvalReport:
    subsets: dict[str, SubsetResult] = field(default_factory=dict)


def match_image(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruth],
    iou_thresh: float = 0.5,
) -> ImageEval:
    """Greedy single-match protocol in descending score order.

    Each detection matches the unmatched valid GT of highest IoU when that
    IoU >= iou_thresh (TP), otherwise it is an FP -- unless its best overlap
    is with an invalid GT at or above the threshold, in which case it is
    discarded from scoring entirely.
    """
    if not 0.0 <= iou_thresh <= 1.0:
        raise ValueError(f"iou_thresh must be in [0, 1], got {iou_thresh}")
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    gt_matched = [False] * len(gts)
    scored: list[Detection] = []
    flags: list[bool] = []
    for di in order:
        d = dets[di]
        best_valid, best_valid_iou = None, 0.0
        best_invalid_iou = 0.0
        for gi, g in enumerate(gts):
            ov = iou(d.box, g.box)
            if g.invalid:
                best_invalid_iou = max(best_invalid_iou, ov)
            elif not gt_matched[gi] and ov > best_valid_iou:
                best_valid, best_valid_iou = gi, ov
        if best_valid is not None and best_valid_iou >= iou_thresh:
            gt_matched[best_valid] = True
            scored.append(d)
            flags.append(True)
        elif best_invalid_iou >= iou_thresh and best_invalid_iou > best_valid_iou:
            continue  # ignore region, neither TP nor FP
        else:
            scored.append(d)
            flags.append(False)
    return ImageEval(detections=scored, gts=list(gts), tp_flags=flags)


def _interpolated_ap(recalls: np.ndarray, precisions: np.ndarray) -> float:
    """Exact area under the all-point-interpolated PR curve."""
    mrec = np.concatenate(([0.0], recalls, [recalls[-1] if recalls.size else 0.0]))
    mpre = np.concatenate(([0.0], precisions, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    changed = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))


def pr_curve(evals: Sequence[ImageEval], sampled_thresholds: int = 0) -> PRCurve:
    """Pool all images, sort by score, accumulate TP/FP into one curve.

    ``sampled_thresholds`` > 0 switches AP to the compatibility mode that
    samples precision at that many evenly spaced score thresholds in [0, 1]
    instead of integrating the exact step function.
    """
    total_gt = sum(e.num_valid_gts for e in evals)
    if total_gt == 0:
        raise ValueError("no valid ground truth in any image")
    pooled = [(d.score, tp) for e in evals for d, tp in zip(e.detections, e.tp_flags)]
    if not pooled:
        return PRCurve(points=[], ap=0.0)
    pooled.sort(key=lambda p: -p[0])
    scores = np.array([p[0] for p in pooled])
    tps = np.array([p[1] for p in pooled], dtype=np.float64)
    cum_tp = np.cumsum(tps)
    cum_fp = np.cumsum(1.0 - tps)
    recalls = cum_tp / total_gt
    precisions = cum_tp / (cum_tp + cum_fp)
    points = list(zip(recalls.tolist(), precisions.tolist()))

    if sampled_thresholds > 0:
        ap = _sampled_ap(scores, recalls, precisions, sampled_thresholds)
    else:
        ap = _interpolated_ap(recalls, precisions)
    return PRCurve(points=points, ap=ap)


def _sampled_ap(scores: np.ndarray, recalls: np.ndarray, precisions: np.ndarray,
                num_thresholds: int) -> float:
    """Precision/recall sampled at descending score thresholds (official
    WIDER toolkit style), then the same interpolated integration."""
    r_pts, p_pts = [], []
    for t in range(num_thresholds):
        thresh = 1.0 - (t + 1) / num_thresholds
        n = int(np.searchsorted(-scores, -thresh, side="right"))
        if n == 0:
            r_pts.append(0.0)
            p_pts.append(0.0)
        else:
            r_pts.append(float(recalls[n - 1]))
            p_pts.append(float(precisions[n - 1]))
    return _interpolated_ap(np.array(r_pts), np.array(p_pts))


def evaluate(
    dets_by_image: Mapping[str, Sequence[Detection]],
    gts_by_image: Mapping[str, Sequence[GroundTruth]],
    subsets: Mapping[str, Sequence[str]],
    iou_thresh: float = 0.5,
    sampled_thresholds: int = 0,
) -> EvalReport:
    """Run matching + PR per subset; subsets may overlap (WIDER sets nest)."""
    unknown_dets = sorted(set(dets_by_image) - set(gts_by_image))
    if unknown_dets:
        raise ValueError(f"detections for images with no ground truth: {unknown_dets[:5]}")
    report = EvalReport()
    for name, images in subsets.items():
        evals = []
        num_dets = 0
        for img in images:
            if img not in gts_by_image:
                raise ValueError(f"subset {name!r} references unknown image {img!r}")
            dets = list(dets_by_image.get(img, []))
            num_dets += len(dets)
            evals.append(match_image(dets, gts_by_image[img], iou_thresh))
        curve = pr_curve(evals, sampled_thresholds=sampled_thresholds)
        num_gts = sum(e.num_valid_gts for e in evals)
        report.subsets[name] = SubsetResult(curve=curve, num_gts=num_gts, num_dets=num_dets)
    return report
