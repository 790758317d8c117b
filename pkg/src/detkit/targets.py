"""Training-side label assignment, minibatch sampling and box coding."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .geometry import Box, ImageSize, iou


class Label(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    IGNORE = "ignore"


@dataclass(frozen=True)
class GroundTruth:
    box: Box
    invalid: bool = False


@dataclass
class AssignmentResult:
    labels: list[Label]
    matched_gt: list[Optional[int]]
    max_iou: list[float]

    def indices(self, label: Label) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab is label]


@dataclass(frozen=True)
class RegressionTarget:
    tx: float
    ty: float
    tw: float
    th: float


def _max_overlaps(
    boxes: Sequence[Box], gts: Sequence[GroundTruth]
) -> tuple[list[float], list[Optional[int]], list[list[float]]]:
    """Per-box max IoU over valid GTs, argmax index (lowest-index ties),
    and the full IoU table restricted to valid GTs (None rows for invalid)."""
    valid = [i for i, g in enumerate(gts) if not g.invalid]
    max_iou = [0.0] * len(boxes)
    argmax: list[Optional[int]] = [None] * len(boxes)
    table: list[list[float]] = [[0.0] * len(boxes) for _ in valid]
    for vi, gi in enumerate(valid):
        gbox = gts[gi].box
        for bi, b in enumerate(boxes):
            ov = iou(b, gbox)
            table[vi][bi] = ov
            if ov > max_iou[bi]:
                max_iou[bi] = ov
                argmax[bi] = gi
    # argmax stays None when every overlap is 0; matched_gt only matters for
    # positives, which always have IoU > 0.
    return max_iou, argmax, table


def assign_rpn(
    anchors: Sequence[Box],
    gts: Sequence[GroundTruth],
    hi: float = 0.7,
    lo: float = 0.3,
    image_size: Optional[ImageSize] = None,
) -> AssignmentResult:
    """First-stage assignment: >= hi positive, < lo negative, else ignore,
    plus the argmax rule giving every overlapped GT at least one positive.

    Invalid GTs never match. When ``image_size`` is given, anchors not fully
    inside the image are forced to IGNORE (border filtering, off by default).
    """
    if not 0.0 <= lo <= hi <= 1.0:
        raise ValueError(f"need 0 <= lo <= hi <= 1, got lo={lo} hi={hi}")
    if not anchors:
        raise ValueError("anchor list is empty")
    max_iou, argmax, table = _max_overlaps(anchors, gts)

    inside = [True] * len(anchors)
    if image_size is not None:
        inside = [
            a.x1 >= 0 and a.y1 >= 0 and a.x2 <= image_size.width and a.y2 <= image_size.height
            for a in anchors
        ]

    labels = []
    for bi in range(len(anchors)):
        if not inside[bi]:
            labels.append(Label.IGNORE)
        elif max_iou[bi] >= hi:
            labels.append(Label.POSITIVE)
        elif max_iou[bi] < lo:
            labels.append(Label.NEGATIVE)
        else:
            labels.append(Label.IGNORE)

    # Argmax rule: the best anchor(s) for each valid GT become positive even
    # below hi, provided the overlap is nonzero. Lowest anchor index on ties.
    for row in table:
        best = max(row)
        if best <= 0.0:
            continue
        for bi, ov in enumerate(row):
            if ov == best and inside[bi]:
                labels[bi] = Label.POSITIVE
                break

    matched = [argmax[bi] if labels[bi] is Label.POSITIVE else None
               for bi in range(len(anchors))]
    return AssignmentResult(labels=labels, matched_gt=matched, max_iou=max_iou)


def assign_rcnn(
    proposals: Sequence[Box],
    gts: Sequence[GroundTruth],
    pos: float = 0.5,
    lo: float = 0.3,
) -> AssignmentResult:
    """Second-stage assignment: plain thresholding, no argmax rule."""
    if not 0.0 <= lo <= pos <= 1.0:
        raise ValueError(f"need 0 <= lo <= pos <= 1, got lo={lo} pos={pos}")
    if not proposals:
        raise ValueError("proposal list is empty")
    max_iou, argmax, _ = _max_overlaps(proposals, gts)
    labels = []
    for ov in max_iou:
        if ov >= pos:
            labels.append(Label.POSITIVE)
        elif ov < lo:
            labels.append(Label.NEGATIVE)
        else:
            labels.append(Label.IGNORE)
    matched = [argmax[bi] if labels[bi] is Label.POSITIVE else None
               for bi in range(len(proposals))]
    return AssignmentResult(labels=labels, matched_gt=matched, max_iou=max_iou)


def sample_minibatch(
    result: AssignmentResult,
    batch: int,
    pos_fraction: float,
    seed: int,
) -> list[int]:
    """Sample up to ``batch`` anchor indices, positives capped at
    round(batch * pos_fraction), deficit on either side filled from the other.

    IGNORE anchors are never sampled. Deterministic for a given seed.
    """
    if batch < 1:
        raise ValueError(f"batch must be >= 1, got {batch}")
    if not 0.0 < pos_fraction <= 1.0:
        raise ValueError(f"pos_fraction must be in (0, 1], got {pos_fraction}")
    pos_pool = result.indices(Label.POSITIVE)
    neg_pool = result.indices(Label.NEGATIVE)
    num_pos = min(round(batch * pos_fraction), len(pos_pool))
    num_neg = min(batch - num_pos, len(neg_pool))
    num_pos = min(batch - num_neg, len(pos_pool))
    rng = random.Random(seed)
    picked = rng.sample(pos_pool, num_pos) + rng.sample(neg_pool, num_neg)
    return picked


def encode(box: Box, anchor: Box) -> RegressionTarget:
    """Box relative to anchor: normalized center offsets, log size ratios."""
    wa, ha = anchor.width, anchor.height
    w, h = box.width, box.height
    if wa <= 0 or ha <= 0:
        raise ValueError(f"anchor has zero size: {anchor}")
    if w <= 0 or h <= 0:
        raise ValueError(f"box has zero size: {box}")
    cxa, cya = anchor.center
    cx, cy = box.center
    return RegressionTarget(
        tx=(cx - cxa) / wa,
        ty=(cy - cya) / ha,
        tw=math.log(w / wa),
        th=math.log(h / ha),
    )


def decode(t: RegressionTarget, anchor: Box) -> Box:
    """Inverse of :func:`encode`; raises on exp overflow."""
    wa, ha = anchor.width, anchor.height
    if wa <= 0 or ha <= 0:
        raise ValueError(f"anchor has zero size: {anchor}")
    cxa, cya = anchor.center
    try:
        w = math.exp(t.tw) * wa
        h = math.exp(t.th) * ha
    except OverflowError as exc:
        raise ValueError(f"decoded size overflows: tw={t.tw} th={t.th}") from exc
    cx = t.tx * wa + cxa
    cy = t.ty * ha + cya
    coords = (cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    if not all(math.isfinite(c) for c in coords):
        raise ValueError(f"decoded box is not finite: {coords}")
    return Box(*coords)
