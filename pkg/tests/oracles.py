"""Independent brute-force references used to cross-check the library.

Everything here is deliberately written with plain Python loops and no
shared code paths with the package internals (no numpy vectorization,
no reuse of the package's pairwise helpers).
"""

from __future__ import annotations

from fractions import Fraction


def plain_iou(a, b):
    """Scalar IoU over (x1, y1, x2, y2) tuples."""
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0


def rasterized_iou(a, b, grid=1.0):
    """IoU by counting occupied grid cells; exact for integer boxes at grid=1."""
    cells_a = _cells(a, grid)
    cells_b = _cells(b, grid)
    union = len(cells_a | cells_b)
    if union == 0:
        return 0.0
    return len(cells_a & cells_b) / union


def _cells(box, grid):
    x1, y1, x2, y2 = (int(round(v / grid)) for v in box)
    return {(x, y) for x in range(x1, x2) for y in range(y1, y2)}


def nms_reference(boxes, scores, thresh):
    """O(n^2) greedy NMS; returns kept indices in keep order."""
    order = sorted(range(len(boxes)), key=lambda i: -scores[i])
    alive = [True] * len(boxes)
    keep = []
    for i in order:
        if not alive[i]:
            continue
        keep.append(i)
        for j in order:
            if alive[j] and j != i and plain_iou(boxes[i], boxes[j]) > thresh:
                alive[j] = False
    return keep


def companion_reference(boxes, iou_thresh, min_companions):
    """Indices of boxes with >= min_companions others at IoU >= thresh."""
    if min_companions == 0:
        return list(range(len(boxes)))
    keep = []
    for i, a in enumerate(boxes):
        count = sum(1 for j, b in enumerate(boxes)
                    if j != i and plain_iou(a, b) >= iou_thresh)
        if count >= min_companions:
            keep.append(i)
    return keep


def assign_reference(anchors, gt_boxes, gt_invalid, hi, lo, argmax_rule):
    """Labels ('pos'/'neg'/'ign') by exhaustive search over the IoU table."""
    valid = [g for g, inv in enumerate(gt_invalid) if not inv]
    table = {(a, g): plain_iou(anchors[a], gt_boxes[g])
             for a in range(len(anchors)) for g in valid}
    labels = []
    for a in range(len(anchors)):
        best = max((table[a, g] for g in valid), default=0.0)
        if best >= hi:
            labels.append("pos")
        elif best < lo:
            labels.append("neg")
        else:
            labels.append("ign")
    if argmax_rule:
        for g in valid:
            best = max((table[a, g] for a in range(len(anchors))), default=0.0)
            if best <= 0.0:
                continue
            for a in range(len(anchors)):
                if table[a, g] == best:
                    labels[a] = "pos"
                    break
    return labels


def ap_reference(tp_flags_sorted, total_gt):
    """AP straight from the definition: for every TP, the best precision at
    recall >= its own recall, summed over recall increments. O(n^2), exact
    rational arithmetic."""
    n = len(tp_flags_sorted)
    cum_tp = 0
    cum = []
    for k, tp in enumerate(tp_flags_sorted, start=1):
        cum_tp += 1 if tp else 0
        cum.append((Fraction(cum_tp, total_gt), Fraction(cum_tp, k)))
    ap = Fraction(0)
    prev_recall = Fraction(0)
    for rec, _ in cum:
        if rec == prev_recall:
            continue
        best = max(p for r, p in cum if r >= rec)
        ap += (rec - prev_recall) * best
        prev_recall = rec
    return float(ap)
