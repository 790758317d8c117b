"""Inference-side selection and suppression: top-K, greedy NMS, the
companion consensus filter, and the multi-scale voted-NMS ensemble."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from numba import njit

from .geometry import Box, ImageSize, clip, rescale


@dataclass(frozen=True)
class Detection:
    box: Box
    score: float
    source_scale: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        if self.source_scale is not None and self.source_scale <= 0:
            raise ValueError(f"source_scale must be positive, got {self.source_scale}")


DEFAULT_TEST_SCALES = (600, 800, 1000, 1200, 1400)


@dataclass(frozen=True)
class EnsembleConfig:
    companion_iou: float = 0.3
    min_companions: int = 1
    nms_iou: float = 0.3
    scales: tuple[int, ...] = DEFAULT_TEST_SCALES
    vote_coordinates: bool = False

    def __post_init__(self) -> None:
        for name, t in (("companion_iou", self.companion_iou), ("nms_iou", self.nms_iou)):
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {t}")
        if self.min_companions < 0:
            raise ValueError(f"min_companions must be >= 0, got {self.min_companions}")
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ValueError(f"scales must be non-empty and positive, got {self.scales}")


def _boxes_array(dets: Sequence[Detection]) -> np.ndarray:
    return np.fromiter(
        (c for d in dets for c in (d.box.x1, d.box.y1, d.box.x2, d.box.y2)),
        dtype=np.float64, count=4 * len(dets)).reshape(len(dets), 4)


def _pairwise_iou(boxes: np.ndarray) -> np.ndarray:
    x1, y1, x2, y2 = boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3]
    areas = (x2 - x1) * (y2 - y1)
    ix1 = np.maximum(x1[:, None], x1[None, :])
    iy1 = np.maximum(y1[:, None], y1[None, :])
    ix2 = np.minimum(x2[:, None], x2[None, :])
    iy2 = np.minimum(y2[:, None], y2[None, :])
    inter = np.maximum(ix2 - ix1, 0.0) * np.maximum(iy2 - iy1, 0.0)
    union = areas[:, None] + areas[None, :] - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(union > 0.0, inter / np.maximum(union, 1e-300), 0.0)
    return out


def _descending_order(dets: Sequence[Detection]) -> np.ndarray:
    """Indices by descending score, stable so ties keep input order."""
    scores = np.array([d.score for d in dets], dtype=np.float64)
    return np.argsort(-scores, kind="stable")


def top_k(dets: Sequence[Detection], k: int = 6000) -> list[Detection]:
    """The k highest-scoring detections, score-sorted, no suppression."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    order = _descending_order(dets)
    return [dets[i] for i in order[:k]]


@njit(cache=True)
def _nms_kernel(boxes: np.ndarray, order: np.ndarray, thresh: float) -> np.ndarray:
    """Greedy NMS with kept boxes bucketed by center cell.

    A candidate is suppressed iff it overlaps an already-kept box above the
    threshold, so only kept boxes in the 3x3 cell neighborhood of the
    candidate's center need checking (cell side >= the largest box side).
    """
    n = order.shape[0]
    x1, y1, x2, y2 = boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3]
    minx, miny = x1.min(), y1.min()
    maxx, maxy = x2.max(), y2.max()
    side = 1e-9
    for i in range(n):
        side = max(side, x2[i] - x1[i], y2[i] - y1[i])
    # cell side >= largest box side, grid capped at 512x512
    cell = max(side, (maxx - minx) / 512.0, (maxy - miny) / 512.0)
    gx = int((maxx - minx) / cell) + 1
    gy = int((maxy - miny) / cell) + 1
    head = np.full(gx * gy, -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    keep = np.empty(n, dtype=np.int64)
    # kept boxes packed by keep slot so the hot loop stays cache-local
    kx1 = np.empty(n)
    ky1 = np.empty(n)
    kx2 = np.empty(n)
    ky2 = np.empty(n)
    karea = np.empty(n)
    nk = 0
    for oi in range(n):
        i = order[oi]
        bx1, by1, bx2, by2 = x1[i], y1[i], x2[i], y2[i]
        barea = (bx2 - bx1) * (by2 - by1)
        ci = int(((bx1 + bx2) * 0.5 - minx) / cell)
        cj = int(((by1 + by2) * 0.5 - miny) / cell)
        suppressed = False
        for off in range(9):
            # center cell first: suppressors are usually nearby
            dj = (0, 0, 0, -1, -1, -1, 1, 1, 1)[off]
            di = (0, -1, 1, 0, -1, 1, 0, -1, 1)[off]
            jj = cj + dj
            ii = ci + di
            if jj < 0 or jj >= gy or ii < 0 or ii >= gx:
                continue
            k = head[jj * gx + ii]
            while k != -1:
                ix1 = max(bx1, kx1[k])
                iy1 = max(by1, ky1[k])
                ix2 = min(bx2, kx2[k])
                iy2 = min(by2, ky2[k])
                iw, ih = ix2 - ix1, iy2 - iy1
                if iw > 0.0 and ih > 0.0:
                    inter = iw * ih
                    union = barea + karea[k] - inter
                    if union > 0.0 and inter / union > thresh:
                        suppressed = True
                        break
                k = nxt[k]
            if suppressed:
                break
        if not suppressed:
            keep[nk] = i
            kx1[nk], ky1[nk], kx2[nk], ky2[nk], karea[nk] = bx1, by1, bx2, by2, barea
            c = cj * gx + ci
            nxt[nk] = head[c]
            head[c] = nk
            nk += 1
    return keep[:nk]


def greedy_nms(dets: Sequence[Detection], iou_thresh: float) -> list[Detection]:
    """Classic greedy suppression, output in keep order (descending score)."""
    if not 0.0 <= iou_thresh <= 1.0:
        raise ValueError(f"iou_thresh must be in [0, 1], got {iou_thresh}")
    if not dets:
        return []
    keep = _nms_kernel(_boxes_array(dets), _descending_order(dets), iou_thresh)
    return [dets[i] for i in keep]


def companion_filter(
    dets: Sequence[Detection],
    iou: float = 0.3,
    min_companions: int = 1,
) -> list[Detection]:
    """Keep a detection iff at least ``min_companions`` OTHER detections
    overlap it at IoU >= ``iou``; order preserved. 0 companions disables."""
    if not 0.0 <= iou <= 1.0:
        raise ValueError(f"iou must be in [0, 1], got {iou}")
    if min_companions == 0 or not dets:
        return list(dets)
    overlaps = _pairwise_iou(_boxes_array(dets))
    np.fill_diagonal(overlaps, 0.0)
    counts = (overlaps >= iou).sum(axis=1)
    return [d for d, c in zip(dets, counts) if c >= min_companions]


def voted_ensemble(
    per_scale: Mapping[int, Sequence[Detection]],
    original: ImageSize,
    cfg: EnsembleConfig,
) -> list[Detection]:
    """Merge per-scale detections into final boxes in original coordinates.

    Rescale by shorter-side factor, concatenate ascending by scale, apply the
    companion filter, greedy NMS, then clip to the image. When
    ``cfg.vote_coordinates`` is on, each kept box's coordinates are replaced
    by the score-weighted mean of the merged boxes overlapping it at the NMS
    threshold (classic box voting).
    """
    shorter = min(original.width, original.height)
    merged: list[Detection] = []
    for scale in sorted(per_scale):
        if scale not in cfg.scales:
            raise ValueError(f"detections tagged with unknown scale {scale}")
        factor = shorter / scale
        for d in per_scale[scale]:
            if d.source_scale is not None and d.source_scale != scale:
                raise ValueError(
                    f"detection tagged with scale {d.source_scale} listed under {scale}")
            merged.append(Detection(box=rescale(d.box, factor), score=d.score,
                                    source_scale=scale))

    voted = companion_filter(merged, cfg.companion_iou, cfg.min_companions)
    kept = greedy_nms(voted, cfg.nms_iou)

    if cfg.vote_coordinates and kept:
        kept = _vote_coordinates(kept, voted, cfg.nms_iou)
    return [Detection(box=clip(d.box, original), score=d.score) for d in kept]


def _vote_coordinates(
    kept: Sequence[Detection], pool: Sequence[Detection], iou_thresh: float
) -> list[Detection]:
    pool_boxes = _boxes_array(pool)
    pool_scores = np.array([d.score for d in pool], dtype=np.float64)
    out = []
    for d in kept:
        both = _pairwise_iou(np.vstack([_boxes_array([d]), pool_boxes]))[0, 1:]
        mask = both >= iou_thresh
        if not mask.any():
            out.append(d)
            continue
        w = pool_scores[mask]
        coords = (pool_boxes[mask] * w[:, None]).sum(axis=0) / w.sum()
        out.append(Detection(box=Box(*coords), score=d.score))
    return out
