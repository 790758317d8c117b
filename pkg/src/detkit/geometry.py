"""Axis-aligned rectangle arithmetic shared by every other module."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Box:
    """Rectangle in continuous pixel coordinates, corner form.

    Degenerate (zero-area) boxes are allowed; negative extents are not.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        for v in (self.x1, self.y1, self.x2, self.y2):
            if not math.isfinite(v):
                raise ValueError(f"box coordinates must be finite, got {self}")
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(f"box has negative extent: {self}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def center(self) -> tuple[float, float]:
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0


@dataclass(frozen=True, slots=True)
class ImageSize:
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive, got {self}")


def area(b: Box) -> float:
    """Area of a box; zero for degenerate boxes."""
    return b.width * b.height


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union in [0, 1]; 0 when the union has zero area."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix1
    ih = iy2 - iy1
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = area(a) + area(b) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def clip(b: Box, s: ImageSize) -> Box:
    """Clamp all coordinates into [0, width] x [0, height]."""
    x1 = min(max(b.x1, 0.0), float(s.width))
    y1 = min(max(b.y1, 0.0), float(s.height))
    x2 = min(max(b.x2, 0.0), float(s.width))
    y2 = min(max(b.y2, 0.0), float(s.height))
    return Box(x1, y1, x2, y2)


def rescale(b: Box, factor: float) -> Box:
    """Multiply all four coordinates by a positive factor."""
    if factor <= 0.0:
        raise ValueError(f"rescale factor must be positive, got {factor}")
    return Box(b.x1 * factor, b.y1 * factor, b.x2 * factor, b.y2 * factor)


def is_small(b: Box, threshold: float = 16.0) -> bool:
    """True iff either side is strictly below the threshold (default 16 px)."""
    return b.width < threshold or b.height < threshold
