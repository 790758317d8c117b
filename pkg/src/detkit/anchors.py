"""Dense anchor generation over a single stride-16 feature map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Box

DEFAULT_STRIDE = 16
DEFAULT_SCALES = (16.0, 32.0, 64.0, 128.0, 256.0, 512.0)
DEFAULT_RATIOS = (1.0, 1.5, 2.0)


@dataclass(frozen=True)
class AnchorConfig:
    """Stride plus the (scale, ratio) menu defining one anchor set.

    ``scales`` are side lengths of the equivalent-area square; ``ratios``
    are height/width (faces are taller than wide).
    """

    stride: int = DEFAULT_STRIDE
    scales: tuple[float, ...] = DEFAULT_SCALES
    ratios: tuple[float, ...] = DEFAULT_RATIOS

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ValueError(f"scales must be positive, got {self.scales}")
        if any(a >= b for a, b in zip(self.scales, self.scales[1:])):
            raise ValueError(f"scales must be strictly increasing, got {self.scales}")
        if not self.ratios or any(r <= 0 for r in self.ratios):
            raise ValueError(f"ratios must be positive, got {self.ratios}")

    @property
    def anchors_per_cell(self) -> int:
        return len(self.scales) * len(self.ratios)


@dataclass(frozen=True)
class AnchorGrid:
    """All anchors of a feature map, row-major by cell then (scale, ratio)."""

    config: AnchorConfig
    feat_width: int
    feat_height: int
    anchors: list[Box] = field(repr=False)

    def __len__(self) -> int:
        return len(self.anchors)


def base_anchors(config: AnchorConfig) -> list[Box]:
    """One box per (scale, ratio) pair, centered at (stride/2, stride/2).

    Width s/sqrt(r) and height s*sqrt(r), so the area is exactly s^2 and
    the height/width ratio is r. Scales vary in the outer loop.
    """
    cx = cy = config.stride / 2.0
    out = []
    for s in config.scales:
        for r in config.ratios:
            sq = math.sqrt(r)
            w = s / sq
            h = s * sq
            out.append(Box(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0))
    return out


def grid_anchors(config: AnchorConfig, feat_width: int, feat_height: int) -> AnchorGrid:
    """Translate the base set to every grid cell; no clipping applied."""
    if feat_width < 1 or feat_height < 1:
        raise ValueError(f"feature map dims must be >= 1, got {feat_width}x{feat_height}")
    base = base_anchors(config)
    stride = config.stride
    anchors = []
    for row in range(feat_height):
        dy = row * stride
        for col in range(feat_width):
            dx = col * stride
            for b in base:
                anchors.append(Box(b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy))
    return AnchorGrid(config=config, feat_width=feat_width, feat_height=feat_height,
                      anchors=anchors)
