"""Readers and writers for WIDER-FACE-style annotation, detection and
subset-list text files."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from .geometry import Box
from .postprocess import Detection
from .targets import GroundTruth


class ParseError(ValueError):
    """Malformed file content, positioned by line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class FaceAnnotation:
    x: int
    y: int
    w: int
    h: int
    blur: int = 0
    expression: int = 0
    illumination: int = 0
    invalid: int = 0
    occlusion: int = 0
    pose: int = 0

    def to_box(self) -> Box:
        return Box(float(self.x), float(self.y), float(self.x + self.w), float(self.y + self.h))

    def to_ground_truth(self) -> GroundTruth:
        return GroundTruth(box=self.to_box(), invalid=bool(self.invalid))


@dataclass
class AnnotationRecord:
    image_path: str
    faces: list[FaceAnnotation] = field(default_factory=list)


@dataclass
class DetectionRecord:
    image_name: str
    detections: list[Detection] = field(default_factory=list)
    dropped: int = 0  # non-positive-size boxes silently skipped on read


_ZERO_PAD = ("0",) * 10


def _lines(stream: IO[str]) -> list[str]:
    return stream.read().splitlines()


def read_annotations(stream: IO[str]) -> list[AnnotationRecord]:
    """Parse the WIDER ground-truth format.

    Layout per record: image path line, face-count line, then count lines of
    10 space-separated integers. Zero-count records may carry one all-zero
    padding line (the official files do); it is accepted and skipped.
    """
    lines = _lines(stream)
    records: list[AnnotationRecord] = []
    i = 0
    while i < len(lines):
        path = lines[i].strip()
        if not path:
            i += 1
            continue
        path_line = i + 1
        i += 1
        if i >= len(lines):
            raise ParseError(path_line, f"missing face count after image {path!r}")
        count_str = lines[i].strip()
        try:
            count = int(count_str)
        except ValueError:
            raise ParseError(i + 1, f"bad face count {count_str!r} for image {path!r}") from None
        if count < 0:
            raise ParseError(i + 1, f"negative face count for image {path!r}")
        i += 1
        faces = []
        for k in range(count):
            if i >= len(lines):
                raise ParseError(i, f"truncated: image {path!r} promises {count} faces, got {k}")
            fields = lines[i].split()
            if len(fields) != 10:
                raise ParseError(i + 1, f"expected 10 fields, got {len(fields)}")
            try:
                nums = [int(f) for f in fields]
            except ValueError:
                raise ParseError(i + 1, f"non-integer face field in {lines[i]!r}") from None
            if nums[2] < 0 or nums[3] < 0:
                raise ParseError(i + 1, f"negative face size {nums[2]}x{nums[3]}")
            faces.append(FaceAnnotation(*nums))
            i += 1
        if count == 0 and i < len(lines) and tuple(lines[i].split()) == _ZERO_PAD:
            i += 1  # official zero-count padding line
        records.append(AnnotationRecord(image_path=path, faces=faces))
    return records


def read_detections(stream: IO[str]) -> list[DetectionRecord]:
    """Parse the WIDER detection/submission format: image name line, count
    line, then count lines of "x y w h score". Boxes with non-positive width
    or height are dropped and counted in ``DetectionRecord.dropped``."""
    lines = _lines(stream)
    records: list[DetectionRecord] = []
    i = 0
    while i < len(lines):
        name = lines[i].strip()
        if not name:
            i += 1
            continue
        name_line = i + 1
        i += 1
        if i >= len(lines):
            raise ParseError(name_line, f"missing detection count after image {name!r}")
        count_str = lines[i].strip()
        try:
            count = int(count_str)
        except ValueError:
            raise ParseError(i + 1,
                             f"bad detection count {count_str!r} for image {name!r}") from None
        if count < 0:
            raise ParseError(i + 1, f"negative detection count for image {name!r}")
        i += 1
        rec = DetectionRecord(image_name=name)
        for k in range(count):
            if i >= len(lines):
                raise ParseError(i, f"truncated: image {name!r} promises {count} detections, "
                                    f"got {k}")
            fields = lines[i].split()
            if len(fields) != 5:
                raise ParseError(i + 1, f"expected 5 fields, got {len(fields)}")
            try:
                x, y, w, h, score = (float(f) for f in fields)
            except ValueError:
                raise ParseError(i + 1, f"non-numeric detection field in {lines[i]!r}") from None
            if not all(map(math.isfinite, (x, y, w, h, score))):
                raise ParseError(i + 1, f"non-finite detection field in {lines[i]!r}")
            if not 0.0 <= score <= 1.0:
                raise ParseError(i + 1, f"score {score} outside [0, 1]")
            if w <= 0 or h <= 0:
                rec.dropped += 1
            else:
                rec.detections.append(Detection(box=Box(x, y, x + w, y + h), score=score))
            i += 1
        records.append(rec)
    return records


def write_detections(records: Iterable[DetectionRecord], stream: IO[str]) -> None:
    """Emit the WIDER submission layout, scores at 6 decimal places, LF."""
    for rec in records:
        stream.write(f"{rec.image_name}\n{len(rec.detections)}\n")
        for d in rec.detections:
            b = d.box
            stream.write(f"{_num(b.x1)} {_num(b.y1)} {_num(b.x2 - b.x1)} "
                         f"{_num(b.y2 - b.y1)} {d.score:.6f}\n")


def _num(v: float) -> str:
    # shortest exact decimal so read/write round-trips bit-identically
    return repr(float(v))


def read_subset_list(stream: IO[str]) -> list[str]:
    """One image name per line; ordered, duplicates collapsed."""
    seen = set()
    out = []
    for line in _lines(stream):
        name = line.strip()
        if name and name not in seen:
            seen.add(name)
            out.append(name)
    return out
