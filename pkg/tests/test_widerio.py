import io
import random

import pytest

from detkit.geometry import Box
from detkit.postprocess import Detection
from detkit.widerio import (AnnotationRecord, DetectionRecord, FaceAnnotation,
                            ParseError, read_annotations, read_detections,
                            read_subset_list, write_detections)


def _parse_ann(text):
    return read_annotations(io.StringIO(text))


def _parse_det(text):
    return read_detections(io.StringIO(text))


class TestReadAnnotations:
    def test_single_face(self):
        recs = _parse_ann("a/b.jpg\n1\n10 20 30 40 0 0 0 0 0 0\n")
        assert len(recs) == 1
        assert recs[0].image_path == "a/b.jpg"
        assert recs[0].faces[0].to_box() == Box(10, 20, 40, 60)

    def test_invalid_flag(self):
        recs = _parse_ann("a.jpg\n1\n0 0 5 5 0 0 0 1 0 0\n")
        assert recs[0].faces[0].to_ground_truth().invalid

    def test_zero_faces_with_padding_line(self):
        recs = _parse_ann("a/b.jpg\n0\n0 0 0 0 0 0 0 0 0 0\nc/d.jpg\n1\n"
                          "1 1 2 2 0 0 0 0 0 0\n")
        assert [r.image_path for r in recs] == ["a/b.jpg", "c/d.jpg"]
        assert recs[0].faces == []

    def test_zero_faces_without_padding_line(self):
        recs = _parse_ann("a.jpg\n0\nb.jpg\n0\n")
        assert [r.image_path for r in recs] == ["a.jpg", "b.jpg"]

    def test_empty_stream(self):
        assert _parse_ann("") == []

    def test_crlf_accepted(self):
        recs = _parse_ann("a.jpg\r\n1\r\n1 2 3 4 0 0 0 0 0 0\r\n")
        assert recs[0].faces[0].to_box() == Box(1, 2, 4, 6)

    def test_multiple_records(self):
        recs = _parse_ann("x.jpg\n2\n0 0 1 1 0 0 0 0 0 0\n5 5 2 2 0 0 0 0 0 0\n"
                          "y.jpg\n1\n9 9 1 1 0 0 0 0 0 0\n")
        assert len(recs) == 2
        assert len(recs[0].faces) == 2


class TestReadDetections:
    def test_single(self):
        recs = _parse_det("img\n1\n0 0 10 10 0.9\n")
        assert recs[0].image_name == "img"
        d = recs[0].detections[0]
        assert d.box == Box(0, 0, 10, 10)
        assert d.score == 0.9

    def test_non_positive_size_dropped(self):
        recs = _parse_det("img\n2\n0 0 0 10 0.9\n0 0 10 10 0.5\n")
        assert len(recs[0].detections) == 1
        assert recs[0].dropped == 1

    def test_truncated_names_image(self):
        with pytest.raises(ParseError, match="img"):
            _parse_det("img\n2\n0 0 10 10 0.9\n")


class TestWriteDetections:
    def test_layout(self):
        rec = DetectionRecord(image_name="img",
                              detections=[Detection(Box(0, 0, 10, 10), 0.9)])
        out = io.StringIO()
        write_detections([rec], out)
        assert out.getvalue() == "img\n1\n0.0 0.0 10.0 10.0 0.900000\n"

    def test_round_trip_random(self):
        rng = random.Random(41)
        records = []
        for i in range(20):
            dets = []
            for _ in range(rng.randint(0, 10)):
                x = round(rng.uniform(0, 500), 3)
                y = round(rng.uniform(0, 500), 3)
                w = round(rng.uniform(0.5, 200), 3)
                h = round(rng.uniform(0.5, 200), 3)
                dets.append(Detection(Box(x, y, x + w, y + h),
                                      round(rng.random(), 6)))
            records.append(DetectionRecord(image_name=f"scene/im{i}.jpg",
                                           detections=dets))
        out = io.StringIO()
        write_detections(records, out)
        back = _parse_det(out.getvalue())
        assert back == records

    def test_write_read_write_is_stable(self):
        text = "img\n2\n0 0 10.5 10.25 0.123456\n3 4 5 6 1\n"
        first = _parse_det(text)
        out1 = io.StringIO()
        write_detections(first, out1)
        second = _parse_det(out1.getvalue())
        assert second == first
        out2 = io.StringIO()
        write_detections(second, out2)
        assert out2.getvalue() == out1.getvalue()


class TestSubsetList:
    def test_basic(self):
        assert read_subset_list(io.StringIO("a\nb\n")) == ["a", "b"]

    def test_duplicates_collapsed(self):
        assert read_subset_list(io.StringIO("a\nb\na\n")) == ["a", "b"]

    def test_empty(self):
        assert read_subset_list(io.StringIO("")) == []

    def test_blank_lines_skipped(self):
        assert read_subset_list(io.StringIO("\na\n\nb\n")) == ["a", "b"]


MALFORMED_ANNOTATIONS = [
    ("missing count", "a.jpg\n"),
    ("non-integer count", "a.jpg\nxyz\n"),
    ("negative count", "a.jpg\n-1\n"),
    ("too few fields", "a.jpg\n1\n1 2 3 4\n"),
    ("too many fields", "a.jpg\n1\n1 2 3 4 5 6 7 8 9 10 11\n"),
    ("non-integer field", "a.jpg\n1\n1 2 3.5 4 0 0 0 0 0 0\n"),
    ("negative size", "a.jpg\n1\n1 2 -3 4 0 0 0 0 0 0\n"),
    ("truncated faces", "a.jpg\n2\n1 2 3 4 0 0 0 0 0 0\n"),
]

MALFORMED_DETECTIONS = [
    ("missing count", "img\n"),
    ("bad count", "img\nfoo\n"),
    ("wrong arity", "img\n1\n1 2 3\n"),
    ("non-numeric", "img\n1\n1 2 3 4 high\n"),
    ("nan score", "img\n1\n1 2 3 4 nan\n"),
    ("score out of range", "img\n1\n1 2 3 4 1.5\n"),
    ("truncated", "img\n3\n1 2 3 4 0.5\n"),
]


@pytest.mark.parametrize("label,text", MALFORMED_ANNOTATIONS,
                         ids=[l for l, _ in MALFORMED_ANNOTATIONS])
def test_malformed_annotations_raise_positioned_error(label, text):
    with pytest.raises(ParseError, match=r"line \d+"):
        _parse_ann(text)


@pytest.mark.parametrize("label,text", MALFORMED_DETECTIONS,
                         ids=[l for l, _ in MALFORMED_DETECTIONS])
def test_malformed_detections_raise_positioned_error(label, text):
    with pytest.raises(ParseError, match=r"line \d+"):
        _parse_det(text)


def test_annotation_text_round_trip():
    # render the parsed model back to WIDER layout and re-parse
    rng = random.Random(43)
    records = []
    for i in range(10):
        faces = [FaceAnnotation(rng.randint(0, 500), rng.randint(0, 500),
                                rng.randint(0, 80), rng.randint(0, 80),
                                rng.randint(0, 2), rng.randint(0, 1),
                                rng.randint(0, 1), rng.randint(0, 1),
                                rng.randint(0, 2), rng.randint(0, 1))
                 for _ in range(rng.randint(0, 6))]
        records.append(AnnotationRecord(image_path=f"s/im{i}.jpg", faces=faces))
    text = "".join(
        f"{r.image_path}\n{len(r.faces)}\n" +
        "".join(f"{f.x} {f.y} {f.w} {f.h} {f.blur} {f.expression} "
                f"{f.illumination} {f.invalid} {f.occlusion} {f.pose}\n"
                for f in r.faces)
        for r in records)
    assert _parse_ann(text) == records
