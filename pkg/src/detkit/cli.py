"""Command-line front end: anchors, nms, ensemble, eval, assign."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import anchors as anchor_mod
from . import evaluation, postprocess, targets, widerio
from .geometry import Box, ImageSize


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detkit",
        description="Detection post-processing and evaluation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("anchors", help="dump a dense anchor grid as CSV")
    p.add_argument("--stride", type=int, default=16,
                   help="feature stride in pixels (default 16)")
    p.add_argument("--scales", type=_float_list, default=anchor_mod.DEFAULT_SCALES,
                   help="comma-separated anchor scales (default 16,32,64,128,256,512)")
    p.add_argument("--ratios", type=_float_list, default=anchor_mod.DEFAULT_RATIOS,
                   help="comma-separated height/width ratios (default 1,1.5,2)")
    p.add_argument("--feat-width", type=int, default=1)
    p.add_argument("--feat-height", type=int, default=1)
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("nms", help="top-k selection and optional greedy NMS "
                                   "over a detection file")
    p.add_argument("input", type=Path)
    p.add_argument("--top-k", type=int, default=6000,
                   help="keep the k best-scoring detections per image (default 6000)")
    p.add_argument("--iou", type=float, default=None,
                   help="NMS IoU threshold; omit to select top-k only, no NMS")
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("ensemble", help="merge per-scale detection files with "
                                        "the voted-NMS strategy")
    p.add_argument("inputs", type=Path, nargs="+",
                   help="one detection file per test scale, ordered as --scales")
    p.add_argument("--scales", type=_int_list, default=postprocess.DEFAULT_TEST_SCALES,
                   help="shorter-side test scales (default 600,800,1000,1200,1400)")
    p.add_argument("--orig-sizes", type=Path, required=True,
                   help='file of "image width height" lines with original sizes')
    p.add_argument("--companion-iou", type=float, default=0.3,
                   help="consensus IoU for the pre-NMS companion filter (default 0.3)")
    p.add_argument("--min-companions", type=int, default=1,
                   help="companions required to keep a box; 0 disables (default 1)")
    p.add_argument("--nms-iou", type=float, default=0.3,
                   help="final NMS IoU threshold (default 0.3)")
    p.add_argument("--vote-coordinates", action="store_true",
                   help="score-weighted coordinate averaging of merged boxes")
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("eval", help="precision/recall evaluation against WIDER-style GT")
    p.add_argument("detections", type=Path)
    p.add_argument("ground_truth", type=Path)
    p.add_argument("--subset", action="append", default=[], metavar="NAME=LISTFILE",
                   help="named image-list subset; repeatable (default: all GT images)")
    p.add_argument("--iou", type=float, default=0.5,
                   help="matching IoU threshold (default 0.5)")
    p.add_argument("--ap-mode", choices=["exact", "sampled1000"], default="exact",
                   help="exact AUC or 1000-threshold sampled AP (default exact)")
    p.add_argument("--report-out", type=Path, required=True,
                   help="CSV: subset,ap,num_gts,num_dets")
    p.add_argument("--pr-out", type=Path, default=None,
                   help="CSV: subset,recall,precision")

    p = sub.add_parser("assign", help="RPN/R-CNN label assignment over CSV "
                                      "anchor and GT files")
    p.add_argument("anchors", type=Path, help="CSV of x1,y1,x2,y2 rows")
    p.add_argument("ground_truth", type=Path, help="CSV of x1,y1,x2,y2,invalid rows")
    p.add_argument("--stage", choices=["rpn", "rcnn"], default="rpn")
    p.add_argument("--pos-thresh", type=float, default=None,
                   help="positive IoU threshold (default 0.7 rpn, 0.5 rcnn)")
    p.add_argument("--neg-thresh", type=float, default=0.3,
                   help="negative IoU threshold (default 0.3)")
    p.add_argument("--batch", type=int, default=None,
                   help="also sample a minibatch of this size (256 RPN / 128 R-CNN)")
    p.add_argument("--pos-fraction", type=float, default=None,
                   help="positive share of the minibatch (default 0.5 rpn, 0.25 rcnn)")
    p.add_argument("--seed", type=int, default=0,
                   help="sampling seed (default 0, byte-reproducible)")
    p.add_argument("-o", "--output", type=Path, required=True)

    return parser


def cmd_anchors(args: argparse.Namespace) -> None:
    cfg = anchor_mod.AnchorConfig(stride=args.stride, scales=args.scales,
                                  ratios=args.ratios)
    grid = anchor_mod.grid_anchors(cfg, args.feat_width, args.feat_height)
    with args.output.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "y1", "x2", "y2"])
        for b in grid.anchors:
            writer.writerow([repr(b.x1), repr(b.y1), repr(b.x2), repr(b.y2)])


def cmd_nms(args: argparse.Namespace) -> None:
    with args.input.open() as fh:
        records = widerio.read_detections(fh)
    out = []
    for rec in records:
        kept = postprocess.top_k(rec.detections, args.top_k)
        if args.iou is not None:
            kept = postprocess.greedy_nms(kept, args.iou)
        out.append(widerio.DetectionRecord(image_name=rec.image_name, detections=kept))
    with args.output.open("w") as fh:
        widerio.write_detections(out, fh)


def _read_sizes(path: Path) -> dict[str, ImageSize]:
    sizes = {}
    with path.open() as fh:
        for ln, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 3:
                raise widerio.ParseError(ln, f"expected 'image width height', got {line!r}")
            try:
                sizes[fields[0]] = ImageSize(int(fields[1]), int(fields[2]))
            except ValueError as exc:
                raise widerio.ParseError(ln, str(exc)) from None
    return sizes


def cmd_ensemble(args: argparse.Namespace) -> None:
    if len(args.inputs) != len(args.scales):
        raise SystemExit(f"error: {len(args.inputs)} input files for "
                         f"{len(args.scales)} scales")
    sizes = _read_sizes(args.orig_sizes)
    cfg = postprocess.EnsembleConfig(
        companion_iou=args.companion_iou,
        min_companions=args.min_companions,
        nms_iou=args.nms_iou,
        scales=tuple(args.scales),
        vote_coordinates=args.vote_coordinates,
    )
    per_image: dict[str, dict[int, list[postprocess.Detection]]] = {}
    for path, scale in zip(args.inputs, args.scales):
        with path.open() as fh:
            for rec in widerio.read_detections(fh):
                per_image.setdefault(rec.image_name, {})[scale] = rec.detections
    out = []
    for name in sorted(per_image):
        if name not in sizes:
            raise SystemExit(f"error: {args.orig_sizes}: no original size for image {name!r}")
        merged = postprocess.voted_ensemble(per_image[name], sizes[name], cfg)
        out.append(widerio.DetectionRecord(image_name=name, detections=merged))
    with args.output.open("w") as fh:
        widerio.write_detections(out, fh)


def cmd_eval(args: argparse.Namespace) -> None:
    with args.detections.open() as fh:
        det_records = widerio.read_detections(fh)
    with args.ground_truth.open() as fh:
        gt_records = widerio.read_annotations(fh)
    dets_by_image = {r.image_name: r.detections for r in det_records}
    gts_by_image = {r.image_path: [f.to_ground_truth() for f in r.faces]
                    for r in gt_records}
    if args.subset:
        subsets = {}
        for spec in args.subset:
            name, sep, listfile = spec.partition("=")
            if not sep or not name or not listfile:
                raise SystemExit(f"error: bad --subset {spec!r}, expected NAME=LISTFILE")
            with Path(listfile).open() as fh:
                subsets[name] = widerio.read_subset_list(fh)
    else:
        subsets = {"all": sorted(gts_by_image)}
    sampled = 1000 if args.ap_mode == "sampled1000" else 0
    report = evaluation.evaluate(dets_by_image, gts_by_image, subsets,
                                 iou_thresh=args.iou, sampled_thresholds=sampled)
    with args.report_out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subset", "ap", "num_gts", "num_dets"])
        for name in subsets:
            res = report.subsets[name]
            writer.writerow([name, repr(res.curve.ap), res.num_gts, res.num_dets])
    if args.pr_out is not None:
        with args.pr_out.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["subset", "recall", "precision"])
            for name in subsets:
                for rec, prec in report.subsets[name].curve.points:
                    writer.writerow([name, repr(rec), repr(prec)])


def _read_boxes_csv(path: Path) -> list[list[str]]:
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if rows and not _is_numeric(rows[0][0]):
        rows = rows[1:]  # header
    return rows


def _is_numeric(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def cmd_assign(args: argparse.Namespace) -> None:
    anchor_rows = _read_boxes_csv(args.anchors)
    gt_rows = _read_boxes_csv(args.ground_truth)
    try:
        boxes = [Box(*(float(v) for v in row[:4])) for row in anchor_rows]
        gts = [targets.GroundTruth(
                   box=Box(*(float(v) for v in row[:4])),
                   invalid=bool(int(row[4])) if len(row) > 4 else False)
               for row in gt_rows]
    except (TypeError, ValueError) as exc:
        raise SystemExit(f"error: bad box row: {exc}") from None

    if args.stage == "rpn":
        pos = args.pos_thresh if args.pos_thresh is not None else 0.7
        result = targets.assign_rpn(boxes, gts, hi=pos, lo=args.neg_thresh)
        default_batch, default_frac = 256, 0.5
    else:
        pos = args.pos_thresh if args.pos_thresh is not None else 0.5
        result = targets.assign_rcnn(boxes, gts, pos=pos, lo=args.neg_thresh)
        default_batch, default_frac = 128, 0.25

    sampled: set[int] = set()
    if args.batch is not None or args.pos_fraction is not None:
        batch = args.batch if args.batch is not None else default_batch
        frac = args.pos_fraction if args.pos_fraction is not None else default_frac
        sampled = set(targets.sample_minibatch(result, batch, frac, args.seed))

    with args.output.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["index", "label", "matched_gt", "max_iou"]
        if sampled or args.batch is not None or args.pos_fraction is not None:
            header.append("sampled")
        writer.writerow(header)
        for i, (lab, gt, ov) in enumerate(
                zip(result.labels, result.matched_gt, result.max_iou)):
            row = [i, lab.name, "" if gt is None else gt, repr(ov)]
            if len(header) == 5:
                row.append(1 if i in sampled else 0)
            writer.writerow(row)


_COMMANDS = {
    "anchors": cmd_anchors,
    "nms": cmd_nms,
    "ensemble": cmd_ensemble,
    "eval": cmd_eval,
    "assign": cmd_assign,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 2
        raise
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
