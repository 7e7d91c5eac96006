"""Command line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import List, Optional

import numpy as np

from . import datasets, messages
from .backend import image as I
from .backend.boxes import AnchorSet
from .datasets import BatchPlan, content_checksum
from .errors import ArityMismatch, ConfigError, InvalidParam, PerceptError, UnknownProcessorType
from .pipelines import postprocess_detections
from .registry import load_pipeline
from .rng import MASK64, RngStream

IMAGE_SUFFIXES = (".ppm", ".png")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(path):
    try:
        return load_pipeline(path)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    except (ConfigError, UnknownProcessorType, InvalidParam, ArityMismatch) as exc:
        raise UsageError(f"invalid pipeline config {path}: {exc}") from exc


def _read_json(path, what):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as exc:
        raise DataError(f"cannot read {what} file {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{what} file {path} is not valid JSON: {exc}") from exc


def _same_path(a, b):
    return os.path.abspath(a) == os.path.abspath(b)


def class_color(class_name: str) -> tuple:
    """Stable RGB color for a class name."""
    digest = hashlib.blake2b(class_name.encode("utf-8"), digest_size=3).digest()
    return tuple(digest)


# ---------------------------------------------------------------- augment

def cmd_augment(args, out) -> None:
    pipeline = _load_config(args.config)
    if not os.path.isdir(args.input):
        raise UsageError(f"input directory {args.input} does not exist")
    if _same_path(args.input, args.output):
        raise UsageError("output directory must differ from the input directory")
    names = sorted(n for n in os.listdir(args.input)
                   if n.lower().endswith(IMAGE_SUFFIXES) and os.path.isfile(os.path.join(args.input, n)))
    if not names:
        raise DataError(f"no .ppm or .png images in {args.input}")

    images = {}
    for name in names:
        try:
            images[name] = I.load_image(os.path.join(args.input, name))
        except (OSError, PerceptError) as exc:
            raise DataError(f"cannot read image {name}: {exc}") from exc

    root = RngStream(args.seed & MASK64)
    results = {}
    for name in names:
        try:
            packet = pipeline.apply((images[name],), root.fork(name))
            results[name] = I.check_image(packet[0])
        except (PerceptError, ValueError) as exc:
            raise DataError(f"{name}: {exc}") from exc

    os.makedirs(args.output, exist_ok=True)
    for name in names:
        result = results[name]
        I.save_image(result, os.path.join(args.output, name))
        h, w = result.shape[:2]
        out.write(f"{name}\t{w}x{h}\t{content_checksum([result]):016x}\n")


# ---------------------------------------------------------------- postprocess

def cmd_postprocess(args, out) -> None:
    if not 0.0 <= args.iou <= 1.0:
        raise UsageError("--iou must lie in [0, 1]")
    if args.top_k < 1 or args.image_width < 1 or args.image_height < 1:
        raise UsageError("--top-k, --image-width and --image-height must be positive")

    try:
        anchors = AnchorSet.from_json(_read_json(args.anchors, "anchors"))
    except (ValueError, TypeError) as exc:
        raise DataError(f"invalid anchors file {args.anchors}: {exc}") from exc
    classes = _read_json(args.classes, "classes")
    if (not isinstance(classes, dict) or not isinstance(classes.get("classes"), list)
            or not all(isinstance(c, str) for c in classes["classes"]) or len(classes["classes"]) < 2):
        raise DataError('classes file must be {"classes": ["background", ...]} with at least one class')
    class_names = classes["classes"]

    document = _read_json(args.scores, "scores")
    try:
        raw = np.asarray(document, dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise DataError(f"scores file must hold a rectangular numeric matrix: {exc}") from exc
    expected = 4 + len(class_names)
    if raw.ndim != 2 or raw.shape != (len(anchors), expected):
        raise DataError(f"scores shape {raw.shape} does not match {len(anchors)} anchors x {expected} columns")
    if not np.all(np.isfinite(raw)):
        raise DataError("scores contain non-finite values")

    detections = postprocess_detections(raw, anchors, class_names, args.image_width, args.image_height,
                                        args.iou, args.score, args.top_k)
    messages.write_messages(detections, out)


# ---------------------------------------------------------------- draw

def cmd_draw(args, out) -> None:
    if _same_path(args.image, args.out):
        raise UsageError("--out must differ from --image")
    if args.thickness < 1:
        raise UsageError("--thickness must be at least 1")
    try:
        canvas = I.load_image(args.image)
    except (OSError, PerceptError) as exc:
        raise DataError(f"cannot read image {args.image}: {exc}") from exc
    try:
        boxes = messages.read_messages(args.boxes)
    except OSError as exc:
        raise DataError(f"cannot read boxes file {args.boxes}: {exc.strerror}") from exc
    except PerceptError as exc:
        raise DataError(f"{args.boxes}: {exc}") from exc
    for msg in boxes:
        if not isinstance(msg, messages.Box2D):
            raise DataError(f"{args.boxes}: expected Box2D messages, found {type(msg).__name__}")
        canvas = I.draw_box(canvas, msg.coordinates, class_color(msg.class_name), args.thickness)
    I.save_image(canvas, args.out)


# ---------------------------------------------------------------- batch-inspect

def _shape(array):
    return "x".join(str(d) for d in array.shape) or "scalar"


def cmd_batch_inspect(args, out) -> None:
    if args.batch_size < 1 or args.epochs < 1:
        raise UsageError("--batch-size and --epochs must be positive")
    pipeline = _load_config(args.config)
    try:
        manifest = datasets.load_manifest(args.manifest)
    except OSError as exc:
        raise DataError(f"cannot read manifest {args.manifest}: {exc.strerror}") from exc
    except PerceptError as exc:
        raise DataError(f"{args.manifest}: {exc}") from exc

    lines = []
    try:
        for epoch in range(args.epochs):
            plan = BatchPlan(args.seed & MASK64, args.batch_size, args.drop_last, epoch)
            for batch in datasets.batches(manifest, pipeline, plan, workers=args.workers):
                per_sample = [content_checksum([a[j] for a in batch.outputs]) for j in range(len(batch))]
                lines.append("\t".join([
                    f"epoch={epoch}",
                    f"batch={batch.index}",
                    "samples=" + ",".join(map(str, batch.sample_indices)),
                    "shapes=" + ";".join(_shape(a) for a in batch.outputs),
                    f"checksum={content_checksum(batch.outputs):016x}",
                    "sample_checksums=" + ",".join(f"{c:016x}" for c in per_sample),
                ]))
    except PerceptError as exc:
        raise DataError(str(exc)) from exc
    out.write("".join(line + "\n" for line in lines))


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="percept", description="Perception pipelines over files.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("augment", help="run a processor pipeline over a directory of images")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--input", required=True, help="directory of .ppm/.png images")
    p.add_argument("--output", required=True, help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_augment)

    p = sub.add_parser("postprocess", help="decode recorded detector output into Box2D lines")
    p.add_argument("--scores", required=True, help="JSON N x (4 + C) matrix")
    p.add_argument("--anchors", required=True, help="anchor JSON file")
    p.add_argument("--classes", required=True, help='{"classes": ["background", ...]}')
    p.add_argument("--iou", type=float, default=0.45)
    p.add_argument("--score", type=float, default=0.45)
    p.add_argument("--top-k", type=int, default=200)
    p.add_argument("--image-width", type=int, required=True)
    p.add_argument("--image-height", type=int, required=True)
    p.set_defaults(handler=cmd_postprocess)

    p = sub.add_parser("draw", help="draw Box2D messages onto an image")
    p.add_argument("--image", required=True)
    p.add_argument("--boxes", required=True, help="Box2D JSONL file")
    p.add_argument("--out", required=True)
    p.add_argument("--thickness", type=int, default=1)
    p.set_defaults(handler=cmd_draw)

    p = sub.add_parser("batch-inspect", help="summarize the batches a manifest and pipeline produce")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--batch-size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--drop-last", action="store_true")
    p.add_argument("--workers", type=int, default=1, help="threads per batch; output is unaffected")
    p.set_defaults(handler=cmd_batch_inspect)
    return parser


def main(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.handler(args, stdout)
    except UsageError as exc:
        stderr.write(f"percept {args.command}: {exc}\n")
        return 1
    except DataError as exc:
        stderr.write(f"percept {args.command}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
