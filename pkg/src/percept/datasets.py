"""Generic detection dataset manifest and the deterministic batch dispatcher.

Manifest format (JSON lines, UTF-8)::

    {"classes": {"person": 1, "dog": 2}}
    {"image_path": "img/000.ppm", "boxes": [{"box": [0.1, 0.2, 0.5, 0.9], "class_name": "dog"}]}
    ...

Class id 0 is reserved for background.  Image paths are resolved relative to
the manifest's directory.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

import numpy as np

from .backend.boxes import BoxArray
from .backend.image import load_image
from .errors import MalformedLine, MissingClassHeader, SampleError, ShapeMismatch, UnknownClassName
from .pipeline import SequentialProcessor, call
from .rng import RngStream


@dataclass(frozen=True)
class Sample:
    image_path: str
    boxes: Tuple[Tuple[Tuple[float, float, float, float], str], ...]


@dataclass(frozen=True)
class DatasetManifest:
    class_map: Dict[str, int]
    samples: Tuple[Sample, ...]

    def __len__(self):
        return len(self.samples)

    @property
    def class_names(self) -> List[str]:
        """Names indexed by class id, ``"background"`` at 0."""
        names = ["background"] * (len(self.class_map) + 1)
        for name, index in self.class_map.items():
            names[index] = name
        return names

    def packet(self, index: int) -> tuple:
        """(uint8 image, BoxArray with class ids) for sample ``index``."""
        sample = self.samples[index]
        coords = np.array([box for box, _ in sample.boxes], dtype=np.float64).reshape(-1, 4)
        ids = np.array([self.class_map[name] for _, name in sample.boxes], dtype=np.int64)
        return load_image(sample.image_path), BoxArray(coords, ids)


def _parse_header(document, line):
    if not isinstance(document, dict) or set(document) != {"classes"} or not isinstance(document["classes"], dict):
        raise MissingClassHeader('first line must be {"classes": {name: id, ...}}', line)
    classes = document["classes"]
    for name, index in classes.items():
        if isinstance(index, bool) or not isinstance(index, int):
            raise MalformedLine(f"class id for {name!r} must be an integer", line)
    if sorted(classes.values()) != list(range(1, len(classes) + 1)):
        raise MalformedLine("class ids must be unique and dense from 1 (0 is background)", line)
    return dict(classes)


def _parse_sample(document, line, classes, root):
    if not isinstance(document, dict) or set(document) != {"image_path", "boxes"}:
        raise MalformedLine('sample must have exactly "image_path" and "boxes"', line)
    path, boxes = document["image_path"], document["boxes"]
    if not isinstance(path, str) or not isinstance(boxes, list):
        raise MalformedLine('"image_path" must be a string and "boxes" a list', line)
    parsed = []
    for entry in boxes:
        if not isinstance(entry, dict) or set(entry) != {"box", "class_name"}:
            raise MalformedLine('each box needs exactly "box" and "class_name"', line)
        box, name = entry["box"], entry["class_name"]
        if (not isinstance(box, list) or len(box) != 4
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in box)):
            raise MalformedLine("box must be 4 finite numbers", line)
        x0, y0, x1, y1 = (float(v) for v in box)
        if not (0.0 <= x0 <= x1 <= 1.0 and 0.0 <= y0 <= y1 <= 1.0):
            raise MalformedLine(f"box {box} is not a normalized corner box", line)
        if name not in classes:
            raise UnknownClassName(f"class {name!r} is not declared in the header", line)
        parsed.append(((x0, y0, x1, y1), name))
    return Sample(os.path.normpath(os.path.join(root, path)), tuple(parsed))


def load_manifest(path) -> DatasetManifest:
    root = os.path.dirname(os.path.abspath(path))
    classes = None
    samples = []
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                document = json.loads(line)
            except json.JSONDecodeError as exc:
                if classes is None:
                    raise MissingClassHeader(f"invalid JSON ({exc.msg})", number) from exc
                raise MalformedLine(f"invalid JSON ({exc.msg})", number) from exc
            if classes is None:
                classes = _parse_header(document, number)
            else:
                samples.append(_parse_sample(document, number, classes, root))
    if classes is None:
        raise MissingClassHeader("manifest is empty")
    return DatasetManifest(classes, tuple(samples))


def epoch_permutation(seed: int, epoch: int, n: int) -> List[int]:
    """Seeded Fisher-Yates shuffle of ``range(n)``."""
    rng = RngStream(seed).fork_path("epoch", epoch)
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.randbelow(i + 1)
        order[i], order[j] = order[j], order[i]
    return order


@dataclass(frozen=True)
class BatchPlan:
    seed: int
    batch_size: int
    drop_last: bool = False
    epoch: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


@dataclass(frozen=True, eq=False)
class Batch:
    epoch: int
    index: int
    sample_indices: Tuple[int, ...]
    outputs: Tuple[np.ndarray, ...]

    def __len__(self):
        return len(self.sample_indices)


def batch_sizes(n: int, batch_size: int, drop_last: bool) -> List[int]:
    full, rest = divmod(n, batch_size)
    return [batch_size] * full + ([rest] if rest and not drop_last else [])


def sample_rng(seed: int, epoch: int, sample_index: int) -> RngStream:
    return RngStream(seed).fork_path("sample", epoch, sample_index)


def process_sample(manifest: DatasetManifest, pipeline: SequentialProcessor, seed: int, epoch: int, index: int) -> tuple:
    """Run the pipeline on one sample with its own seed-derived stream."""
    try:
        return call(pipeline, manifest.packet(index), sample_rng(seed, epoch, index))
    except Exception as exc:
        raise SampleError(index, exc) from exc


def _stack(outputs, indices):
    lengths = {len(out) for out in outputs}
    if len(lengths) != 1:
        raise ShapeMismatch(f"pipeline returned packets of different lengths {sorted(lengths)}")
    stacked = []
    for position in range(lengths.pop()):
        arrays = [np.asarray(out[position]) for out in outputs]
        for array, index in zip(arrays, indices):
            if array.dtype == object:
                raise ShapeMismatch(f"sample {index}: output {position} is not an array")
            if array.shape != arrays[0].shape:
                raise ShapeMismatch(
                    f"output {position}: sample {index} has shape {array.shape}, "
                    f"sample {indices[0]} has {arrays[0].shape}")
        stacked.append(np.stack(arrays))
    return tuple(stacked)


def batches(manifest: DatasetManifest, pipeline: SequentialProcessor, plan: BatchPlan,
            workers: int = 1) -> Iterator[Batch]:
    """Yield the batches of one epoch.

    Every sample draws randomness from ``(seed, epoch, sample index)`` only,
    so outputs do not depend on batch size or ``workers``.
    """
    order = epoch_permutation(plan.seed, plan.epoch, len(manifest))
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    run = lambda i: process_sample(manifest, pipeline, plan.seed, plan.epoch, i)  # noqa: E731
    try:
        start = 0
        for number, size in enumerate(batch_sizes(len(order), plan.batch_size, plan.drop_last)):
            indices = tuple(order[start:start + size])
            start += size
            outputs = list(pool.map(run, indices)) if pool else [run(i) for i in indices]
            yield Batch(plan.epoch, number, indices, _stack(outputs, indices))
    finally:
        if pool is not None:
            pool.shutdown()


def content_checksum(arrays) -> int:
    """64-bit digest of dtype, shape and bytes of each array, in order."""
    digest = hashlib.blake2b(digest_size=8)
    for array in arrays:
        array = np.ascontiguousarray(array)
        digest.update(f"{array.dtype.str}{array.shape};".encode("ascii"))
        digest.update(array.tobytes())
    return int.from_bytes(digest.digest(), "big")
