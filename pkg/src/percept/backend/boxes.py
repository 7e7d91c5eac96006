"""Box geometry: form conversions, IoU, NMS, and anchor encode/decode/matching.

Boxes inside pipelines are normalized corner boxes ``[x_min, y_min, x_max,
y_max]`` in [0, 1], origin top-left, y pointing down.  Center boxes are
``[cx, cy, w, h]``.  All functions take and return float64 ``(N, 4)`` arrays
unless stated otherwise.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import DegenerateBox, LengthMismatch

DEFAULT_VARIANCES = (0.1, 0.2)
BACKGROUND = -1


def _as_boxes(boxes) -> np.ndarray:
    boxes = np.asarray(boxes, dtype=np.float64)
    if boxes.ndim == 1:
        boxes = boxes.reshape(-1, 4)
    if boxes.ndim != 2 or boxes.shape[1] != 4:
        raise ValueError(f"expected (N, 4) boxes, got shape {boxes.shape}")
    return boxes


@dataclass(frozen=True, eq=False)
class BoxArray:
    """Normalized corner boxes with optional per-box class ids and scores."""

    coordinates: np.ndarray
    class_ids: Optional[np.ndarray] = None
    scores: Optional[np.ndarray] = None

    def __post_init__(self):
        coords = _as_boxes(self.coordinates)
        if np.any(coords[:, 0] > coords[:, 2]) or np.any(coords[:, 1] > coords[:, 3]):
            raise DegenerateBox("box with min > max")
        object.__setattr__(self, "coordinates", coords)
        n = len(coords)
        if self.class_ids is not None:
            ids = np.asarray(self.class_ids, dtype=np.int64).reshape(-1)
            if len(ids) != n:
                raise LengthMismatch(f"{n} boxes but {len(ids)} class ids")
            object.__setattr__(self, "class_ids", ids)
        if self.scores is not None:
            scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
            if len(scores) != n:
                raise LengthMismatch(f"{n} boxes but {len(scores)} scores")
            object.__setattr__(self, "scores", scores)

    def __len__(self):
        return len(self.coordinates)

    def take(self, index) -> "BoxArray":
        return BoxArray(
            self.coordinates[index],
            None if self.class_ids is None else self.class_ids[index],
            None if self.scores is None else self.scores[index],
        )

    def replace_coordinates(self, coordinates) -> "BoxArray":
        return BoxArray(coordinates, self.class_ids, self.scores)


@dataclass(frozen=True, eq=False)
class AnchorSet:
    """Prior boxes in center form plus the encoding variances."""

    anchors: np.ndarray
    variances: Tuple[float, float] = DEFAULT_VARIANCES

    def __post_init__(self):
        anchors = _as_boxes(self.anchors)
        if len(anchors) < 1:
            raise ValueError("an anchor set needs at least one anchor")
        if np.any(anchors[:, 2:] <= 0):
            raise DegenerateBox("anchor widths and heights must be positive")
        v_center, v_size = (float(v) for v in self.variances)
        if v_center <= 0 or v_size <= 0:
            raise ValueError("variances must be positive")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "variances", (v_center, v_size))

    def __len__(self):
        return len(self.anchors)

    @classmethod
    def from_json(cls, document) -> "AnchorSet":
        if not isinstance(document, dict) or "anchors" not in document:
            raise ValueError('anchor document must be an object with an "anchors" list')
        return cls(np.asarray(document["anchors"], dtype=np.float64),
                   tuple(document.get("variances", DEFAULT_VARIANCES)))

    @classmethod
    def load(cls, path) -> "AnchorSet":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))

    def to_json(self) -> dict:
        return {"variances": list(self.variances), "anchors": self.anchors.tolist()}


@dataclass(frozen=True, eq=False)
class MatchResult:
    """Per-anchor assignment; ``assignments`` holds -1 for background."""

    assignments: np.ndarray
    labels: np.ndarray
    offsets: np.ndarray


def to_center_form(boxes) -> np.ndarray:
    boxes = _as_boxes(boxes)
    center = (boxes[:, :2] + boxes[:, 2:]) / 2.0
    size = boxes[:, 2:] - boxes[:, :2]
    return np.concatenate([center, size], axis=1)


def to_corner_form(boxes) -> np.ndarray:
    boxes = _as_boxes(boxes)
    half = boxes[:, 2:] / 2.0
    return np.concatenate([boxes[:, :2] - half, boxes[:, :2] + half], axis=1)


def areas(boxes) -> np.ndarray:
    boxes = _as_boxes(boxes)
    return (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])


def compute_ious(a, b) -> np.ndarray:
    """Pairwise IoU matrix of shape (len(a), len(b)); 0 where the union is empty."""
    a, b = _as_boxes(a), _as_boxes(b)
    top_left = np.maximum(a[:, None, :2], b[None, :, :2])
    bottom_right = np.minimum(a[:, None, 2:], b[None, :, 2:])
    extent = np.clip(bottom_right - top_left, 0.0, None)
    inter = extent[..., 0] * extent[..., 1]
    union = areas(a)[:, None] + areas(b)[None, :] - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        ious = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
    return np.clip(ious, 0.0, 1.0)


def _greedy_nms(boxes, scores, iou_threshold, top_k):
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    ious = compute_ious(boxes, boxes)
    kept = []
    suppressed = np.zeros(len(scores), dtype=bool)
    for i in order:
        if suppressed[i]:
            continue
        kept.append(i)
        if len(kept) == top_k:
            break
        suppressed |= ious[i] > iou_threshold
    return kept


def nms(boxes, scores, iou_threshold: float, top_k: int = 200, labels=None) -> list:
    """Greedy non-maximum suppression.

    Boxes whose IoU with an already kept box exceeds ``iou_threshold`` are
    dropped.  With ``labels`` the suppression runs independently per class and
    ``top_k`` caps each class.  Kept indices come back by descending score,
    lower index first on ties.
    """
    boxes = _as_boxes(boxes)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if len(boxes) != len(scores):
        raise LengthMismatch(f"{len(boxes)} boxes but {len(scores)} scores")
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError("iou_threshold must lie in [0, 1]")
    if top_k < 1:
        raise ValueError("top_k must be positive")
    if labels is None:
        return _greedy_nms(boxes, scores, iou_threshold, top_k)

    labels = np.asarray(labels).reshape(-1)
    if len(labels) != len(scores):
        raise LengthMismatch(f"{len(scores)} scores but {len(labels)} labels")
    kept = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        local = _greedy_nms(boxes[members], scores[members], iou_threshold, top_k)
        kept.extend(int(members[i]) for i in local)
    return sorted(kept, key=lambda i: (-scores[i], i))


def encode(gt_center, anchors_center, variances=DEFAULT_VARIANCES) -> np.ndarray:
    """Offsets of center-form ground truth boxes relative to anchors.

    Accepts a single 4-vector pair or matching ``(N, 4)`` arrays.
    """
    single = np.ndim(gt_center) == 1
    gt, anchor = _as_boxes(gt_center), _as_boxes(anchors_center)
    if len(gt) != len(anchor):
        raise LengthMismatch(f"{len(gt)} boxes but {len(anchor)} anchors")
    if np.any(gt[:, 2:] <= 0):
        raise DegenerateBox("ground truth width and height must be positive")
    if np.any(anchor[:, 2:] <= 0):
        raise DegenerateBox("anchor width and height must be positive")
    v_center, v_size = variances
    offsets = np.empty_like(gt)
    offsets[:, :2] = (gt[:, :2] - anchor[:, :2]) / (anchor[:, 2:] * v_center)
    offsets[:, 2:] = np.log(gt[:, 2:] / anchor[:, 2:]) / v_size
    return offsets[0] if single else offsets


def decode_center(offsets, anchors: AnchorSet) -> np.ndarray:
    """Inverse of :func:`encode`, in center form and without clipping."""
    offsets = _as_boxes(offsets)
    if len(offsets) != len(anchors):
        raise LengthMismatch(f"{len(offsets)} offsets but {len(anchors)} anchors")
    a = anchors.anchors
    v_center, v_size = anchors.variances
    out = np.empty_like(offsets)
    with np.errstate(over="ignore", invalid="ignore"):
        out[:, :2] = a[:, :2] + offsets[:, :2] * v_center * a[:, 2:]
        out[:, 2:] = a[:, 2:] * np.exp(offsets[:, 2:] * v_size)
    return out


def decode(offsets, anchors: AnchorSet, clip: bool = True) -> np.ndarray:
    """Decode offsets into corner boxes, clipped to the unit square."""
    center = decode_center(offsets, anchors)
    with np.errstate(over="ignore", invalid="ignore"):
        corners = to_corner_form(center)
    if clip:
        corners = np.clip(np.nan_to_num(corners, nan=0.0), 0.0, 1.0)
    return corners


def match_to_anchors(gt_boxes, gt_labels, anchors: AnchorSet, positive_iou: float = 0.5) -> MatchResult:
    """Assign ground truth boxes to anchors and encode regression targets.

    An anchor takes its highest-IoU ground truth (lowest index on ties) when
    that IoU reaches ``positive_iou``.  Afterwards every ground truth claims
    its best anchor regardless of threshold.  Claims are resolved greedily by
    descending IoU over still-unclaimed anchors, so two ground truths never
    fight over one anchor and each gets its own whenever there are enough
    anchors.  Background anchors get label 0 and zero offsets.
    """
    gt = _as_boxes(gt_boxes)
    gt_labels = np.asarray(gt_labels, dtype=np.int64).reshape(-1)
    if len(gt_labels) != len(gt):
        raise LengthMismatch(f"{len(gt)} boxes but {len(gt_labels)} labels")
    n = len(anchors)
    assignments = np.full(n, BACKGROUND, dtype=np.int64)
    labels = np.zeros(n, dtype=np.int64)
    offsets = np.zeros((n, 4), dtype=np.float64)
    if len(gt) == 0:
        return MatchResult(assignments, labels, offsets)

    ious = compute_ious(to_corner_form(anchors.anchors), gt)
    best_gt = ious.argmax(axis=1)
    best_iou = ious[np.arange(n), best_gt]
    positive = best_iou >= positive_iou
    assignments[positive] = best_gt[positive]
    claim = ious.copy()
    for _ in range(min(n, len(gt))):
        a, g = np.unravel_index(np.argmax(claim), claim.shape)
        assignments[a] = g
        claim[a, :] = -np.inf
        claim[:, g] = -np.inf

    matched = np.flatnonzero(assignments != BACKGROUND)
    labels[matched] = gt_labels[assignments[matched]]
    offsets[matched] = encode(to_center_form(gt[assignments[matched]]), anchors.anchors[matched], anchors.variances)
    return MatchResult(assignments, labels, offsets)


def round_half_away(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def denormalize(boxes, width: int, height: int) -> np.ndarray:
    """Scale normalized boxes to integer pixel boxes clamped inside the image."""
    if width < 1 or height < 1:
        raise ValueError("width and height must be at least 1")
    boxes = _as_boxes(boxes)
    scale = np.array([width, height, width, height], dtype=np.float64)
    pixels = round_half_away(boxes * scale)
    limit = np.array([width - 1, height - 1, width - 1, height - 1], dtype=np.float64)
    return np.clip(pixels, 0, limit).astype(np.int64)


def normalize(pixel_boxes, width: int, height: int) -> np.ndarray:
    boxes = _as_boxes(pixel_boxes)
    return boxes / np.array([width, height, width, height], dtype=np.float64)


def flip_boxes_horizontal(boxes) -> np.ndarray:
    boxes = _as_boxes(boxes)
    return np.stack([1.0 - boxes[:, 2], boxes[:, 1], 1.0 - boxes[:, 0], boxes[:, 3]], axis=1)


def grid_anchors(feature_sizes: Sequence[int], scales: Sequence[float],
                 aspect_ratios: Sequence[float] = (1.0,),
                 variances=DEFAULT_VARIANCES) -> AnchorSet:
    """Reference SSD-style grid of anchors.

    For a feature map of size ``s`` the anchor centers sit at
    ``(j + 0.5) / s``; each center gets one box per aspect ratio with
    ``w = scale * sqrt(ratio)`` and ``h = scale / sqrt(ratio)``.
    """
    if len(feature_sizes) != len(scales):
        raise LengthMismatch("one scale per feature map is required")
    rows = []
    for size, scale in zip(feature_sizes, scales):
        for i, j in itertools.product(range(size), repeat=2):
            cx, cy = (j + 0.5) / size, (i + 0.5) / size
            for ratio in aspect_ratios:
                root = np.sqrt(ratio)
                rows.append([cx, cy, scale * root, scale / root])
    return AnchorSet(np.array(rows, dtype=np.float64), variances)
