"""Perception messages and their one-line JSON encoding.

Each message serializes to a single compact JSON object whose first key is
``"type"``.  Floats are written with Python's shortest round-trip repr, so
``parse_message(serialize_message(m)) == m`` holds exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from typing import List, Union

from .errors import SchemaViolation, UnknownMessageType


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _string(value, field):
    if not isinstance(value, str):
        raise SchemaViolation(f"{field} must be a string")
    return value


def _floats(values, n, field):
    if not isinstance(values, (list, tuple)) or len(values) != n or not all(_is_number(v) for v in values):
        raise SchemaViolation(f"{field} must be a list of {n} finite numbers")
    return [float(v) for v in values]


@dataclass
class Box2D:
    class_name: str
    score: float
    coordinates: List[int]

    def __post_init__(self):
        _string(self.class_name, "class_name")
        if not _is_number(self.score) or not 0.0 <= self.score <= 1.0:
            raise SchemaViolation("score must be a number in [0, 1]")
        self.score = float(self.score)
        coords = self.coordinates
        if hasattr(coords, "tolist"):
            coords = coords.tolist()
        if (not isinstance(coords, (list, tuple)) or len(coords) != 4
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in coords)):
            raise SchemaViolation("coordinates must be 4 integers")
        x_min, y_min, x_max, y_max = coords
        if x_min > x_max or y_min > y_max:
            raise SchemaViolation("coordinates must satisfy min <= max")
        self.coordinates = list(coords)


@dataclass
class Pose6D:
    class_name: str
    quaternion: List[float]
    translation: List[float]

    def __post_init__(self):
        _string(self.class_name, "class_name")
        q = self.quaternion.tolist() if hasattr(self.quaternion, "tolist") else self.quaternion
        t = self.translation.tolist() if hasattr(self.translation, "tolist") else self.translation
        self.quaternion = _floats(q, 4, "quaternion")
        self.translation = _floats(t, 3, "translation")
        norm = math.sqrt(sum(v * v for v in self.quaternion))
        if abs(norm - 1.0) > 1e-6:
            raise SchemaViolation(f"quaternion norm {norm:.9g} is not 1")
        leading = next((v for v in self.quaternion if v != 0.0), 0.0)
        if leading < 0:
            raise SchemaViolation("quaternion is not in canonical sign (w >= 0)")


@dataclass
class Keypoints3D:
    class_name: str
    points: List[List[float]]

    def __post_init__(self):
        _string(self.class_name, "class_name")
        points = self.points.tolist() if hasattr(self.points, "tolist") else self.points
        if not isinstance(points, (list, tuple)):
            raise SchemaViolation("points must be a list")
        self.points = [_floats(p, 3, "each point") for p in points]


Message = Union[Box2D, Pose6D, Keypoints3D]
MESSAGE_TYPES = {cls.__name__: cls for cls in (Box2D, Pose6D, Keypoints3D)}


def to_dict(message: Message) -> dict:
    out = {"type": type(message).__name__}
    out.update((f.name, getattr(message, f.name)) for f in fields(message))
    return out


def serialize_message(message: Message) -> str:
    if type(message).__name__ not in MESSAGE_TYPES:
        raise UnknownMessageType(f"cannot serialize {type(message).__name__}")
    return json.dumps(to_dict(message), separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def _reject_constant(name):
    raise SchemaViolation(f"non-finite number {name} not allowed")


def from_dict(document) -> Message:
    if not isinstance(document, dict):
        raise SchemaViolation("message must be a JSON object")
    kind = document.get("type")
    cls = MESSAGE_TYPES.get(kind) if isinstance(kind, str) else None
    if cls is None:
        raise UnknownMessageType(f"unknown message type {kind!r}")
    expected = {f.name for f in fields(cls)}
    present = set(document) - {"type"}
    if present != expected:
        missing, extra = sorted(expected - present), sorted(present - expected)
        detail = "; ".join(p for p in (
            f"missing {', '.join(missing)}" if missing else "",
            f"unexpected {', '.join(extra)}" if extra else "") if p)
        raise SchemaViolation(f"{kind}: {detail}")
    return cls(**{name: document[name] for name in expected})


def parse_message(line: str) -> Message:
    try:
        document = json.loads(line, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid JSON: {exc}") from exc
    return from_dict(document)


def read_messages(path) -> list:
    """Parse a JSONL message file; errors carry the 1-based line number."""
    messages = []
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                messages.append(parse_message(line))
            except (SchemaViolation, UnknownMessageType) as exc:
                raise type(exc)(f"line {number}: {exc}") from exc
    return messages


def write_messages(messages, stream) -> None:
    for message in messages:
        stream.write(serialize_message(message) + "\n")
