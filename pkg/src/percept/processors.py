"""Built-in processors, all registered by class name.

Image processors are variadic: they transform the image at position 0 and
pass every other value through, so they can sit in front of box-aware steps.
"""

from __future__ import annotations

import numbers

import numpy as np

from .backend import boxes as B
from .backend import image as I
from .errors import InvalidParam
from .messages import Box2D
from .pipeline import Processor
from .registry import register


def _number(name, value):
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise InvalidParam(f"{name} must be a finite number, got {value!r}")
    return float(value)


def _integer(name, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise InvalidParam(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _probability(value):
    value = _number("probability", value)
    if not 0.0 <= value <= 1.0:
        raise InvalidParam(f"probability must lie in [0, 1], got {value}")
    return value


def _range(lower, upper, minimum=None):
    lower, upper = _number("lower", lower), _number("upper", upper)
    if lower > upper:
        raise InvalidParam(f"lower ({lower}) must not exceed upper ({upper})")
    if minimum is not None and lower < minimum:
        raise InvalidParam(f"lower must be >= {minimum}")
    return lower, upper


def _anchor_set(anchors):
    if isinstance(anchors, B.AnchorSet):
        return anchors
    if isinstance(anchors, str):
        try:
            return B.AnchorSet.load(anchors)
        except OSError as exc:
            raise InvalidParam(f"cannot read anchors file {anchors!r}: {exc.strerror}") from exc
    if isinstance(anchors, dict):
        return B.AnchorSet.from_json(anchors)
    raise InvalidParam("anchors must be a file path or an anchor document")


class ImageProcessor(Processor):
    """Transforms the image in front of the packet, passes the rest through."""

    in_arity = None
    out_arity = None

    def transform(self, image, rng):
        raise NotImplementedError

    def apply(self, packet, rng):
        if not packet:
            raise ValueError(f"{self.name} needs an image as first value")
        return (self.transform(packet[0], rng),) + tuple(packet[1:])


class RandomPhotometric(ImageProcessor):
    """Draw the apply flag, then the value, and adjust when the flag is set."""

    adjust = None

    def __init__(self, lower, upper, probability=0.5, minimum=None):
        super().__init__()
        self.lower, self.upper = _range(lower, upper, minimum)
        self.probability = _probability(probability)

    def transform(self, image, rng):
        apply = rng.bernoulli(self.probability)
        value = rng.uniform(self.lower, self.upper)
        return type(self).adjust(image, value) if apply else I.check_image(image)


@register
class RandomContrast(RandomPhotometric):
    adjust = staticmethod(I.adjust_contrast)

    def __init__(self, lower=0.5, upper=1.5, probability=0.5):
        super().__init__(lower, upper, probability, minimum=0.0)


@register
class RandomBrightness(RandomPhotometric):
    adjust = staticmethod(I.adjust_brightness)

    def __init__(self, lower=-32.0, upper=32.0, probability=0.5):
        super().__init__(lower, upper, probability)


@register
class RandomSaturation(RandomPhotometric):
    adjust = staticmethod(I.adjust_saturation)

    def __init__(self, lower=0.5, upper=1.5, probability=0.5):
        super().__init__(lower, upper, probability, minimum=0.0)


@register
class RandomHue(RandomPhotometric):
    adjust = staticmethod(I.adjust_hue)

    def __init__(self, lower=-18.0, upper=18.0, probability=0.5):
        super().__init__(lower, upper, probability)


@register
class Resize(ImageProcessor):
    def __init__(self, width, height):
        super().__init__()
        self.width = _integer("width", width)
        self.height = _integer("height", height)

    def transform(self, image, rng):
        return I.resize_bilinear(image, self.width, self.height)


@register
class Normalize(ImageProcessor):
    """uint8 image -> float32 image in [0, 1]."""

    def __init__(self):
        super().__init__()

    def transform(self, image, rng):
        return I.normalize(image)


def _flip_packet(packet):
    out = [I.flip_left_right(packet[0])]
    for value in packet[1:]:
        if isinstance(value, B.BoxArray):
            value = value.replace_coordinates(B.flip_boxes_horizontal(value.coordinates))
        out.append(value)
    return tuple(out)


@register
class FlipLeftRight(Processor):
    """Mirror the image and every BoxArray in the packet."""

    in_arity = None
    out_arity = None

    def __init__(self):
        super().__init__()

    def apply(self, packet, rng):
        return _flip_packet(packet)


@register
class RandomFlipLeftRight(FlipLeftRight):
    def __init__(self, probability=0.5):
        super().__init__()
        self.probability = _probability(probability)

    def apply(self, packet, rng):
        if rng.bernoulli(self.probability):
            return _flip_packet(packet)
        return tuple(packet)


@register
class MatchAnchors(Processor):
    """(image, BoxArray with class ids) -> (image, anchor offsets, anchor labels)."""

    in_arity = 2
    out_arity = 3
    path_params = ("anchors",)

    def __init__(self, anchors, positive_iou=0.5):
        super().__init__()
        self.anchors = _anchor_set(anchors)
        self.positive_iou = _number("positive_iou", positive_iou)
        if not 0.0 <= self.positive_iou <= 1.0:
            raise InvalidParam("positive_iou must lie in [0, 1]")

    def apply(self, packet, rng):
        image, boxes = packet
        if boxes.class_ids is None:
            raise ValueError("MatchAnchors needs boxes with class ids")
        match = B.match_to_anchors(boxes.coordinates, boxes.class_ids, self.anchors, self.positive_iou)
        return image, match.offsets, match.labels


@register
class DecodeBoxes(Processor):
    """Raw (N, 4 + C) detector output -> (corner boxes (N, 4), class scores (N, C))."""

    in_arity = 1
    out_arity = 2
    path_params = ("anchors",)

    def __init__(self, anchors):
        super().__init__()
        self.anchors = _anchor_set(anchors)

    def apply(self, packet, rng):
        raw = np.asarray(packet[0], dtype=np.float64)
        if raw.ndim != 2 or raw.shape[1] < 5 or raw.shape[0] != len(self.anchors):
            raise B.LengthMismatch(
                f"raw output shape {raw.shape} does not fit {len(self.anchors)} anchors")
        return B.decode(raw[:, :4], self.anchors), raw[:, 4:]


@register
class FilterByScore(Processor):
    """(boxes, class scores) -> BoxArray of (box, class) pairs scoring above threshold.

    Column ``background`` is never selected.  Candidates come out ordered by
    anchor, then class.
    """

    in_arity = 2
    out_arity = 1

    def __init__(self, threshold=0.45, background=0):
        super().__init__()
        self.threshold = _number("threshold", threshold)
        self.background = _integer("background", background, minimum=0)

    def apply(self, packet, rng):
        boxes, scores = packet
        scores = np.asarray(scores, dtype=np.float64)
        selected = scores > self.threshold
        if 0 <= self.background < scores.shape[1]:
            selected[:, self.background] = False
        rows, classes = np.nonzero(selected)
        return B.BoxArray(np.asarray(boxes)[rows].reshape(-1, 4), classes, scores[rows, classes])


@register
class NonMaxSuppression(Processor):
    """Class-wise NMS when the boxes carry class ids, class-agnostic otherwise."""

    def __init__(self, iou_threshold=0.45, top_k=200):
        super().__init__()
        self.iou_threshold = _number("iou_threshold", iou_threshold)
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise InvalidParam("iou_threshold must lie in [0, 1]")
        self.top_k = _integer("top_k", top_k)

    def apply(self, packet, rng):
        (boxes,) = packet
        if boxes.scores is None:
            raise ValueError("NonMaxSuppression needs scored boxes")
        kept = B.nms(boxes.coordinates, boxes.scores, self.iou_threshold, self.top_k, boxes.class_ids)
        return boxes.take(np.asarray(kept, dtype=np.int64))


@register
class ToBoxes2D(Processor):
    """Scored BoxArray -> list of Box2D messages in pixel coordinates."""

    def __init__(self, class_names, width, height):
        super().__init__()
        if not isinstance(class_names, (list, tuple)) or not all(isinstance(c, str) for c in class_names):
            raise InvalidParam("class_names must be a list of strings")
        self.class_names = list(class_names)
        self.width = _integer("width", width)
        self.height = _integer("height", height)

    def apply(self, packet, rng):
        (boxes,) = packet
        pixels = B.denormalize(boxes.coordinates, self.width, self.height)
        return ([
            Box2D(self.class_names[int(c)], float(s), [int(v) for v in p])
            for p, c, s in zip(pixels, boxes.class_ids, boxes.scores)
        ],)
