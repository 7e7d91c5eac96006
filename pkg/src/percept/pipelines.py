"""Ready-made pipelines assembled from the built-in processors."""

from __future__ import annotations

from typing import List, Sequence

import numpy as np

from .backend.boxes import AnchorSet
from .backend.camera import CameraIntrinsics, solve_pnp_dlt
from .backend.image import AugmentationConfig
from .messages import Box2D, Pose6D
from .pipeline import SequentialProcessor
from .processors import (DecodeBoxes, FilterByScore, NonMaxSuppression, RandomBrightness, RandomContrast,
                         RandomHue, RandomSaturation, ToBoxes2D)
from .rng import RngStream


def photometric_augmentation(config: AugmentationConfig = AugmentationConfig()) -> SequentialProcessor:
    """Contrast, brightness, saturation and hue jitter, in that order."""
    return SequentialProcessor([
        RandomContrast(*config.contrast, config.contrast_probability),
        RandomBrightness(*config.brightness, config.brightness_probability),
        RandomSaturation(*config.saturation, config.saturation_probability),
        RandomHue(*config.hue, config.hue_probability),
    ], name="PhotometricAugmentation")


def detection_postprocessor(anchors: AnchorSet, class_names: Sequence[str], width: int, height: int,
                            iou_threshold: float = 0.45, score_threshold: float = 0.45,
                            top_k: int = 200) -> SequentialProcessor:
    """Raw (N, 4 + C) detector output -> list of Box2D messages.

    ``class_names[0]`` is the background class and never reported.  ``top_k``
    applies per class.
    """
    return SequentialProcessor([
        DecodeBoxes(anchors),
        FilterByScore(score_threshold),
        NonMaxSuppression(iou_threshold, top_k),
        ToBoxes2D(list(class_names), width, height),
    ], name="DetectionPostprocessor")


def sort_detections(detections: List[Box2D]) -> List[Box2D]:
    return sorted(detections, key=lambda d: (-d.score, d.class_name, d.coordinates))


def postprocess_detections(raw, anchors: AnchorSet, class_names: Sequence[str], width: int, height: int,
                           iou_threshold: float = 0.45, score_threshold: float = 0.45,
                           top_k: int = 200) -> List[Box2D]:
    """Detections sorted by descending score, then class name."""
    pipeline = detection_postprocessor(anchors, class_names, width, height, iou_threshold, score_threshold, top_k)
    (detections,) = pipeline.apply((np.asarray(raw, dtype=np.float64),), RngStream(0))
    return sort_detections(detections)


def estimate_pose(points3d, keypoints2d, camera: CameraIntrinsics, class_name: str = "object") -> Pose6D:
    """Pixel keypoints of a known 3D model -> Pose6D message."""
    pose = solve_pnp_dlt(points3d, keypoints2d, camera)
    return Pose6D(class_name, pose.rotation, pose.translation)
