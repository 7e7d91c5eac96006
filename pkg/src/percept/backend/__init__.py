"""Low-level pure functions the processors are built from."""

from . import boxes, camera, image, keypoints, quaternion

__all__ = ["boxes", "camera", "image", "keypoints", "quaternion"]
