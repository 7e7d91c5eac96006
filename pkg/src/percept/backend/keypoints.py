"""Keypoint coordinate conversions between pixels and normalized image units."""

import numpy as np


def normalize_keypoints(keypoints, width, height):
    if width < 1 or height < 1:
        raise ValueError("width and height must be at least 1")
    keypoints = np.asarray(keypoints, dtype=np.float64).reshape(-1, 2)
    return keypoints / np.array([width, height], dtype=np.float64)


def denormalize_keypoints(keypoints, width, height):
    if width < 1 or height < 1:
        raise ValueError("width and height must be at least 1")
    keypoints = np.asarray(keypoints, dtype=np.float64).reshape(-1, 2)
    return keypoints * np.array([width, height], dtype=np.float64)


def flip_keypoints_horizontal(keypoints):
    """Mirror normalized keypoints about the vertical image center line."""
    keypoints = np.array(keypoints, dtype=np.float64).reshape(-1, 2)
    keypoints[:, 0] = 1.0 - keypoints[:, 0]
    return keypoints
