"""Composable perception pipelines: processors over tuples of values, backed by
pure functions for boxes, images and 3D geometry."""

from . import backend, messages, processors
from .datasets import Batch, BatchPlan, DatasetManifest, batches, epoch_permutation, load_manifest
from .messages import Box2D, Keypoints3D, Pose6D, parse_message, serialize_message
from .pipeline import (FunctionProcessor, Processor, SequentialProcessor, call, concat, describe, extend_with,
                       flatten, remove)
from .registry import build_pipeline, load_pipeline, register, registry_instantiate
from .rng import RngStream

__version__ = "0.1.0"
