"""Detector-agnostic droplet tracking toolkit.

Ingests per-frame bounding-box detections (from a real detector or the
built-in scene simulator), links them into identity-stable trajectories,
optionally glues fragments, and scores the result; also composes hybrid
real/synthetic training datasets for detector work.
"""

from .assignment import FORBIDDEN, Assignment, CostMatrix, solve
from .geometry import BBox, Point, center, from_measurement, iou, to_measurement
from .kalman import GATING_THRESHOLD_95, KalmanState, NoiseConfig
from .metrics import (
    PRCurve,
    TrackingScore,
    average_precision,
    counting_error,
    match_detections,
    tracking_score,
)
from .simulator import (
    GroundTruthFrame,
    NoiseModel,
    SceneConfig,
    corrupt,
    generate_scene,
    render_frame,
)
from .stitcher import StitchConfig, stitch
from .tracker import Detection, DropletTracker, TrackerConfig, appearance_descriptor
from .trajectory import Trajectory

__version__ = "0.1.0"

__all__ = [
    "FORBIDDEN",
    "Assignment",
    "BBox",
    "CostMatrix",
    "Detection",
    "DropletTracker",
    "GATING_THRESHOLD_95",
    "GroundTruthFrame",
    "KalmanState",
    "NoiseConfig",
    "NoiseModel",
    "PRCurve",
    "Point",
    "SceneConfig",
    "StitchConfig",
    "TrackerConfig",
    "TrackingScore",
    "Trajectory",
    "appearance_descriptor",
    "average_precision",
    "center",
    "corrupt",
    "counting_error",
    "from_measurement",
    "generate_scene",
    "iou",
    "match_detections",
    "render_frame",
    "solve",
    "stitch",
    "to_measurement",
    "tracking_score",
    "__version__",
]
