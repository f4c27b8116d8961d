"""Bit-exact text I/O for detections, ground truth, trajectories, counts,
and the run configuration.

All numeric text uses '.' decimals and fixed 6-decimal formatting so the
same values always serialize to the same bytes regardless of locale.
Detection interchange follows the MOT det.txt convention
(``frame,id,x,y,w,h,conf`` with id fixed at -1), which is the seam where
any external detector's output plugs in unchanged.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields

from .datagen import SyntheticImageSpec
from .geometry import BBox, Point
from .kalman import NoiseConfig
from .simulator import NoiseModel, SceneConfig
from .stitcher import StitchConfig
from .tracker import Detection, TrackerConfig
from .trajectory import Trajectory


class FormatError(ValueError):
    """Malformed input; the message names the offending line or key."""


def _parse_row(line: str, lineno: int, min_fields: int) -> list[str]:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) < min_fields:
        raise FormatError(
            f"line {lineno}: expected at least {min_fields} comma-separated fields, got {len(parts)}"
        )
    return parts


def read_detections(text: str) -> dict[int, list[Detection]]:
    """Parse ``frame,id,x,y,w,h,conf`` rows into per-frame detection lists.

    Frames must be nondecreasing; trailing extra fields are ignored; a
    blank document is a valid empty stream.
    """
    frames: dict[int, list[Detection]] = {}
    last_frame = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = _parse_row(line, lineno, 7)
        try:
            frame = int(parts[0])
            int(float(parts[1]))  # id column: value unused, must be numeric
            x, y, w, h, conf = (float(v) for v in parts[2:7])
            detection = Detection(bbox=BBox(x, y, w, h), confidence=conf)
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        if last_frame is not None and frame < last_frame:
            raise FormatError(f"line {lineno}: frame {frame} after frame {last_frame}")
        last_frame = frame
        frames.setdefault(frame, []).append(detection)
    return frames


def write_detections(frames: dict[int, list[Detection]]) -> str:
    lines = []
    for frame in sorted(frames):
        for det in frames[frame]:
            b = det.bbox
            lines.append(
                f"{frame},-1,{b.x:.6f},{b.y:.6f},{b.w:.6f},{b.h:.6f},{det.confidence:.6f}\n"
            )
    return "".join(lines)


def read_ground_truth(text: str) -> dict[int, list[tuple[int, BBox]]]:
    """Parse the ``frame,id,x,y,w,h`` ground-truth table (header required)."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != "frame,id,x,y,w,h":
        raise FormatError("line 1: expected header 'frame,id,x,y,w,h'")
    frames: dict[int, list[tuple[int, BBox]]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = _parse_row(line, lineno, 6)
        try:
            frame, obj = int(parts[0]), int(parts[1])
            x, y, w, h = (float(v) for v in parts[2:6])
            frames.setdefault(frame, []).append((obj, BBox(x, y, w, h)))
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    return frames


def write_ground_truth(frames) -> str:
    """Serialize simulator ground-truth frames to the 6-column table."""
    lines = ["frame,id,x,y,w,h\n"]
    for gtf in frames:
        for drop in gtf.droplets:
            b = drop.bbox
            lines.append(
                f"{gtf.frame_index},{drop.id},{b.x:.6f},{b.y:.6f},{b.w:.6f},{b.h:.6f}\n"
            )
    return "".join(lines)


def write_trajectories(trajectories: list[Trajectory]) -> str:
    lines = ["track_id,frame,cx,cy\n"]
    for traj in sorted(trajectories, key=lambda t: t.id):
        for frame, point in traj.samples:
            lines.append(f"{traj.id},{frame},{point.cx:.6f},{point.cy:.6f}\n")
    return "".join(lines)


def read_trajectories(text: str) -> list[Trajectory]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "track_id,frame,cx,cy":
        raise FormatError("line 1: expected header 'track_id,frame,cx,cy'")
    samples: dict[int, list[tuple[int, Point]]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = _parse_row(line, lineno, 4)
        try:
            tid, frame = int(parts[0]), int(parts[1])
            point = Point(float(parts[2]), float(parts[3]))
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        samples.setdefault(tid, []).append((frame, point))
    return [
        Trajectory(id=tid, samples=tuple(sorted(pts, key=lambda s: s[0])))
        for tid, pts in sorted(samples.items())
    ]


def write_counts(counts: dict[int, int]) -> str:
    lines = ["frame,count\n"]
    for frame in sorted(counts):
        lines.append(f"{frame},{counts[frame]}\n")
    return "".join(lines)


def read_counts(text: str) -> dict[int, int]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "frame,count":
        raise FormatError("line 1: expected header 'frame,count'")
    counts = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = _parse_row(line, lineno, 2)
        try:
            counts[int(parts[0])] = int(parts[1])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    return counts


# -- run configuration -------------------------------------------------


@dataclass(frozen=True)
class MetricsConfig:
    """Scoring thresholds; ``dist_threshold=None`` derives half the mean
    droplet diameter of the ground truth."""

    iou_threshold: float = 0.5
    dist_threshold: float | None = None

    def __post_init__(self):
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValueError(f"iou_threshold must be in (0, 1), got {self.iou_threshold}")
        if self.dist_threshold is not None and self.dist_threshold <= 0:
            raise ValueError(f"dist_threshold must be positive, got {self.dist_threshold}")


@dataclass(frozen=True)
class DatagenConfig:
    total: int = 800
    real_pool: str | None = None
    master_seed: int = 0
    image: SyntheticImageSpec = field(default_factory=SyntheticImageSpec)

    def __post_init__(self):
        if self.total < 1:
            raise ValueError(f"total must be >= 1, got {self.total}")


@dataclass(frozen=True)
class RunConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    stitch: StitchConfig = field(default_factory=StitchConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    datagen: DatagenConfig = field(default_factory=DatagenConfig)


_SECTION_CLASSES = {
    "scene": SceneConfig,
    "noise": NoiseModel,
    "tracker": TrackerConfig,
    "stitch": StitchConfig,
    "metrics": MetricsConfig,
    "datagen": DatagenConfig,
}

_NESTED_CLASSES = {
    (TrackerConfig, "noise"): NoiseConfig,
    (DatagenConfig, "image"): SyntheticImageSpec,
}


def _build_section(cls, doc: dict, path: str):
    if not isinstance(doc, dict):
        raise FormatError(f"configuration section '{path}' must be an object")
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in doc.items():
        if key not in known:
            raise FormatError(f"unknown configuration key '{path}.{key}'")
        nested = _NESTED_CLASSES.get((cls, key))
        if nested is not None:
            kwargs[key] = _build_section(nested, value, f"{path}.{key}")
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"section '{path}': {exc}") from exc


def load_config(text: str) -> RunConfig:
    """Parse the JSON configuration document.

    Unknown keys are rejected by name; absent keys take their documented
    defaults; an empty document yields the all-defaults configuration.
    """
    stripped = text.strip()
    doc = json.loads(stripped) if stripped else {}
    if not isinstance(doc, dict):
        raise FormatError("configuration root must be a JSON object")
    sections = {}
    for key, value in doc.items():
        if key not in _SECTION_CLASSES:
            raise FormatError(f"unknown configuration key '{key}'")
        sections[key] = _build_section(_SECTION_CLASSES[key], value, key)
    return RunConfig(**sections)


def dump_config(cfg: RunConfig) -> str:
    """Canonical JSON echo of the fully-resolved configuration; feeding
    the echo back to load_config reproduces an identical configuration."""
    doc = dataclasses.asdict(cfg)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
