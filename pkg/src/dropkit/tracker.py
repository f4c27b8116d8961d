"""Frame-by-frame identity management over detections.

Each live track carries a constant-velocity box filter; every frame the
tracker predicts all tracks, builds a motion+appearance cost matrix
against the detections, solves one global optimal assignment, and
updates lifecycles: tracks confirm after ``n_init`` hits, die after
``max_age`` consecutive misses, and unmatched detections spawn new
tentative tracks. Ids are issued once and never reused; a re-detected
object after a deletion gets a fresh id (gluing is the stitcher's job,
not the tracker's).

Appearance is a pluggable, non-learned descriptor (a color histogram by
default); when detections carry no descriptors the cost reduces to pure
motion, i.e. classic IoU+gate association. Association is one global
assignment per frame rather than an age-cascade: droplet counts are tens,
so the cascade buys nothing here.

History bookkeeping is designed for trajectory extraction: a matched
frame appends the corrected box; missed frames buffer the predicted box
and are folded into the history only if the track is matched again later,
so a gap inside a surviving track is bridged by its own predictions while
a dying track never grows a phantom tail.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kalman
from .assignment import FORBIDDEN, CostMatrix, solve
from .geometry import BBox, boxes_to_array, center, from_measurement, iou_matrix, to_measurement
from .kalman import GATING_THRESHOLD_95, NoiseConfig
from .trajectory import Trajectory

_HIST_BINS = 8  # per channel: 8^3 = 512-bin descriptor


class TrackState(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DELETED = "deleted"


@dataclass(frozen=True)
class Detection:
    """One detector output: box, confidence, optional appearance vector."""

    bbox: BBox
    confidence: float = 1.0
    descriptor: np.ndarray | None = None

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        if self.descriptor is not None:
            d = np.asarray(self.descriptor, dtype=float).reshape(-1)
            object.__setattr__(self, "descriptor", d)


@dataclass(frozen=True)
class TrackerConfig:
    n_init: int = 3
    max_age: int = 30
    iou_gate: float = 0.1
    appearance_weight: float = 0.3
    descriptor_budget: int = 50
    gating_threshold: float = GATING_THRESHOLD_95
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    def __post_init__(self):
        if self.n_init < 1:
            raise ValueError(f"n_init must be >= 1, got {self.n_init}")
        if self.max_age < 1:
            raise ValueError(f"max_age must be >= 1, got {self.max_age}")
        if not 0.0 <= self.appearance_weight <= 1.0:
            raise ValueError(f"appearance_weight must be in [0, 1], got {self.appearance_weight}")
        if not 0.0 <= self.iou_gate < 1.0:
            raise ValueError(f"iou_gate must be in [0, 1), got {self.iou_gate}")
        if self.descriptor_budget < 1:
            raise ValueError("descriptor_budget must be >= 1")


class Track:
    """Mutable per-identity state; owned and driven by the tracker."""

    def __init__(self, track_id: int, detection: Detection, frame_index: int, cfg: TrackerConfig):
        self.id = track_id
        self.state = TrackState.TENTATIVE
        self.kalman = kalman.initiate(to_measurement(detection.bbox), cfg.noise)
        self.hits = 1
        self.age = 0
        self.time_since_update = 0
        self.descriptor_history: deque = deque(maxlen=cfg.descriptor_budget)
        if detection.descriptor is not None:
            self.descriptor_history.append(detection.descriptor)
        self.history: list[tuple[int, BBox]] = [(frame_index, detection.bbox)]
        self.ever_confirmed = False
        self._pending: list[tuple[int, BBox]] = []

    @property
    def box(self) -> BBox:
        m = self.kalman.mean[:4].copy()
        m[2] = max(m[2], 1e-3)
        m[3] = max(m[3], 1e-3)
        return from_measurement(m)

    def mean_descriptor(self) -> np.ndarray | None:
        if not self.descriptor_history:
            return None
        return np.mean(np.stack(self.descriptor_history), axis=0)

    def mark_matched(self, detection: Detection, frame_index: int, cfg: TrackerConfig) -> None:
        self.kalman = kalman.update(self.kalman, to_measurement(detection.bbox), cfg.noise)
        self.hits += 1
        self.time_since_update = 0
        if detection.descriptor is not None:
            self.descriptor_history.append(detection.descriptor)
        if self._pending:  # gap survived: bridge it with the buffered predictions
            self.history.extend(self._pending)
            self._pending.clear()
        self.history.append((frame_index, self.box))
        if self.state is TrackState.TENTATIVE and self.hits >= cfg.n_init:
            self.state = TrackState.CONFIRMED
        if self.state is TrackState.CONFIRMED:
            self.ever_confirmed = True

    def mark_missed(self, frame_index: int) -> None:
        self.time_since_update += 1
        self._pending.append((frame_index, self.box))


def appearance_descriptor(patch: np.ndarray) -> np.ndarray:
    """L2-normalized 8x8x8 color histogram of an image patch.

    The patch is an (H, W, 3) array of 0..255 channel values. Identical
    patches map to identical vectors; an empty patch is a degenerate crop
    and rejected.
    """
    p = np.asarray(patch)
    if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] == 0 or p.shape[1] == 0:
        raise ValueError(f"patch must be non-empty (H, W, 3), got shape {p.shape}")
    q = np.clip(p.astype(np.int64), 0, 255) >> 5
    bins = (q[..., 0] * _HIST_BINS + q[..., 1]) * _HIST_BINS + q[..., 2]
    hist = np.bincount(bins.ravel(), minlength=_HIST_BINS**3).astype(float)
    return hist / np.linalg.norm(hist)


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 1.0
    return float(1.0 - np.dot(a, b) / (na * nb))


def build_cost(tracks: list[Track], detections: list[Detection], cfg: TrackerConfig) -> CostMatrix:
    """Association costs for already-predicted tracks against detections.

    cost = (1 - w) * (1 - IoU) + w * cosine distance of mean descriptors,
    with w = 0 whenever either side lacks a descriptor. Pairs below the
    IoU gate or outside the Mahalanobis gate are FORBIDDEN.
    """
    costs = np.full((len(tracks), len(detections)), FORBIDDEN)
    if not tracks or not detections:
        return CostMatrix(costs)
    det_boxes = boxes_to_array([d.bbox for d in detections])
    measurements = np.array([to_measurement(d.bbox) for d in detections])
    track_boxes = boxes_to_array([t.box for t in tracks])
    overlaps = iou_matrix(track_boxes, det_boxes)
    for i, track in enumerate(tracks):
        gate = kalman.gating_distance(track.kalman, measurements, cfg.noise)
        track_desc = track.mean_descriptor()
        for j, det in enumerate(detections):
            if overlaps[i, j] < cfg.iou_gate or gate[j] > cfg.gating_threshold:
                continue
            motion = 1.0 - overlaps[i, j]
            if track_desc is not None and det.descriptor is not None:
                appearance = cosine_distance(track_desc, det.descriptor)
                costs[i, j] = (
                    (1.0 - cfg.appearance_weight) * motion
                    + cfg.appearance_weight * appearance
                )
            else:
                costs[i, j] = motion
    return CostMatrix(costs)


class DropletTracker:
    """Online multi-object tracker; single-threaded mutable state."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self._tracks: list[Track] = []
        self._graveyard: list[Track] = []
        self._next_id = 1
        self._last_frame: int | None = None

    @property
    def tracks(self) -> list[Track]:
        return list(self._tracks)

    def step(
        self, frame_index: int, detections: list[Detection]
    ) -> list[tuple[int, BBox, TrackState]]:
        """Advance one frame; returns (id, box, state) of confirmed tracks
        that matched a detection this frame."""
        if self._last_frame is not None and frame_index <= self._last_frame:
            raise ValueError(
                f"frame index must increase: got {frame_index} after {self._last_frame}"
            )
        self._last_frame = frame_index
        cfg = self.config

        for track in self._tracks:
            track.kalman = kalman.predict(track.kalman, cfg.noise)
            track.age += 1

        assignment = solve(build_cost(self._tracks, detections, cfg))
        for row, col in assignment.pairs:
            self._tracks[row].mark_matched(detections[col], frame_index, cfg)
        for row in assignment.unmatched_rows:
            self._tracks[row].mark_missed(frame_index)
        for col in assignment.unmatched_cols:
            self._tracks.append(Track(self._next_id, detections[col], frame_index, cfg))
            self._next_id += 1

        survivors = []
        for track in self._tracks:
            if track.time_since_update > cfg.max_age:
                track.state = TrackState.DELETED
                track._pending.clear()  # a dying track leaves no phantom tail
                if track.ever_confirmed:
                    self._graveyard.append(track)
            else:
                survivors.append(track)
        self._tracks = survivors

        return [
            (t.id, t.history[-1][1], t.state)
            for t in self._tracks
            if t.state is TrackState.CONFIRMED and t.time_since_update == 0
        ]

    def extract_trajectories(self) -> list[Trajectory]:
        """Center trajectories of every track that was ever confirmed.

        Gap frames inside a surviving track are bridged by its own
        predictions. A track that died coasting contributes nothing past
        its last matched frame (no phantom tails), while a track still
        alive at the end of the stream keeps its trailing predictions:
        that is the tracker's live belief about a still-present object.
        """
        trajectories = []
        for track in self._graveyard + self._tracks:
            if not track.ever_confirmed:
                continue
            history = track.history + track._pending
            samples = tuple((f, center(b)) for f, b in history)
            trajectories.append(Trajectory(id=track.id, samples=samples))
        return sorted(trajectories, key=lambda t: t.id)
