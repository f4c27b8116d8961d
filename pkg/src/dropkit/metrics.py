"""Scoring: counting error, detection PR/AP, and identity accounting.

The counting metric implements the reference formula verbatim,
mean of sqrt((M_i - P_i)^2) over frames, which algebraically reduces to
the mean absolute error; the function keeps the historical "MSE" name in
its docstring solely to flag that identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assignment import FORBIDDEN, CostMatrix, solve
from .geometry import BBox, iou
from .trajectory import Trajectory


@dataclass(frozen=True)
class PRCurve:
    """Precision/recall points in descending-confidence order."""

    recalls: tuple[float, ...]
    precisions: tuple[float, ...]
    thresholds: tuple[float, ...]

    def __post_init__(self):
        for seq in (self.recalls, self.precisions):
            if any(not (0.0 <= v <= 1.0) for v in seq):
                raise ValueError("recall/precision values must lie in [0, 1]")
        if any(b < a for a, b in zip(self.recalls, self.recalls[1:])):
            raise ValueError("recalls must be nondecreasing")


@dataclass(frozen=True)
class TrackingScore:
    id_switches: int
    full_trajectories: int
    gt_total: int
    fragments: int

    def __post_init__(self):
        if self.full_trajectories > self.gt_total:
            raise ValueError("full trajectories cannot exceed ground-truth total")


def counting_error(manual, predicted) -> float:
    """Per-frame counting discrepancy, mean of sqrt((M_i - P_i)^2).

    This is the published counting "MSE"; the square root undoes the
    square, so the value equals the mean absolute count error.
    """
    m = np.asarray(manual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if m.ndim != 1 or p.ndim != 1 or m.size == 0:
        raise ValueError("count series must be 1-D and non-empty")
    if m.shape != p.shape:
        raise ValueError(f"count series length mismatch: {m.size} vs {p.size}")
    return float(np.mean(np.sqrt((m - p) ** 2)))


def match_detections(
    detections: list[tuple[BBox, float]],
    ground_truth: list[BBox],
    iou_threshold: float = 0.5,
) -> list[bool]:
    """Greedy TP/FP flags in descending-confidence order.

    Each detection claims its best-overlapping still-unmatched ground
    truth box; the claim is a true positive when that IoU reaches the
    threshold. Confidence ties keep the original detection order.
    """
    if not (0.0 < iou_threshold < 1.0):
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    order = sorted(range(len(detections)), key=lambda i: (-detections[i][1], i))
    taken = [False] * len(ground_truth)
    flags = []
    for i in order:
        box = detections[i][0]
        best_iou, best_j = 0.0, -1
        for j, gt_box in enumerate(ground_truth):
            if taken[j]:
                continue
            overlap = iou(box, gt_box)
            if overlap > best_iou:
                best_iou, best_j = overlap, j
        if best_j >= 0 and best_iou >= iou_threshold:
            taken[best_j] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def precision_recall(flags: list[bool], n_gt: int, confidences=None) -> PRCurve:
    """PR curve from confidence-ordered TP/FP flags."""
    if n_gt < 0:
        raise ValueError("n_gt must be nonnegative")
    tp = np.cumsum(np.asarray(flags, dtype=float))
    ranks = np.arange(1, len(flags) + 1)
    precisions = tp / ranks
    recalls = tp / n_gt if n_gt > 0 else np.zeros(len(flags))
    if confidences is None:
        confidences = [0.0] * len(flags)
    return PRCurve(
        recalls=tuple(float(r) for r in recalls),
        precisions=tuple(float(p) for p in precisions),
        thresholds=tuple(float(c) for c in confidences),
    )


def average_precision(flags: list[bool], n_gt: int) -> float:
    """Area under the interpolated precision envelope (all-point rule).

    Degenerate inputs: with nothing to find and nothing predicted the
    detector is perfect (1.0); with predictions but no ground truth every
    prediction is false (0.0).
    """
    if n_gt < 0:
        raise ValueError("n_gt must be nonnegative")
    if n_gt == 0:
        return 1.0 if len(flags) == 0 else 0.0
    if not flags:
        return 0.0
    tp = np.cumsum(np.asarray(flags, dtype=float))
    precisions = tp / np.arange(1, len(flags) + 1)
    recalls = tp / n_gt
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    prev_recall = 0.0
    area = 0.0
    for r, p in zip(recalls, envelope):
        if r > prev_recall:
            area += (r - prev_recall) * p
            prev_recall = r
    return float(area)


def evaluate_detections(
    detection_frames: dict[int, list[tuple[BBox, float]]],
    gt_frames: dict[int, list[BBox]],
    iou_threshold: float = 0.5,
) -> tuple[list[bool], int]:
    """Pool per-frame greedy matches into one confidence-ranked flag list."""
    scored = []
    for frame in sorted(set(detection_frames) | set(gt_frames)):
        dets = detection_frames.get(frame, [])
        flags = match_detections(dets, gt_frames.get(frame, []), iou_threshold)
        order = sorted(range(len(dets)), key=lambda i: (-dets[i][1], i))
        for rank, i in enumerate(order):
            scored.append((dets[i][1], frame, i, flags[rank]))
    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    n_gt = sum(len(v) for v in gt_frames.values())
    return [flag for _, _, _, flag in scored], n_gt


def tracking_score(
    predicted: list[Trajectory],
    ground_truth: list[Trajectory],
    dist_threshold: float,
) -> TrackingScore:
    """Identity accounting of predicted against true trajectories.

    Per frame, predicted centers are optimally matched to true centers
    with matches farther than ``dist_threshold`` forbidden. For each true
    trajectory the sequence of matched predicted ids then yields:

    - id_switches: transitions where the matched id differs from the
      previously matched one (unmatched frames in between do not reset);
    - fragments: maximal runs of one uninterrupted matched id;
    - full_trajectories: true trajectories covered on every frame of
      their span by one single predicted id.

    The score is invariant under renaming of predicted ids.
    """
    if not (dist_threshold > 0):
        raise ValueError(f"dist_threshold must be positive, got {dist_threshold}")

    matched_ids: dict[int, list[int | None]] = {
        g.id: [None] * (g.last_frame - g.first_frame + 1) for g in ground_truth
    }
    first_frames = {g.id: g.first_frame for g in ground_truth}
    frames = sorted({f for g in ground_truth for f, _ in g.samples})
    for frame in frames:
        gt_here = [(g.id, g.point_at(frame)) for g in ground_truth]
        gt_here = [(gid, p) for gid, p in gt_here if p is not None]
        pred_here = [(t.id, t.point_at(frame)) for t in predicted]
        pred_here = [(tid, p) for tid, p in pred_here if p is not None]
        if not gt_here or not pred_here:
            continue
        costs = np.full((len(gt_here), len(pred_here)), FORBIDDEN)
        for i, (_, gp) in enumerate(gt_here):
            for j, (_, pp) in enumerate(pred_here):
                d = math.hypot(gp.cx - pp.cx, gp.cy - pp.cy)
                if d <= dist_threshold:
                    costs[i, j] = d
        for i, j in solve(CostMatrix(costs)).pairs:
            gid = gt_here[i][0]
            matched_ids[gid][frame - first_frames[gid]] = pred_here[j][0]

    switches = 0
    fragments = 0
    full = 0
    for g in ground_truth:
        seq = matched_ids[g.id]
        span_ids = [
            seq[f - g.first_frame]
            for f, _ in g.samples
        ]
        last_seen = None
        run_id = object()  # sentinel: no current run
        for mid in span_ids:
            if mid is None:
                run_id = object()
                continue
            if last_seen is not None and mid != last_seen:
                switches += 1
            if mid != run_id:
                fragments += 1
                run_id = mid
            last_seen = mid
        covered = [seq[f - g.first_frame] for f in range(g.first_frame, g.last_frame + 1)]
        if all(mid is not None for mid in covered) and len(set(covered)) == 1:
            full += 1

    return TrackingScore(
        id_switches=switches,
        full_trajectories=full,
        gt_total=len(ground_truth),
        fragments=fragments,
    )


def render_report(scores: dict) -> str:
    """Aligned key/value table for human eyes; JSON stays the machine form."""
    width = max((len(k) for k in scores), default=0)
    lines = []
    for key in scores:
        value = scores[key]
        if isinstance(value, float):
            value = f"{value:.6f}"
        lines.append(f"{key:<{width}}  {value}")
    return "\n".join(lines) + "\n"
