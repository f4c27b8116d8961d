"""Post-hoc gluing of trajectory fragments left by identity switches.

Tracking failures split one physical object into several short
trajectories. A fragment pair (A, B) is a link candidate when B starts
shortly after A ends and B's first point lies close to where A's final
velocity says the object should be. Candidates compete in one optimal
assignment (cost = extrapolation error) so multi-way ambiguities resolve
deterministically, then consistent links chain into merged trajectories.
Passes repeat until no link is found, which makes the whole operation a
fixed point: stitching an already-stitched set changes nothing.

Linking uses only constant-velocity extrapolation of centers: positions
are all a finished trajectory retains, so appearance cannot help here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assignment import FORBIDDEN, CostMatrix, solve
from .trajectory import Trajectory


@dataclass(frozen=True)
class StitchConfig:
    """Gap-closing limits.

    ``max_link_dist=None`` derives the limit from the data as 3x the
    median per-frame displacement over the segments being stitched.
    """

    max_gap: int = 10
    max_link_dist: float | None = None
    velocity_window: int = 5

    def __post_init__(self):
        if self.max_gap < 0:
            raise ValueError(f"max_gap must be >= 0, got {self.max_gap}")
        if self.max_link_dist is not None and not (
            math.isfinite(self.max_link_dist) and self.max_link_dist > 0
        ):
            raise ValueError(f"max_link_dist must be positive, got {self.max_link_dist}")
        if self.velocity_window < 1:
            raise ValueError(f"velocity_window must be >= 1, got {self.velocity_window}")


def stitch(segments: list[Trajectory], cfg: StitchConfig = StitchConfig()) -> list[Trajectory]:
    """Merge linkable fragments; everything else passes through unchanged.

    Sample counts are conserved exactly and temporally overlapping
    segments are never merged (a link requires a strictly positive frame
    gap).
    """
    current = sorted(segments, key=lambda t: (t.first_frame, t.id))
    while len(current) > 1:
        merged = _stitch_pass(current, cfg)
        if len(merged) == len(current):
            return merged
        current = merged
    return current


def _stitch_pass(segments: list[Trajectory], cfg: StitchConfig) -> list[Trajectory]:
    link_dist = cfg.max_link_dist
    if link_dist is None:
        link_dist = 3.0 * _median_step(segments)

    n = len(segments)
    costs = np.full((n, n), FORBIDDEN)
    if link_dist > 0 and cfg.max_gap > 0:
        for i, a in enumerate(segments):
            vx, vy = _end_velocity(a, cfg.velocity_window)
            last = a.samples[-1][1]
            for j, b in enumerate(segments):
                gap = b.first_frame - a.last_frame
                if gap <= 0 or gap > cfg.max_gap:
                    continue
                start = b.samples[0][1]
                err = math.hypot(
                    last.cx + vx * gap - start.cx, last.cy + vy * gap - start.cy
                )
                if err <= link_dist:
                    costs[i, j] = err

    next_seg = {}
    has_prev = set()
    for i, j in solve(CostMatrix(costs)).pairs:
        next_seg[i] = j
        has_prev.add(j)
    if not next_seg:
        return segments

    merged = []
    for i, seg in enumerate(segments):
        if i in has_prev:
            continue
        chain = [seg]
        k = i
        while k in next_seg:
            k = next_seg[k]
            chain.append(segments[k])
        if len(chain) == 1:
            merged.append(seg)
        else:
            samples = tuple(s for part in chain for s in part.samples)
            source = tuple(sid for part in chain for sid in part.source_ids)
            merged.append(Trajectory(id=chain[0].id, samples=samples, source_ids=source))
    return sorted(merged, key=lambda t: (t.first_frame, t.id))


def _end_velocity(traj: Trajectory, window: int) -> tuple[float, float]:
    tail = traj.samples[-window:]
    if len(tail) < 2:
        return 0.0, 0.0
    (f0, p0), (f1, p1) = tail[0], tail[-1]
    span = f1 - f0
    return (p1.cx - p0.cx) / span, (p1.cy - p0.cy) / span


def _median_step(segments: list[Trajectory]) -> float:
    steps = []
    for traj in segments:
        for (f0, p0), (f1, p1) in zip(traj.samples, traj.samples[1:]):
            steps.append(math.hypot(p1.cx - p0.cx, p1.cy - p0.cy) / (f1 - f0))
    return float(np.median(steps)) if steps else 0.0
