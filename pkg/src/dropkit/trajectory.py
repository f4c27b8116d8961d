"""Identity-bearing center trajectories shared by tracker, stitcher, and metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import Point


@dataclass(frozen=True)
class Trajectory:
    """Ordered (frame, center) samples under one identity.

    ``source_ids`` lists the original track ids merged into this
    trajectory (just the own id until a stitcher merge).
    """

    id: int
    samples: tuple[tuple[int, Point], ...]
    source_ids: tuple[int, ...] = field(default=())

    def __post_init__(self):
        samples = tuple((int(f), p) for f, p in self.samples)
        if not samples:
            raise ValueError("trajectory needs at least one sample")
        frames = [f for f, _ in samples]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"trajectory {self.id}: frames not strictly increasing")
        object.__setattr__(self, "samples", samples)
        source = tuple(self.source_ids) if self.source_ids else (self.id,)
        object.__setattr__(self, "source_ids", source)

    @property
    def first_frame(self) -> int:
        return self.samples[0][0]

    @property
    def last_frame(self) -> int:
        return self.samples[-1][0]

    def point_at(self, frame: int) -> Point | None:
        lo, hi = 0, len(self.samples) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            f, p = self.samples[mid]
            if f == frame:
                return p
            if f < frame:
                lo = mid + 1
            else:
                hi = mid - 1
        return None
