"""Axis-aligned bounding boxes and the center/aspect measurement form."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BBox:
    """Box in top-left / width / height pixel coordinates.

    Coordinates are real-valued (sub-pixel positions are fine); zero or
    negative extents are rejected at construction because every formula
    downstream divides by area or height.
    """

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"non-finite bbox field {name}={v!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"degenerate bbox: w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class Point:
    cx: float
    cy: float

    def __post_init__(self):
        if not (math.isfinite(self.cx) and math.isfinite(self.cy)):
            raise ValueError(f"non-finite point ({self.cx}, {self.cy})")


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes; 0.0 when disjoint."""
    if a == b:
        return 1.0
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    # edge subtraction can round the ratio past 1 for near-identical boxes
    return min(inter / (a.area + b.area - inter), 1.0)


def center(b: BBox) -> Point:
    return Point(b.x + b.w / 2.0, b.y + b.h / 2.0)


def to_measurement(b: BBox) -> np.ndarray:
    """Convert a box to the (cx, cy, aspect, h) filter measurement."""
    return np.array([b.x + b.w / 2.0, b.y + b.h / 2.0, b.w / b.h, b.h])


def from_measurement(m) -> BBox:
    """Inverse of :func:`to_measurement`."""
    cx, cy, aspect, h = (float(v) for v in m)
    w = aspect * h
    return BBox(cx - w / 2.0, cy - h / 2.0, w, h)


def boxes_to_array(boxes) -> np.ndarray:
    """Stack boxes into an (N, 4) x/y/w/h array (empty input gives (0, 4))."""
    if len(boxes) == 0:
        return np.zeros((0, 4))
    return np.array([b.as_tuple() for b in boxes], dtype=float)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between (N, 4) and (M, 4) x/y/w/h arrays."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    ax1, ay1 = a[:, 0, None], a[:, 1, None]
    ax2, ay2 = ax1 + a[:, 2, None], ay1 + a[:, 3, None]
    bx1, by1 = b[None, :, 0], b[None, :, 1]
    bx2, by2 = bx1 + b[None, :, 2], by1 + b[None, :, 3]
    iw = np.clip(np.minimum(ax2, bx2) - np.maximum(ax1, bx1), 0.0, None)
    ih = np.clip(np.minimum(ay2, by2) - np.maximum(ay1, by1), 0.0, None)
    inter = iw * ih
    union = a[:, 2, None] * a[:, 3, None] + b[None, :, 2] * b[None, :, 3] - inter
    return inter / union
