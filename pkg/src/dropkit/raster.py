"""Minimal rasterization and binary portable pixmap (P6) I/O.

Kept dependency-free on purpose: frames must be writable and readable
without any imaging library.
"""

from __future__ import annotations

import math

import numpy as np


def blank_image(width: int, height: int, color) -> np.ndarray:
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:, :] = np.asarray(color, dtype=np.uint8)
    return img


def ellipse_mask(
    width: int,
    height: int,
    cx: float,
    cy: float,
    a: float,
    b: float,
    theta: float = 0.0,
) -> np.ndarray:
    """Boolean mask of the filled rotated ellipse, evaluated at pixel centers."""
    # limit work to the ellipse's bounding box
    ex = math.sqrt((a * math.cos(theta)) ** 2 + (b * math.sin(theta)) ** 2)
    ey = math.sqrt((a * math.sin(theta)) ** 2 + (b * math.cos(theta)) ** 2)
    x0 = max(int(math.floor(cx - ex)) - 1, 0)
    x1 = min(int(math.ceil(cx + ex)) + 2, width)
    y0 = max(int(math.floor(cy - ey)) - 1, 0)
    y1 = min(int(math.ceil(cy + ey)) + 2, height)
    mask = np.zeros((height, width), dtype=bool)
    if x0 >= x1 or y0 >= y1:
        return mask
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx = xs + 0.5 - cx
    dy = ys + 0.5 - cy
    u = dx * math.cos(theta) + dy * math.sin(theta)
    v = -dx * math.sin(theta) + dy * math.cos(theta)
    mask[y0:y1, x0:x1] = (u / a) ** 2 + (v / b) ** 2 <= 1.0
    return mask


def draw_ellipse(img: np.ndarray, cx, cy, a, b, theta, color) -> None:
    h, w = img.shape[:2]
    mask = ellipse_mask(w, h, cx, cy, a, b, theta)
    img[mask] = np.asarray(color, dtype=np.uint8)


def write_ppm(img: np.ndarray) -> bytes:
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError("expected (H, W, 3) uint8 image")
    h, w = img.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + img.tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    if not data.startswith(b"P6"):
        raise ValueError("not a binary P6 pixmap")
    pos, fields = 2, []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated pixmap header")
        fields.append(int(data[start:pos]))
    pos += 1  # exactly one whitespace byte separates header from payload
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    if pixels.size != w * h * 3:
        raise ValueError("truncated pixmap payload")
    return pixels.reshape(h, w, 3).copy()
