"""Synthetic dense-emulsion scenes: deformable droplets through an orifice.

The dynamics are deliberately kinematic, not fluid-dynamic: droplets ride
a prescribed channel flow, repel each other softly to stay disjoint, and
elongate where the flow is fast. That is enough to produce labeled motion
with the qualitative character of a constricted emulsion video (packed
clusters, acceleration and deformation at the orifice) while staying
controllable and bit-reproducible.

Geometry and flow model
-----------------------
The channel spans x in [0, channel_length] with its axis at
y = channel_width / 2. The open half-gap narrows smoothly to the orifice
half-width following a Gaussian profile of scale channel_width / 2
centered on the orifice. The axial speed follows flux conservation,
scaling with channel_width / (2 * local half-gap), with a parabolic
profile across the gap; ``inflow_speed`` is the centerline speed far from
the orifice. Droplets follow streamlines (constant relative transverse
position), so they funnel toward the axis as the gap narrows.

Deformation: the ellipse aspect grows as
1 + k * max(0, local_speed / inflow_speed - 1) with the axes scaled to
preserve area, so droplets stretch along the flow inside the throat and
relax to circles outside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import BBox
from .raster import blank_image, draw_ellipse
from .rng import substream

_DEFORMATION_GAIN = 0.5
_REPULSION_SWEEPS = 4
_MAX_PACKING = 0.9
_WALL_CLEARANCE = 1.0


@dataclass(frozen=True)
class SceneConfig:
    channel_width: float = 200.0
    channel_length: float = 900.0
    orifice_width: float = 80.0
    orifice_position: float = 450.0
    n_droplets: int = 19
    droplet_radius_mean: float = 13.0
    droplet_radius_std: float = 1.5
    inflow_speed: float = 2.0
    n_frames: int = 120
    seed: int = 7

    def __post_init__(self):
        if not 0 < self.orifice_width < self.channel_width:
            raise ValueError(
                f"orifice width must lie in (0, channel width), got "
                f"{self.orifice_width} vs {self.channel_width}"
            )
        if not 0 < self.orifice_position < self.channel_length:
            raise ValueError("orifice position must lie inside the channel")
        if self.n_droplets < 0:
            raise ValueError("n_droplets must be nonnegative")
        if self.droplet_radius_mean <= 0 or self.droplet_radius_std < 0:
            raise ValueError("droplet radii must be positive")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if self.inflow_speed <= 0:
            raise ValueError("inflow_speed must be positive")


@dataclass(frozen=True)
class DropletState:
    """One droplet in one frame: identity, box, and ellipse geometry."""

    id: int
    bbox: BBox
    a: float
    b: float
    theta: float


@dataclass(frozen=True)
class GroundTruthFrame:
    frame_index: int
    droplets: tuple[DropletState, ...]


@dataclass(frozen=True)
class NoiseModel:
    """Detector-imperfection model applied to ground truth."""

    miss_prob: float = 0.0
    false_positive_rate: float = 0.0
    jitter_std: float = 0.0
    confidence_range: tuple[float, float] = (0.5, 1.0)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.miss_prob <= 1.0:
            raise ValueError(f"miss_prob must be in [0, 1], got {self.miss_prob}")
        if self.false_positive_rate < 0:
            raise ValueError("false_positive_rate must be nonnegative")
        if self.jitter_std < 0:
            raise ValueError("jitter_std must be nonnegative")
        lo, hi = self.confidence_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError(f"confidence_range must be ordered within [0, 1], got {self.confidence_range}")
        object.__setattr__(self, "confidence_range", (float(lo), float(hi)))


@dataclass(frozen=True)
class Palette:
    background: tuple[int, int, int] = (228, 226, 218)
    wall: tuple[int, int, int] = (58, 60, 72)
    droplets: tuple[tuple[int, int, int], ...] = (
        (196, 92, 60),
        (82, 134, 196),
        (104, 168, 92),
        (186, 148, 62),
        (142, 100, 176),
        (72, 166, 166),
        (188, 96, 140),
        (120, 120, 200),
    )


def half_gap(cfg: SceneConfig, x) -> np.ndarray | float:
    """Open half-width of the channel at axial position x."""
    full = cfg.channel_width / 2.0
    throat = cfg.orifice_width / 2.0
    sigma = cfg.channel_width / 2.0
    return full - (full - throat) * np.exp(
        -((np.asarray(x, dtype=float) - cfg.orifice_position) ** 2) / (2 * sigma**2)
    )


def axial_speed(cfg: SceneConfig, x, eta) -> np.ndarray | float:
    """Axial flow speed at position x and relative transverse offset eta."""
    scale = (cfg.channel_width / 2.0) / half_gap(cfg, x)
    return cfg.inflow_speed * scale * (1.0 - np.asarray(eta, dtype=float) ** 2)


def generate_scene(cfg: SceneConfig) -> list[GroundTruthFrame]:
    """Deterministic ground-truth frames for the configured scene.

    Droplets spawn upstream of the orifice and advect downstream for
    n_frames; the spawn region and channel length keep every droplet
    inside the walls for the whole run with the default configuration.
    Raises ValueError when the requested droplets cannot fit (packing
    fraction above 0.9) or placement retries run out.
    """
    radii = _sample_radii(cfg)
    xs, ys = _place_droplets(cfg, radii)
    centerline = cfg.channel_width / 2.0

    thetas = np.zeros(cfg.n_droplets)
    frames = []
    for frame_index in range(1, cfg.n_frames + 1):
        if frame_index > 1:
            xs, ys, thetas = _advance(cfg, xs, ys, radii, thetas)
        speeds = axial_speed(
            cfg, xs, (ys - centerline) / half_gap(cfg, xs)
        )
        droplets = []
        for i in range(cfg.n_droplets):
            a, b = _deformed_axes(cfg, radii[i], float(speeds[i]))
            theta = float(thetas[i])
            ex = math.sqrt((a * math.cos(theta)) ** 2 + (b * math.sin(theta)) ** 2)
            ey = math.sqrt((a * math.sin(theta)) ** 2 + (b * math.cos(theta)) ** 2)
            droplets.append(
                DropletState(
                    id=i + 1,
                    bbox=BBox(float(xs[i] - ex), float(ys[i] - ey), 2 * ex, 2 * ey),
                    a=a,
                    b=b,
                    theta=theta,
                )
            )
        frames.append(GroundTruthFrame(frame_index=frame_index, droplets=tuple(droplets)))
    return frames


def _sample_radii(cfg: SceneConfig) -> np.ndarray:
    gen = substream(cfg.seed, "radii")
    radii = gen.normal(cfg.droplet_radius_mean, cfg.droplet_radius_std, cfg.n_droplets)
    return np.clip(radii, 0.4 * cfg.droplet_radius_mean, 1.6 * cfg.droplet_radius_mean)


def _spawn_range(cfg: SceneConfig, radii: np.ndarray) -> tuple[float, float]:
    """Upstream spawn interval, widened for heavy droplet loads.

    Sequential rejection placement jams well below geometric packing, so
    the region grows until the load sits at a comfortable 35% fill.
    """
    r_max = float(radii.max())
    x_min = r_max + 2.0
    x_max = max(cfg.orifice_position - cfg.channel_width / 2.0, x_min + 1.0)
    droplet_area = float(np.sum(np.pi * radii**2))
    needed = droplet_area / 0.35 / max(cfg.channel_width - 2 * _WALL_CLEARANCE, 1.0)
    x_max = max(x_max, min(x_min + needed, cfg.channel_length - cfg.channel_width))
    return x_min, x_max


def _place_droplets(cfg: SceneConfig, radii: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if cfg.n_droplets == 0:
        return np.zeros(0), np.zeros(0)
    r_max = float(radii.max())
    x_min, x_max = _spawn_range(cfg, radii)
    spawn_area = (x_max - x_min + 2 * r_max) * (cfg.channel_width - 2 * _WALL_CLEARANCE)
    droplet_area = float(np.sum(np.pi * radii**2))
    packing = droplet_area / spawn_area
    if packing > _MAX_PACKING:
        raise ValueError(
            f"droplets cannot fit: packing fraction {packing:.2f} exceeds {_MAX_PACKING}"
        )

    gen = substream(cfg.seed, "placement")
    centerline = cfg.channel_width / 2.0
    xs = np.zeros(cfg.n_droplets)
    ys = np.zeros(cfg.n_droplets)
    for i in range(cfg.n_droplets):
        for attempt in range(5000):
            x = float(gen.uniform(x_min, x_max))
            margin = half_gap(cfg, x) - radii[i] - _WALL_CLEARANCE
            if margin <= 0:
                continue
            y = centerline + float(gen.uniform(-margin, margin))
            d2 = (xs[:i] - x) ** 2 + (ys[:i] - y) ** 2
            if np.all(d2 >= (1.05 * (radii[:i] + radii[i])) ** 2):
                xs[i], ys[i] = x, y
                break
        else:
            raise ValueError(
                f"placement failed for droplet {i + 1}/{cfg.n_droplets}; "
                "scene too dense for rejection sampling"
            )
    return xs, ys


def _deformed_axes(cfg: SceneConfig, radius: float, speed: float) -> tuple[float, float]:
    aspect = 1.0 + _DEFORMATION_GAIN * max(0.0, speed / cfg.inflow_speed - 1.0)
    return radius * math.sqrt(aspect), radius / math.sqrt(aspect)


def _advance(cfg, xs, ys, radii, thetas):
    centerline = cfg.channel_width / 2.0
    gap_here = half_gap(cfg, xs)
    eta = np.clip((ys - centerline) / gap_here, -0.92, 0.92)
    speeds = axial_speed(cfg, xs, eta)
    new_x = xs + speeds
    new_y = centerline + eta * half_gap(cfg, new_x)  # follow streamlines

    # soft pairwise repulsion keeps droplets from interpenetrating
    for _ in range(_REPULSION_SWEEPS):
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                dx = new_x[j] - new_x[i]
                dy = new_y[j] - new_y[i]
                dist = math.hypot(dx, dy)
                contact = radii[i] + radii[j]
                if dist >= contact or dist < 1e-9:
                    continue
                push = 0.3 * (contact - dist) / dist
                new_x[i] -= dx * push / 2
                new_y[i] -= dy * push / 2
                new_x[j] += dx * push / 2
                new_y[j] += dy * push / 2

    # containment: clamp to walls and keep the axial advance bounded
    new_x = np.clip(new_x, radii + 1.0, cfg.channel_length - radii - 1.0)
    margin = half_gap(cfg, new_x) - radii - _WALL_CLEARANCE
    margin = np.maximum(margin, 0.0)
    new_y = np.clip(new_y, centerline - margin, centerline + margin)

    # stability clamp: per-frame displacement stays below 3x inflow speed
    step_x = new_x - xs
    step_y = new_y - ys
    step = np.hypot(step_x, step_y)
    limit = 2.9 * cfg.inflow_speed
    too_fast = step > limit
    if too_fast.any():
        factor = limit / step[too_fast]
        new_x[too_fast] = xs[too_fast] + step_x[too_fast] * factor
        new_y[too_fast] = ys[too_fast] + step_y[too_fast] * factor
        step_x = new_x - xs
        step_y = new_y - ys

    moved = np.hypot(step_x, step_y) > 1e-6
    new_thetas = np.where(moved, np.arctan2(step_y, step_x), thetas)
    return new_x, new_y, new_thetas


def corrupt(
    gt_frames: list[GroundTruthFrame],
    noise: NoiseModel,
    scene: SceneConfig | None = None,
) -> dict[int, list]:
    """Detector-like detections from ground truth, keyed by frame index.

    Each true box is dropped with miss_prob, survivors get Gaussian
    jitter on all four coordinates, and Poisson-many spurious boxes land
    uniformly inside the channel (when ``scene`` is omitted, inside the
    droplets' bounding region instead). Confidences are uniform in the
    configured range. Deterministic per (noise seed, frame index).
    """
    from .tracker import Detection  # deferred: scene generation alone skips tracker machinery

    lo, hi = noise.confidence_range
    result: dict[int, list[Detection]] = {}
    for gtf in gt_frames:
        gen = substream(noise.seed, "corrupt", gtf.frame_index)
        boxes = []
        for drop in gtf.droplets:
            if gen.uniform() < noise.miss_prob:
                continue
            b = drop.bbox
            if noise.jitter_std > 0:
                jx, jy, jw, jh = gen.normal(0.0, noise.jitter_std, 4)
            else:
                jx = jy = jw = jh = 0.0
            boxes.append(
                BBox(b.x + jx, b.y + jy, max(b.w + jw, 2.0), max(b.h + jh, 2.0))
            )
        for _ in range(int(gen.poisson(noise.false_positive_rate))):
            boxes.append(_spurious_box(gen, gtf, scene))
        result[gtf.frame_index] = [
            Detection(bbox=b, confidence=float(gen.uniform(lo, hi))) for b in boxes
        ]
    return result


def _spurious_box(gen, gtf: GroundTruthFrame, scene: SceneConfig | None) -> BBox:
    if gtf.droplets:
        med_w = float(np.median([d.bbox.w for d in gtf.droplets]))
        med_h = float(np.median([d.bbox.h for d in gtf.droplets]))
    else:
        med_w = med_h = 20.0
    w = med_w * float(gen.uniform(0.7, 1.3))
    h = med_h * float(gen.uniform(0.7, 1.3))
    if scene is not None:
        cx = float(gen.uniform(5.0, scene.channel_length - 5.0))
        span = max(float(half_gap(scene, cx)) - 2.0, 1.0)
        cy = scene.channel_width / 2.0 + float(gen.uniform(-span, span))
    elif gtf.droplets:
        xs = [d.bbox.x + d.bbox.w / 2 for d in gtf.droplets]
        ys = [d.bbox.y + d.bbox.h / 2 for d in gtf.droplets]
        cx = float(gen.uniform(min(xs), max(xs) + 1e-6))
        cy = float(gen.uniform(min(ys), max(ys) + 1e-6))
    else:
        cx = float(gen.uniform(0.0, 100.0))
        cy = float(gen.uniform(0.0, 100.0))
    return BBox(cx - w / 2, cy - h / 2, w, h)


def render_frame(
    gtf: GroundTruthFrame, scene: SceneConfig, palette: Palette = Palette()
) -> np.ndarray:
    """Rasterize one frame: walls, background, and filled droplet ellipses.

    The image is channel_length x channel_width pixels; wall pixels are
    those whose centers fall outside the local open gap. Deterministic.
    """
    width = int(round(scene.channel_length))
    height = int(round(scene.channel_width))
    img = blank_image(width, height, palette.background)

    xs = np.arange(width) + 0.5
    gaps = half_gap(scene, xs)
    ys = np.arange(height)[:, None] + 0.5
    wall = np.abs(ys - scene.channel_width / 2.0) > gaps[None, :]
    img[wall] = np.asarray(palette.wall, dtype=np.uint8)

    for drop in gtf.droplets:
        cx = drop.bbox.x + drop.bbox.w / 2.0
        cy = drop.bbox.y + drop.bbox.h / 2.0
        color = palette.droplets[(drop.id - 1) % len(palette.droplets)]
        draw_ellipse(img, cx, cy, drop.a, drop.b, drop.theta, color)
    return img
