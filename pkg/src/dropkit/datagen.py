"""Synthetic training images and hybrid real/synthetic dataset composition.

A synthetic image is a handful of solid ellipses on a uniform random
background, each ellipse a random color kept channelwise-distinguishable
from the background, labeled by its tight axis-aligned bounds. Circles
are just the equal-axes case. Ellipses may overlap (dense emulsions
occlude too); each still gets its own full box.

A dataset of fixed total size mixes a sampled subset of a real labeled
pool with freshly generated synthetic images at one of the eleven
fractions 0.0, 0.1, ..., 1.0. The manifest records everything needed to
rebuild the dataset byte for byte: paths of the chosen real pairs and
the full spec (including seed) of every synthetic image.
"""

from __future__ import annotations

import json
import math
import shutil
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .geometry import BBox
from .raster import blank_image, draw_ellipse, write_ppm
from .rng import derive_seeds, substream

_MIN_COLOR_SEPARATION = 30  # channelwise, 0..255 scale
_GRID_STEPS = 11


@dataclass(frozen=True)
class SyntheticImageSpec:
    width: int = 640
    height: int = 480
    n_ellipses_range: tuple[int, int] = (3, 12)
    axis_range: tuple[float, float] = (8.0, 60.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "n_ellipses_range", tuple(int(v) for v in self.n_ellipses_range))
        object.__setattr__(self, "axis_range", tuple(float(v) for v in self.axis_range))
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        lo, hi = self.n_ellipses_range
        if not 0 <= lo <= hi:
            raise ValueError(f"bad ellipse count range {self.n_ellipses_range}")
        alo, ahi = self.axis_range
        if not 0 < alo <= ahi:
            raise ValueError(f"bad axis range {self.axis_range}")
        if 2 * ahi >= min(self.width, self.height):
            raise ValueError(
                f"axes up to {ahi} cannot fit inside {self.width}x{self.height}"
            )


@dataclass(frozen=True)
class DatasetManifest:
    total: int
    synthetic_fraction: float
    real_entries: tuple[tuple[str, str], ...]
    synthetic_entries: tuple[SyntheticImageSpec, ...]
    master_seed: int

    def __post_init__(self):
        expected = _synthetic_count(self.synthetic_fraction, self.total)
        if len(self.synthetic_entries) != expected:
            raise ValueError(
                f"{len(self.synthetic_entries)} synthetic entries, expected {expected}"
            )
        if len(self.real_entries) != self.total - expected:
            raise ValueError(
                f"{len(self.real_entries)} real entries, expected {self.total - expected}"
            )

    def to_json(self) -> str:
        doc = {
            "total": self.total,
            "synthetic_fraction": self.synthetic_fraction,
            "real_entries": [list(pair) for pair in self.real_entries],
            "synthetic_entries": [asdict(s) for s in self.synthetic_entries],
            "master_seed": self.master_seed,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "DatasetManifest":
        doc = json.loads(text)
        return DatasetManifest(
            total=doc["total"],
            synthetic_fraction=doc["synthetic_fraction"],
            real_entries=tuple((str(a), str(b)) for a, b in doc["real_entries"]),
            synthetic_entries=tuple(
                SyntheticImageSpec(
                    width=s["width"],
                    height=s["height"],
                    n_ellipses_range=tuple(s["n_ellipses_range"]),
                    axis_range=tuple(s["axis_range"]),
                    seed=s["seed"],
                )
                for s in doc["synthetic_entries"]
            ),
            master_seed=doc["master_seed"],
        )


def _synthetic_count(fraction: float, total: int) -> int:
    return int(round(fraction * total))


def check_fraction(fraction: float) -> float:
    """Validate membership in the eleven-step grid 0.0, 0.1, ..., 1.0."""
    tenths = round(fraction * 10)
    if not (0 <= tenths <= 10) or abs(fraction * 10 - tenths) > 1e-9:
        raise ValueError(f"fraction must be one of 0.0, 0.1, ..., 1.0; got {fraction}")
    return tenths / 10.0


def render_synthetic(spec: SyntheticImageSpec) -> tuple[np.ndarray, list[BBox]]:
    """One labeled synthetic image, deterministic per spec.

    Placement retries are bounded; if an ellipse cannot be placed the
    image simply carries fewer ellipses (reflected in the label count).
    """
    gen = substream(spec.seed, "synthetic-image")
    background = gen.integers(0, 256, size=3)
    img = blank_image(spec.width, spec.height, background)
    count = int(gen.integers(spec.n_ellipses_range[0], spec.n_ellipses_range[1] + 1))
    boxes: list[BBox] = []
    for _ in range(count):
        placed = _place_ellipse(gen, spec)
        if placed is None:
            continue
        cx, cy, a, b, theta, ex, ey = placed
        color = _pick_color(gen, background)
        draw_ellipse(img, cx, cy, a, b, theta, color)
        boxes.append(BBox(cx - ex, cy - ey, 2 * ex, 2 * ey))
    return img, boxes


def _place_ellipse(gen, spec):
    for _ in range(100):
        a = float(gen.uniform(*spec.axis_range))
        b = float(gen.uniform(*spec.axis_range))
        theta = float(gen.uniform(0.0, math.pi))
        ex = math.sqrt((a * math.cos(theta)) ** 2 + (b * math.sin(theta)) ** 2)
        ey = math.sqrt((a * math.sin(theta)) ** 2 + (b * math.cos(theta)) ** 2)
        if 2 * ex >= spec.width - 2 or 2 * ey >= spec.height - 2:
            continue
        cx = float(gen.uniform(ex + 1, spec.width - ex - 1))
        cy = float(gen.uniform(ey + 1, spec.height - ey - 1))
        return cx, cy, a, b, theta, ex, ey
    return None


def _pick_color(gen, background) -> np.ndarray:
    for _ in range(100):
        color = gen.integers(0, 256, size=3)
        if int(np.max(np.abs(color - background))) >= _MIN_COLOR_SEPARATION:
            return color
    return (background + 128) % 256  # guaranteed separated


def write_yolo_labels(boxes: list[BBox], width: float, height: float) -> str:
    """Normalized single-class label lines: ``0 cx cy w h`` per box."""
    lines = []
    for b in boxes:
        if b.x < 0 or b.y < 0 or b.x + b.w > width or b.y + b.h > height:
            raise ValueError(f"box {b.as_tuple()} exceeds image bounds {width}x{height}")
        lines.append(
            "0 %.6f %.6f %.6f %.6f\n"
            % ((b.x + b.w / 2) / width, (b.y + b.h / 2) / height, b.w / width, b.h / height)
        )
    return "".join(lines)


def read_yolo_labels(text: str, width: float, height: float) -> list[BBox]:
    boxes = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"label line {lineno}: expected 5 fields, got {len(parts)}")
        _, ncx, ncy, nw, nh = (float(v) for v in parts)
        w, h = nw * width, nh * height
        boxes.append(BBox(ncx * width - w / 2, ncy * height - h / 2, w, h))
    return boxes


def compose(
    real_pool: list[tuple[str, str]],
    fraction: float,
    total: int = 800,
    master_seed: int = 0,
    image_spec: SyntheticImageSpec = SyntheticImageSpec(),
) -> DatasetManifest:
    """Recipe for one hybrid dataset at a grid fraction.

    Samples the real subset without replacement and derives one child
    seed per synthetic image, so the manifest alone determines every
    output byte. Raises when the real pool cannot cover the real share.
    """
    fraction = check_fraction(fraction)
    n_synthetic = _synthetic_count(fraction, total)
    n_real = total - n_synthetic
    if len(real_pool) < n_real:
        raise ValueError(
            f"real pool has {len(real_pool)} labeled images, need {n_real} "
            f"(short by {n_real - len(real_pool)})"
        )
    gen = substream(master_seed, f"real-selection-{fraction:.1f}")
    picked = sorted(gen.permutation(len(real_pool))[:n_real].tolist())
    seeds = derive_seeds(master_seed, f"synthetic-seeds-{fraction:.1f}", n_synthetic)
    return DatasetManifest(
        total=total,
        synthetic_fraction=fraction,
        real_entries=tuple((str(real_pool[i][0]), str(real_pool[i][1])) for i in picked),
        synthetic_entries=tuple(
            SyntheticImageSpec(
                width=image_spec.width,
                height=image_spec.height,
                n_ellipses_range=image_spec.n_ellipses_range,
                axis_range=image_spec.axis_range,
                seed=seed,
            )
            for seed in seeds
        ),
        master_seed=master_seed,
    )


def materialize(manifest: DatasetManifest, out_dir: str | Path, jobs: int = 1) -> None:
    """Write the dataset: copied real pairs, rendered synthetic pairs,
    and the manifest itself."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for idx, (img_path, label_path) in enumerate(manifest.real_entries):
        suffix = Path(img_path).suffix or ".ppm"
        shutil.copyfile(img_path, out / f"real_{idx:06d}{suffix}")
        shutil.copyfile(label_path, out / f"real_{idx:06d}.txt")

    specs = list(enumerate(manifest.synthetic_entries))
    if jobs > 1 and len(specs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for idx, ppm, labels in pool.map(_render_entry, specs, chunksize=8):
                (out / f"syn_{idx:06d}.ppm").write_bytes(ppm)
                (out / f"syn_{idx:06d}.txt").write_text(labels)
    else:
        for item in specs:
            idx, ppm, labels = _render_entry(item)
            (out / f"syn_{idx:06d}.ppm").write_bytes(ppm)
            (out / f"syn_{idx:06d}.txt").write_text(labels)

    (out / "manifest.json").write_text(manifest.to_json())


def _render_entry(item: tuple[int, SyntheticImageSpec]):
    idx, spec = item
    img, boxes = render_synthetic(spec)
    return idx, write_ppm(img), write_yolo_labels(boxes, spec.width, spec.height)
