"""Command-line orchestration: simulate, track, score, datagen, bench.

Every command echoes its fully-resolved configuration for provenance and
is deterministic given that configuration (timing numbers excepted).
Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import io as dio
from .datagen import check_fraction, compose, materialize
from .geometry import BBox, center
from .metrics import (
    average_precision,
    counting_error,
    evaluate_detections,
    render_report,
    tracking_score,
)
from .raster import write_ppm
from .simulator import corrupt, generate_scene, render_frame
from .stitcher import stitch
from .tracker import DropletTracker
from .trajectory import Trajectory

_FRACTION_GRID = [round(f / 10, 1) for f in range(11)]


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dropkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", type=Path, help="JSON configuration file")
        p.add_argument("--seed", type=int, help="override all configured seeds")
        if out_required:
            p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("simulate", help="generate a scene: ground truth + detections")
    common(p)
    p.add_argument("--render", action="store_true", help="also write raster frames")

    p = sub.add_parser("track", help="link detections into trajectories")
    p.add_argument("detections", type=Path, help="MOT-style detection file")
    common(p)
    p.add_argument("--stitch", action="store_true", help="glue trajectory fragments")

    p = sub.add_parser("score", help="score tracked output against ground truth")
    p.add_argument("pred_dir", type=Path, help="directory written by 'track'")
    p.add_argument("gt", type=Path, help="ground-truth CSV")
    p.add_argument("--detections", type=Path, help="detection file for AP scoring")
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--out", type=Path, help="write scores here instead of stdout")

    p = sub.add_parser("datagen", help="compose the eleven hybrid datasets")
    common(p)
    p.add_argument(
        "--synthetic-only",
        action="store_true",
        help="generate only the 100%% synthetic dataset (no real pool needed)",
    )
    p.add_argument("--jobs", type=int, default=1, help="parallel image rendering")

    p = sub.add_parser("bench", help="time the tracking stages")
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--seed", type=int, help="override all configured seeds")
    return parser


def _load_config(args) -> dio.RunConfig:
    text = args.config.read_text() if getattr(args, "config", None) else ""
    cfg = dio.load_config(text)
    seed = getattr(args, "seed", None)
    if seed is not None:
        cfg = dataclasses.replace(
            cfg,
            scene=dataclasses.replace(cfg.scene, seed=seed),
            noise=dataclasses.replace(cfg.noise, seed=seed),
            datagen=dataclasses.replace(cfg.datagen, master_seed=seed),
        )
    return cfg


def _echo_config(cfg: dio.RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_echo.json").write_text(dio.dump_config(cfg))


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    frames = generate_scene(cfg.scene)
    detections = corrupt(frames, cfg.noise, cfg.scene)
    out: Path = args.out
    _echo_config(cfg, out)
    (out / "ground_truth.csv").write_text(dio.write_ground_truth(frames))
    (out / "detections.csv").write_text(dio.write_detections(detections))
    if args.render:
        frame_dir = out / "frames"
        frame_dir.mkdir(exist_ok=True)
        for gtf in frames:
            img = render_frame(gtf, cfg.scene)
            (frame_dir / f"frame_{gtf.frame_index:06d}.ppm").write_bytes(write_ppm(img))
    return 0


def _run_tracker(detections, cfg: dio.RunConfig, use_stitch: bool) -> list[Trajectory]:
    tracker = DropletTracker(cfg.tracker)
    last = max(detections, default=0)
    for frame in range(1, last + 1):
        tracker.step(frame, detections.get(frame, []))
    trajectories = tracker.extract_trajectories()
    if use_stitch:
        trajectories = stitch(trajectories, cfg.stitch)
    return trajectories


def _trajectory_counts(trajectories: list[Trajectory], n_frames: int) -> dict[int, int]:
    counts = {frame: 0 for frame in range(1, n_frames + 1)}
    for traj in trajectories:
        for frame, _ in traj.samples:
            if frame in counts:
                counts[frame] += 1
    return counts


def cmd_track(args) -> int:
    cfg = _load_config(args)
    detections = dio.read_detections(args.detections.read_text())
    trajectories = _run_tracker(detections, cfg, args.stitch)
    last = max(detections, default=0)
    out: Path = args.out
    _echo_config(cfg, out)
    (out / "trajectories.csv").write_text(dio.write_trajectories(trajectories))
    (out / "counts.csv").write_text(dio.write_counts(_trajectory_counts(trajectories, last)))
    return 0


def _gt_trajectories(gt_frames: dict[int, list[tuple[int, BBox]]]) -> list[Trajectory]:
    samples: dict[int, list] = {}
    for frame in sorted(gt_frames):
        for obj, box in gt_frames[frame]:
            samples.setdefault(obj, []).append((frame, center(box)))
    return [Trajectory(id=obj, samples=tuple(pts)) for obj, pts in sorted(samples.items())]


def _auto_dist_threshold(gt_frames) -> float:
    diameters = [
        (box.w + box.h) / 2.0 for boxes in gt_frames.values() for _, box in boxes
    ]
    if not diameters:
        return 1.0
    return max(sum(diameters) / len(diameters) / 2.0, 1e-6)


def _score(pred_dir: Path, gt_path: Path, cfg: dio.RunConfig, det_path: Path | None) -> dict:
    gt_frames = dio.read_ground_truth(gt_path.read_text())
    gt_counts = {frame: len(boxes) for frame, boxes in gt_frames.items()}
    pred_counts = dio.read_counts((pred_dir / "counts.csv").read_text())
    frames = sorted(gt_counts)
    if frames != sorted(pred_counts):
        raise dio.FormatError(
            f"frame ranges differ: ground truth has {len(gt_counts)} frames "
            f"({min(frames, default=0)}..{max(frames, default=0)}), predictions have "
            f"{len(pred_counts)}"
        )
    manual = [gt_counts[f] for f in frames]
    predicted = [pred_counts[f] for f in frames]

    trajectories = dio.read_trajectories((pred_dir / "trajectories.csv").read_text())
    gt_trajs = _gt_trajectories(gt_frames)
    dist_thr = cfg.metrics.dist_threshold or _auto_dist_threshold(gt_frames)
    track_result = tracking_score(trajectories, gt_trajs, dist_thr)

    ap = None
    if det_path is not None:
        det_frames = dio.read_detections(det_path.read_text())
        flags, n_gt = evaluate_detections(
            {f: [(d.bbox, d.confidence) for d in dets] for f, dets in det_frames.items()},
            {f: [box for _, box in boxes] for f, boxes in gt_frames.items()},
            cfg.metrics.iou_threshold,
        )
        ap = average_precision(flags, n_gt)

    return {
        "mse": counting_error(manual, predicted),
        "ap": ap,
        "id_switches": track_result.id_switches,
        "full_trajectories": track_result.full_trajectories,
        "gt_total": track_result.gt_total,
        "fragments": track_result.fragments,
    }


def cmd_score(args) -> int:
    cfg = _load_config(args)
    scores = _score(args.pred_dir, args.gt, cfg, args.detections)
    payload = json.dumps(scores, indent=2, sort_keys=True) + "\n"
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "scores.json").write_text(payload)
        (args.out / "scores.txt").write_text(render_report(scores))
    else:
        sys.stdout.write(payload)
    return 0


def _scan_real_pool(pool_dir: Path) -> list[tuple[str, str]]:
    pairs = []
    for image in sorted(pool_dir.iterdir()):
        if image.suffix == ".txt" or not image.is_file():
            continue
        label = image.with_suffix(".txt")
        if label.exists():
            pairs.append((str(image), str(label)))
    return pairs


def cmd_datagen(args) -> int:
    cfg = _load_config(args)
    dg = cfg.datagen
    fractions = [1.0] if args.synthetic_only else _FRACTION_GRID
    pool: list[tuple[str, str]] = []
    if any(f < 1.0 for f in fractions):
        if dg.real_pool is None:
            raise dio.FormatError(
                "datagen.real_pool is required unless --synthetic-only is given"
            )
        pool = _scan_real_pool(Path(dg.real_pool))
    out: Path = args.out
    _echo_config(cfg, out)
    for fraction in fractions:
        manifest = compose(
            pool,
            check_fraction(fraction),
            total=dg.total,
            master_seed=dg.master_seed,
            image_spec=dg.image,
        )
        materialize(manifest, out / f"{int(round(fraction * 100)):03d}", jobs=args.jobs)
    return 0


@dataclass(frozen=True)
class StageStats:
    mean: float
    min: float
    max: float

    @staticmethod
    def of(samples: list[float]) -> "StageStats":
        return StageStats(statistics.fmean(samples), min(samples), max(samples))


@dataclass(frozen=True)
class BenchmarkReport:
    stages: dict[str, StageStats]
    throughput_fps: float
    droplets: int
    frames: int
    config_hash: str

    def to_json(self) -> str:
        doc = {
            "stages": {
                name: {"mean_s": s.mean, "min_s": s.min, "max_s": s.max}
                for name, s in self.stages.items()
            },
            "throughput_fps": self.throughput_fps,
            "droplets": self.droplets,
            "frames": self.frames,
            "config_hash": self.config_hash,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        header = f"{'stage':<10} {'mean s/frame':>14} {'min':>12} {'max':>12} {'fps':>10}"
        rows = [header, "-" * len(header)]
        for name, s in self.stages.items():
            fps = 1.0 / s.mean if s.mean > 0 else float("inf")
            rows.append(
                f"{name:<10} {s.mean:>14.6f} {s.min:>12.6f} {s.max:>12.6f} {fps:>10.1f}"
            )
        rows.append(
            f"{'total':<10} {'':>14} {'':>12} {'':>12} {self.throughput_fps:>10.1f}"
        )
        return "\n".join(rows) + "\n"


def run_benchmark(cfg: dio.RunConfig) -> BenchmarkReport:
    """Per-stage timings over one simulated scene; file I/O excluded."""
    frames = generate_scene(cfg.scene)
    detections = corrupt(frames, cfg.noise, cfg.scene)

    tracker = DropletTracker(cfg.tracker)
    track_times = []
    for gtf in frames:
        dets = detections.get(gtf.frame_index, [])
        start = time.perf_counter()
        tracker.step(gtf.frame_index, dets)
        track_times.append(time.perf_counter() - start)

    start = time.perf_counter()
    trajectories = stitch(tracker.extract_trajectories(), cfg.stitch)
    stitch_time = time.perf_counter() - start

    gt_trajs = [
        Trajectory(
            id=i + 1,
            samples=tuple(
                (f.frame_index, center(f.droplets[i].bbox)) for f in frames
            ),
        )
        for i in range(cfg.scene.n_droplets)
    ]
    start = time.perf_counter()
    if gt_trajs:
        dist_thr = (
            cfg.metrics.dist_threshold
            or sum((d.bbox.w + d.bbox.h) / 2 for f in frames for d in f.droplets)
            / max(sum(len(f.droplets) for f in frames), 1)
            / 2
        )
        tracking_score(trajectories, gt_trajs, dist_thr)
    score_time = time.perf_counter() - start

    n = len(frames)
    stages = {
        "track": StageStats.of(track_times),
        "stitch": StageStats(stitch_time / n, stitch_time / n, stitch_time / n),
        "score": StageStats(score_time / n, score_time / n, score_time / n),
    }
    mean_total = sum(s.mean for s in stages.values())
    return BenchmarkReport(
        stages=stages,
        throughput_fps=1.0 / mean_total if mean_total > 0 else float("inf"),
        droplets=cfg.scene.n_droplets,
        frames=n,
        config_hash=hashlib.sha256(dio.dump_config(cfg).encode()).hexdigest()[:16],
    )


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    report = run_benchmark(cfg)
    sys.stdout.write(report.to_json())
    sys.stdout.write(report.table())
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "track": cmd_track,
    "score": cmd_score,
    "datagen": cmd_datagen,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (dio.FormatError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
