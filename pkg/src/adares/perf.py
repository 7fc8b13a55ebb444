"""Pixel-proportional inference-latency model and resize benchmarking.

Cost is modelled as affine in pixel count. Removing the feature pyramid and
keeping only the first (full-resolution) level saves the work spent on the
coarser levels: with per-level downscales ``d_k`` the remaining fraction is
``1 / sum(1 / d_k**2)``. For the usual five levels (1, 2, 4, 8, 16) that is a
saving of about 24.9 %.
"""

from __future__ import annotations

import statistics
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .annotations import read_manifest
from .errors import EmptyPlans, IoError, ValidationError
from .planner import ResizePlan, apply_resize
from .raster import read_pgm

# anchor base sizes per pyramid level in the usual five-level layout
FPN_ANCHOR_SIZES = (32, 64, 128, 256, 512)


@dataclass(frozen=True)
class LatencyModel:
    fixed_overhead_s: float = 0.0
    seconds_per_megapixel: float = 0.01
    fpn_levels_downscale: tuple[float, ...] = (1, 2, 4, 8, 16)

    def __post_init__(self):
        if self.fixed_overhead_s < 0 or self.seconds_per_megapixel < 0:
            raise ValidationError("latency coefficients must be non-negative")
        d = self.fpn_levels_downscale
        if not d or d[0] != 1 or any(b <= a for a, b in zip(d, d[1:])):
            raise ValidationError(f"downscale factors must start at 1 and strictly increase, got {d}")


@dataclass(frozen=True)
class TimingStats:
    min_s: float
    median_s: float
    mean_s: float
    samples: int


@dataclass(frozen=True)
class SpeedupReport:
    baseline_long_side_px: int
    mean_adaptive_pixels: float
    mean_estimated_speedup: float
    per_image_speedups: tuple[float, ...]
    measured_resize_seconds: TimingStats | None = None
    per_image_resize_seconds: dict[str, TimingStats] = field(default_factory=dict)
    per_thread_resize_seconds: dict[str, TimingStats] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        out["per_image_speedups"] = list(self.per_image_speedups)
        return out


@dataclass(frozen=True)
class BenchResult:
    overall: TimingStats
    per_image: dict[str, TimingStats]
    per_thread: dict[str, TimingStats] = field(default_factory=dict)


def fpn_elimination_factor(downscales: Sequence[float] = (1, 2, 4, 8, 16)) -> float:
    """Fraction of forward-pass cost saved by computing only the first pyramid level."""
    LatencyModel(fpn_levels_downscale=tuple(downscales))  # validates
    return 1.0 - 1.0 / sum(1.0 / d**2 for d in downscales)


def latency_estimate(pixels: float, model: LatencyModel = LatencyModel(), with_fpn: bool = True) -> float:
    if pixels < 0:
        raise ValidationError(f"pixel count must be >= 0, got {pixels}")
    factor = 1.0 if with_fpn else 1.0 - fpn_elimination_factor(model.fpn_levels_downscale)
    return model.fixed_overhead_s + model.seconds_per_megapixel * (pixels / 1e6) * factor


def baseline_pixels(plan: ResizePlan, baseline_long_side_px: int) -> float:
    """Pixels after longer-edge resizing to ``baseline_long_side_px`` (aspect kept, no rounding)."""
    sw, sh = plan.source_width_px, plan.source_height_px
    return baseline_long_side_px**2 * (min(sw, sh) / max(sw, sh))


def speedup_report(
    plans: Sequence[ResizePlan],
    baseline_long_side_px: int,
    model: LatencyModel = LatencyModel(),
    adaptive_fpn: bool = False,
) -> SpeedupReport:
    """Estimated per-image speedup of adaptive sizing (FPN removed by default) over the fixed baseline with FPN."""
    if not plans:
        raise EmptyPlans("speedup report needs at least one plan")
    speedups = []
    for p in plans:
        base = latency_estimate(baseline_pixels(p, baseline_long_side_px), model, with_fpn=True)
        adaptive = latency_estimate(p.target_pixels, model, with_fpn=adaptive_fpn)
        speedups.append(base / adaptive)
    return SpeedupReport(
        baseline_long_side_px=baseline_long_side_px,
        mean_adaptive_pixels=statistics.fmean(p.target_pixels for p in plans),
        mean_estimated_speedup=statistics.fmean(speedups),
        per_image_speedups=tuple(speedups),
    )


def _stats(samples: Sequence[float]) -> TimingStats:
    return TimingStats(min(samples), statistics.median(samples), statistics.fmean(samples), len(samples))


def _time_once(image, plan) -> float:
    t0 = time.perf_counter()
    apply_resize(image, plan)
    return time.perf_counter() - t0


def _time_resize(image, plan, repeats: int) -> list[float]:
    apply_resize(image, plan)  # warm-up
    return [_time_once(image, plan) for _ in range(repeats)]


def _time_interleaved(images, plans, repeats: int) -> list[list[float]]:
    # round-robin so slow machine drift lands on every image alike
    for img, plan in zip(images, plans):
        apply_resize(img, plan)
    out: list[list[float]] = [[] for _ in plans]
    for _ in range(repeats):
        for i, (img, plan) in enumerate(zip(images, plans)):
            out[i].append(_time_once(img, plan))
    return out


def bench_resize(
    corpus_dir: str | Path, plans: Sequence[ResizePlan], repeats: int = 5, jobs: int = 1
) -> BenchResult:
    """Wall-clock ``apply_resize`` timings over a corpus written by ``synth``.

    Reports stats per image, pooled over every (image, repetition) sample,
    and, when ``jobs > 1``, per worker thread.
    """
    root = Path(corpus_dir)
    if repeats < 5:
        raise ValidationError("bench_resize needs at least 5 repetitions")
    if not plans:
        raise IoError(f"no images to benchmark in {root}")
    files = {}
    if (root / "manifest.jsonl").exists():
        files = {r.image_id: r.file_path for r in read_manifest(root / "manifest.jsonl").records}
    paths = [root / files.get(p.image_id, f"images/{p.image_id}.pgm") for p in plans]
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        raise IoError(f"missing images: {missing[:3]}{' ...' if len(missing) > 3 else ''}")
    images = [read_pgm(p) for p in paths]

    per_thread: dict[str, list[float]] = {}
    lock = threading.Lock()

    def one(args):
        img, plan = args
        samples = _time_resize(img, plan, repeats)
        with lock:
            per_thread.setdefault(threading.current_thread().name, []).extend(samples)
        return samples

    if jobs > 1:
        with ThreadPoolExecutor(jobs, thread_name_prefix="bench") as pool:
            results = list(pool.map(one, zip(images, plans)))
        thread_stats = {name: _stats(s) for name, s in sorted(per_thread.items())}
    else:
        results = _time_interleaved(images, plans, repeats)
        thread_stats = {}
    per_image = {p.image_id: _stats(r) for p, r in zip(plans, results)}
    overall = _stats([t for r in results for t in r])
    return BenchResult(overall, per_image, thread_stats)


def with_measurements(report: SpeedupReport, bench: BenchResult) -> SpeedupReport:
    return replace(
        report,
        measured_resize_seconds=bench.overall,
        per_image_resize_seconds=bench.per_image,
        per_thread_resize_seconds=bench.per_thread,
    )
