"""``adares`` command line: the adaptive-resizing pipeline as chainable subcommands.

Exit codes: 0 ok, 1 usage error, 2 data/validation error, 3 I/O error. Every
failure prints one ``error[<code>]: <Kind>: <message>`` line to stderr.
Option defaults can be overridden with ``ADARES_<OPTION>`` environment
variables (e.g. ``ADARES_SEED=3``, ``ADARES_REF_PX=48``); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .altitude import annotate_dataset, load_priors
from .annotations import read_manifest, write_manifest
from .camera import load_camera
from .errors import AdaresError, IoError, ValidationError
from .evaluation import dump_detections, evaluate, read_detections
from .perf import LatencyModel, bench_resize, speedup_report, with_measurements
from .pipeline import file_source, plans_by_id, run_detection
from .planner import (
    DEFAULT_BIN_WIDTH_PX,
    ReferenceSpec,
    ResizePolicy,
    apply_resize,
    dump_plans,
    plan_dataset,
    read_plans,
    size_histogram,
    transform_boxes,
)
from .raster import read_pgm, write_pgm
from .splits import SplitKind, build_split
from .synthetic import PSYN, AltitudeSampler, DetectorConfig, SceneConfig, generate_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n\n{self.format_help()}")


def _env(flag: str, default, type_=str):
    name = "ADARES_" + flag.lstrip("-").replace("-", "_").upper()
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return type_(raw)
    except ValueError:
        raise UsageError(f"environment variable {name}={raw!r} is not a valid value") from None


def _opt(p: argparse.ArgumentParser, flag: str, default=None, type=str, short: str | None = None, **kw):
    default = _env(flag, default, type)
    if kw.get("required") and default is not None:
        kw["required"] = False
    if default is not None and "help" in kw:
        kw["help"] += " (default: %(default)s)"
    flags = (short, flag) if short else (flag,)
    p.add_argument(*flags, default=default, type=type, **kw)


def _flag(p: argparse.ArgumentParser, flag: str, help: str):
    default = _env(flag, "0") not in ("0", "", "false", "False")
    p.add_argument(flag, action="store_true", default=default, help=help)


def _write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _emit(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        _write_text(path, text)


def _manifest_root(args) -> Path:
    return Path(args.root) if getattr(args, "root", None) else Path(args.manifest).parent


# subcommands ---------------------------------------------------------------


def cmd_plan(args) -> int:
    manifest = read_manifest(args.manifest)
    profile = load_camera(args.camera)
    spec = ReferenceSpec(args.anchor_class, args.ref_m, args.ref_px)
    policy = ResizePolicy(args.stride, args.max_upscale, args.max_side, args.min_side)
    plans, hist = plan_dataset(manifest, profile, spec, policy, args.bin_width, jobs=args.jobs)
    _emit(args.output, dump_plans(plans))
    if args.hist:
        _write_text(args.hist, hist.to_csv())
    return EXIT_OK


def cmd_resize(args) -> int:
    manifest = read_manifest(args.manifest)
    plans = plans_by_id(read_plans(args.plans))
    root, out = _manifest_root(args), Path(args.out)
    try:
        (out / "images").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc
    for rec in manifest.records:
        if rec.image_id not in plans:
            raise ValidationError("no plan for record", image_id=rec.image_id)

    def one(rec):
        plan = plans[rec.image_id]
        rel = f"images/{rec.image_id}.pgm"
        write_pgm(out / rel, apply_resize(read_pgm(root / rec.file_path), plan))
        return replace(rec, file_path=rel, width_px=plan.target_width_px, height_px=plan.target_height_px,
                       boxes=tuple(transform_boxes(rec.boxes, plan)))

    if args.jobs > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            records = list(pool.map(one, manifest.records))
    else:
        records = [one(r) for r in manifest.records]
    write_manifest(manifest.with_records(records), out / "manifest.jsonl")
    return EXIT_OK


def cmd_annotate(args) -> int:
    manifest = read_manifest(args.manifest)
    profile = load_camera(args.camera)
    priors = load_priors(args.priors, manifest.class_names)
    annotated, report = annotate_dataset(manifest, profile, priors, overwrite=args.overwrite, jobs=args.jobs)
    write_manifest(annotated, args.output)
    print(f"filled={len(report.filled)} retained={len(report.retained)} failed={len(report.failed)}", file=sys.stderr)
    for image_id in report.failed:
        print(f"warning: no altitude estimate for {image_id}", file=sys.stderr)
    return EXIT_OK


def cmd_split(args) -> int:
    manifest = read_manifest(args.manifest)
    result = build_split(manifest, SplitKind.parse(args.kind))
    write_manifest(result.train, args.train_out)
    write_manifest(result.holdout, args.holdout_out)
    print(f"threshold_altitude_m={result.threshold_altitude_m!r} train={len(result.train)} holdout={len(result.holdout)}")
    return EXIT_OK


def _parse_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    try:
        return int(lo), int(hi or lo)
    except ValueError:
        raise ValidationError(f"expected N or LO:HI, got {text!r}") from None


def cmd_synth(args) -> int:
    profile = load_camera(args.camera) if args.camera else PSYN
    config = SceneConfig(
        profile=profile,
        image_dims=(profile.native_width_px, profile.native_height_px),
        objects_per_image=_parse_range(args.objects),
        noise_sigma=args.noise,
        seed=args.seed,
    )
    manifest, _ = generate_corpus(config, AltitudeSampler.parse(args.alt), args.n, args.out, jobs=args.jobs)
    print(f"wrote {len(manifest)} images to {args.out}")
    return EXIT_OK


def cmd_detect(args) -> int:
    manifest = read_manifest(args.manifest)
    plans = read_plans(args.plans) if args.plans else None
    config = DetectorConfig(args.threshold, args.min, args.max, args.connectivity)
    dets = run_detection(manifest, file_source(_manifest_root(args)), plans, config, args.cls, jobs=args.jobs)
    _emit(args.output, dump_detections(dets))
    return EXIT_OK


def cmd_eval(args) -> int:
    manifest = read_manifest(args.manifest)
    dets = read_detections(args.dets)
    try:
        thresholds = [float(t) for t in args.iou.split(",")]
    except ValueError:
        raise ValidationError(f"bad --iou list {args.iou!r}") from None
    if not all(0 < t <= 1 for t in thresholds):
        raise ValidationError("IoU thresholds must lie in (0, 1]")
    report = evaluate(dets, manifest, thresholds)
    if args.output:
        _write_text(args.output, json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    sys.stdout.write(report.table())
    return EXIT_OK


def cmd_bench(args) -> int:
    plans = read_plans(args.plans)
    model = LatencyModel(args.overhead, args.spmp)
    report = speedup_report(plans, args.baseline, model)
    if args.corpus:
        report = with_measurements(report, bench_resize(args.corpus, plans, args.repeats, args.jobs))
    text = json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    _emit(args.output, text)
    if args.output not in (None, "-"):
        print(f"mean_estimated_speedup={report.mean_estimated_speedup:.4f}")
    return EXIT_OK


def _svg_bars(hist) -> str:
    w, h, pad = 640, 320, 40
    counts = [n for _, n in hist.bins] or [0]
    peak = max(counts) or 1
    bar = (w - 2 * pad) / max(len(counts), 1)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
             f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black"/>']
    for i, (lo, n) in enumerate(hist.bins):
        bh = (h - 2 * pad) * n / peak
        x = pad + i * bar
        parts.append(f'<rect x="{x:.2f}" y="{h - pad - bh:.2f}" width="{bar * 0.9:.2f}" height="{bh:.2f}" fill="steelblue">'
                     f'<title>{lo}-{lo + hist.bin_width_px} px: {n}</title></rect>')
        parts.append(f'<text x="{x:.2f}" y="{h - pad + 14}" font-size="9">{lo}</text>')
    parts.append(f'<text x="{w / 2}" y="{h - 6}" font-size="11" text-anchor="middle">longer edge after resizing (px)</text>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def cmd_stats(args) -> int:
    plans = read_plans(args.plans)
    hist = size_histogram(plans, args.bin_width)
    _emit(args.output, hist.to_csv())
    if args.svg:
        _write_text(args.svg, _svg_bars(hist))
    return EXIT_OK


# parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adares", description="Altitude-adaptive resizing toolkit for bird's-eye-view UAV imagery.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("plan", help="compute per-image resize plans from altitude metadata")
    _opt(p, "--manifest", required=True, help="input manifest (JSONL)")
    _opt(p, "--camera", required=True, help="camera profile JSON")
    _opt(p, "--ref-m", 4.5, float, help="metric long side of the reference class")
    _opt(p, "--ref-px", 32, int, help="target pixel long side of the reference class")
    _opt(p, "--anchor-class", 0, int, help="reference class id")
    _opt(p, "--stride", 1, int, help="round target dims to a multiple of this")
    _opt(p, "--max-upscale", 2.0, float, help="largest allowed scale factor")
    _opt(p, "--max-side", 4096, int, help="largest allowed target long side")
    _opt(p, "--min-side", 32, int, help="smallest allowed target long side")
    _opt(p, "--bin-width", DEFAULT_BIN_WIDTH_PX, int, help="histogram bin width")
    _opt(p, "--hist", help="also write the size histogram CSV here")
    _opt(p, "--jobs", 1, int, help="worker threads")
    _opt(p, "--output", "-", short="-o", help="output plans JSONL ('-' for stdout)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("resize", help="resample images and boxes according to plans")
    _opt(p, "--manifest", required=True, help="input manifest")
    _opt(p, "--plans", required=True, help="plans JSONL")
    _opt(p, "--root", help="directory image paths are relative to (default: the manifest's directory)")
    _opt(p, "--out", required=True, help="output directory")
    _opt(p, "--jobs", 1, int, help="worker threads")
    p.set_defaults(func=cmd_resize)

    p = sub.add_parser("annotate-altitude", help="estimate missing altitudes from boxes and class size priors")
    _opt(p, "--manifest", required=True, help="input manifest")
    _opt(p, "--camera", required=True, help="camera profile JSON")
    _opt(p, "--priors", required=True, help='priors JSON: [{"class": ..., "meters": ...}]')
    _flag(p, "--overwrite", "re-estimate records that already carry an altitude")
    _opt(p, "--jobs", 1, int, help="worker threads")
    _opt(p, "--output", required=True, short="-o", help="output manifest")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("split", help="altitude-ordered train/holdout split")
    _opt(p, "--manifest", required=True, help="input manifest")
    _opt(p, "--kind", required=True, help="below25, below50, above50 or above75")
    _opt(p, "--train-out", required=True, help="train manifest output")
    _opt(p, "--holdout-out", required=True, help="holdout manifest output")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("synth", help="generate a synthetic bird's-eye-view corpus")
    _opt(p, "--out", required=True, help="output directory")
    _opt(p, "--n", 200, int, help="number of images")
    _opt(p, "--alt", "uniform:10:110", help="altitude sampler: uniform:LO:HI or fixed:A,B,...")
    _opt(p, "--seed", 7, int, help="random seed")
    _opt(p, "--noise", 0.02, float, help="Gaussian noise sigma (intensity units)")
    _opt(p, "--objects", "1:4", help="objects per image, N or LO:HI")
    _opt(p, "--camera", help="camera profile JSON (default: built-in 1024x768 profile)")
    _opt(p, "--jobs", 1, int, help="worker threads")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect", help="resize, run the reference detector, map detections back")
    _opt(p, "--manifest", required=True, help="input manifest")
    _opt(p, "--plans", help="plans JSONL (omit to detect at native size)")
    _opt(p, "--root", help="directory image paths are relative to (default: the manifest's directory)")
    _opt(p, "--threshold", 0.5, float, help="intensity threshold in [0, 1]")
    _opt(p, "--min", 16, int, help="smallest accepted blob long side (px)")
    _opt(p, "--max", 64, int, help="largest accepted blob long side (px)")
    _opt(p, "--connectivity", 8, int, help="4 or 8")
    _opt(p, "--cls", 0, int, help="class id assigned to detections")
    _opt(p, "--jobs", 1, int, help="worker threads")
    _opt(p, "--output", "-", short="-o", help="detections JSONL ('-' for stdout)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="AP at one or more IoU thresholds")
    _opt(p, "--dets", required=True, help="detections JSONL")
    _opt(p, "--manifest", required=True, help="ground-truth manifest")
    _opt(p, "--iou", "0.5,0.7", help="comma-separated IoU thresholds")
    _opt(p, "--output", short="-o", help="report JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="estimated speedup report, optionally with measured resize timings")
    _opt(p, "--plans", required=True, help="plans JSONL")
    _opt(p, "--baseline", 2048, int, help="baseline longer edge (px)")
    _opt(p, "--spmp", 0.01, float, help="seconds per megapixel")
    _opt(p, "--overhead", 0.0, float, help="fixed per-image overhead (s)")
    _opt(p, "--corpus", help="corpus directory to time apply_resize on")
    _opt(p, "--repeats", 5, int, help="timed repetitions per image")
    _opt(p, "--jobs", 1, int, help="benchmark threads (per-thread stats reported separately)")
    _opt(p, "--output", "-", short="-o", help="report JSON ('-' for stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="histogram of target image sizes")
    _opt(p, "--plans", required=True, help="plans JSONL")
    _opt(p, "--bin-width", DEFAULT_BIN_WIDTH_PX, int, help="bin width (px)")
    _opt(p, "--svg", help="also write an SVG bar chart")
    _opt(p, "--output", "-", short="-o", help="histogram CSV ('-' for stdout)")
    p.set_defaults(func=cmd_stats)
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    first, _, rest = message.partition("\n")
    print(f"error[{code}]: {kind}: {first}", file=sys.stderr)
    if rest:
        print(rest, file=sys.stderr)
    return code


def run(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand\n\n" + parser.format_help())
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "UsageError", str(exc))
    except AdaresError as exc:
        return _fail(exc.exit_code, type(exc).__name__, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, "IoError", str(exc))
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
