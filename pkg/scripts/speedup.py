"""Target-size histogram and modelled speedup for a corpus, with optional resize timings."""

from __future__ import annotations

import tempfile

from _common import corpus_args
from adares.perf import LatencyModel, bench_resize, fpn_elimination_factor, speedup_report
from adares.pipeline import adaptive_plans
from adares.planner import ReferenceSpec, size_histogram
from adares.synthetic import PSYN, SceneConfig, generate_corpus


def main():
    p = corpus_args(__doc__)
    p.add_argument("--baseline", type=int, nargs="+", default=[1024, 2048])
    p.add_argument("--overhead", type=float, default=0.0, help="fixed per-image seconds")
    p.add_argument("--bench", action="store_true", help="also time apply_resize on the written corpus")
    args = p.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        cfg = SceneConfig(noise_sigma=args.noise, seed=args.seed)
        manifest, _ = generate_corpus(cfg, args.alt, args.n, tmp if args.bench else None)
        plans = adaptive_plans(manifest, PSYN, ReferenceSpec(0, 4.5, args.ref_px))
        bench = bench_resize(tmp, plans) if args.bench else None

    print(f"FPN elimination saves {fpn_elimination_factor():.6f} of the forward pass")
    print(size_histogram(plans).to_csv(), end="")
    model = LatencyModel(fixed_overhead_s=args.overhead)
    for L in args.baseline:
        r = speedup_report(plans, L, model)
        print(f"baseline {L:5d}: mean px {r.mean_adaptive_pixels:10.0f}  mean speedup {r.mean_estimated_speedup:8.3f}")
    if bench is not None:
        s = bench.overall
        print(f"apply_resize: min {s.min_s * 1e3:.2f} ms  median {s.median_s * 1e3:.2f} ms  mean {s.mean_s * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
