"""Calibrate on one altitude band, evaluate on the unseen complement."""

from __future__ import annotations

from _common import corpus_args, make_corpus
from adares.pipeline import adaptive_plans, fixed_plans, list_source, train_and_evaluate
from adares.planner import ReferenceSpec
from adares.splits import SplitKind, build_split
from adares.synthetic import PSYN


def main():
    p = corpus_args(__doc__)
    p.add_argument("--fixed", type=int, default=1024)
    p.add_argument("--margin", type=float, default=1.25, help="size-window widening during calibration")
    args = p.parse_args()
    manifest, rasters = make_corpus(args)
    source = list_source(manifest, rasters)
    runs = {
        "adaptive": adaptive_plans(manifest, PSYN, ReferenceSpec(0, 4.5, args.ref_px)),
        f"fixed@{args.fixed}": fixed_plans(manifest, args.fixed),
    }

    print(f"{'pipeline':12s} {'train':8s} {'thr (m)':>8s} {'window':>10s} {'full':>7s} {'holdout':>8s}")
    for name, plans in runs.items():
        _, full = train_and_evaluate(manifest, manifest, plans, source, margin=args.margin)
        for kind in SplitKind:
            split = build_split(manifest, kind)
            cfg, held = train_and_evaluate(split.train, split.holdout, plans, source, margin=args.margin)
            window = f"{cfg.min_long_side_px}-{cfg.max_long_side_px}"
            print(f"{name:12s} {kind.name:8s} {split.threshold_altitude_m:8.2f} {window:>10s} "
                  f"{full.ap(0.5):7.4f} {held.ap(0.5):8.4f}")


if __name__ == "__main__":
    main()
