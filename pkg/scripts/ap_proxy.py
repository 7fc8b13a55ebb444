"""AP of the size-window detector with adaptive resizing versus fixed longer-edge resizing."""

from __future__ import annotations

from _common import corpus_args, make_corpus
from adares.evaluation import evaluate
from adares.pipeline import adaptive_plans, fixed_plans, list_source, run_detection
from adares.planner import ReferenceSpec
from adares.synthetic import PSYN, DetectorConfig


def main():
    p = corpus_args(__doc__)
    p.add_argument("--fixed", type=int, nargs="+", default=[512, 1024, 2048], help="baseline longer edges")
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()
    manifest, rasters = make_corpus(args)
    source = list_source(manifest, rasters)
    detector = DetectorConfig(0.5, args.ref_px // 2, args.ref_px * 2)

    runs = {"adaptive": adaptive_plans(manifest, PSYN, ReferenceSpec(0, 4.5, args.ref_px))}
    runs.update({f"fixed@{L}": fixed_plans(manifest, L) for L in args.fixed})
    print(f"{'pipeline':12s} {'AP50':>7s} {'AP70':>7s}")
    for name, plans in runs.items():
        report = evaluate(run_detection(manifest, source, plans, detector, jobs=args.jobs), manifest)
        print(f"{name:12s} {report.ap(0.5):7.4f} {report.ap(0.7):7.4f}")


if __name__ == "__main__":
    main()
