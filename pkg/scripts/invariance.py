"""Pixel long sides of ground-truth cars before and after adaptive resizing."""

from __future__ import annotations

import numpy as np

from _common import corpus_args, make_corpus
from adares.pipeline import adaptive_plans, resized_long_sides
from adares.planner import ReferenceSpec
from adares.synthetic import PSYN


def main():
    p = corpus_args(__doc__)
    p.add_argument("--lo", type=float, default=29)
    p.add_argument("--hi", type=float, default=35)
    args = p.parse_args()
    manifest, _ = make_corpus(args)
    plans = adaptive_plans(manifest, PSYN, ReferenceSpec(0, 4.5, args.ref_px))

    before = np.array([b.long_side for r in manifest.records for b in r.boxes])
    after = np.array(resized_long_sides(manifest, plans))
    inside = np.mean((after >= args.lo) & (after <= args.hi))
    print(f"boxes: {before.size}")
    print(f"native long side  : min {before.min():7.2f}  median {np.median(before):7.2f}  max {before.max():7.2f}")
    print(f"resized long side : min {after.min():7.2f}  median {np.median(after):7.2f}  max {after.max():7.2f}")
    print(f"fraction in [{args.lo:g}, {args.hi:g}] px: {inside:.4f}")


if __name__ == "__main__":
    main()
