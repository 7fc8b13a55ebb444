from __future__ import annotations

import argparse

from adares.synthetic import SceneConfig, generate_corpus


def corpus_args(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--n", type=int, default=200, help="number of scenes")
    p.add_argument("--alt", default="uniform:10:110", help="altitude sampler")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--ref-px", type=int, default=32)
    return p


def make_corpus(args):
    return generate_corpus(SceneConfig(noise_sigma=args.noise, seed=args.seed), args.alt, args.n)
