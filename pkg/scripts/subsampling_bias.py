"""Bias diagnostic for sqrt(alpha)-weighted block subsampling.

Draws m blocks with p(k) proportional to sqrt(alpha_k), concatenates their
unweighted DQF vectors and compares the mean of z(x).z(x') over many draws
with the alpha-weighted kernel sum_k alpha_k Tr(rho_k rho_k'). The gap is
reported, not corrected.
"""

from __future__ import annotations

import argparse

import numpy as np

from qfeatures import features
from qfeatures.features import FeatureMapConfig
from qfeatures.sim import QubitSubset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--alphas", nargs="+", type=float, default=[1.0, 1.0, 1.0])
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--draws", type=int, default=20_000)
    ap.add_argument("--pairs", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    K = len(args.alphas)
    blocks = tuple((QubitSubset.of(k % args.n + 1), a) for k, a in enumerate(args.alphas))
    full = FeatureMapConfig(blocks)
    single = [FeatureMapConfig(((q, 1.0),)) for q, _ in blocks]
    print(f"K={K} alphas={args.alphas} m={args.m} draws={args.draws}")
    for _ in range(args.pairs):
        x, x2 = rng.uniform(0, np.pi, (2, args.n))
        target = features.dqf(x, full) @ features.dqf(x2, full)
        per_block = np.array([features.dqf(x, c) @ features.dqf(x2, c) for c in single])
        p = np.sqrt(args.alphas) / np.sqrt(args.alphas).sum()
        picks = rng.choice(K, size=(args.draws, args.m), p=p)
        est = per_block[picks].sum(axis=1)
        print(f"  weighted kernel {target:.4f}  subsampled mean {est.mean():.4f} "
              f"(se {est.std(ddof=1) / np.sqrt(args.draws):.4f})  ratio {est.mean() / target:.3f}")


if __name__ == "__main__":
    main()
