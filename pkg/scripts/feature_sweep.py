#!/usr/bin/env python3
"""Inference-time scaling of both methods as the feature-subset size grows.

The kernel baseline recomputes label products per candidate, so its time
grows with the feature count; the embedding search scores fixed-width vectors
and should stay flat. Prints one row per subset size.
"""

import argparse

import numpy as np

from subteam.encoder import ClusterModel, build_containers, encode, init_params
from subteam.evaluate import feature_subsample
from subteam.graph import Team, generate_synthetic, planted_blocks
from subteam.kernels import KernelConfig, kernel_baseline_replace
from subteam.recommender import recommend


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=60)
    parser.add_argument("--d", type=int, default=128)
    parser.add_argument("--blocks", type=int, default=6)
    parser.add_argument("--sizes", type=int, nargs="+", default=[8, 32, 128])
    parser.add_argument("--cases", type=int, default=30)
    parser.add_argument("--seed", type=int, default=5)
    args = parser.parse_args()

    net, _ = generate_synthetic(
        n=args.n, d=args.d, k_planted=args.blocks, p_in=0.8, p_out=0.05, teams=0, seed=args.seed
    )
    blocks = planted_blocks(args.n, args.blocks)
    rng = np.random.default_rng(0)
    teams = []
    for rep in range(args.cases):
        b = rep % args.blocks
        own = np.flatnonzero(blocks == b)
        other = np.flatnonzero(blocks != b)
        size_in = min(10, own.size)
        size_out = min(16, other.size)
        teams.append(
            Team(
                tuple(rng.choice(own, size=size_in, replace=False))
                + tuple(rng.choice(other, size=size_out, replace=False))
            )
        )
    cfg = KernelConfig(decay=1e-4, termination=0.95)

    print(f"{'d_sub':>6} {'kernel mean (ms)':>18} {'embedding mean (ms)':>20}")
    for d_sub in args.sizes:
        sub = feature_subsample(net, d_sub, seed=1)
        z = encode(sub, init_params(d_sub, (8, 8), args.blocks, np.random.default_rng(2)))
        hard = blocks + 1
        soft = np.zeros((args.n, args.blocks))
        soft[np.arange(args.n), blocks] = 1.0
        model = ClusterModel(
            embeddings=z, soft=soft, hard=hard, containers=build_containers(hard, args.blocks)
        )
        kernel_ms = genius_ms = 0.0
        for team in teams:
            own_block = blocks[team.members[0]]
            cross = next(m for m in team.members if blocks[m] != own_block)
            departing = Team((team.members[0], cross))
            kernel_ms += kernel_baseline_replace(team, departing, sub, cfg, 100_000).elapsed_ms
            genius_ms += recommend(team, departing, model, sub).elapsed_ms
        print(f"{d_sub:>6} {kernel_ms / len(teams):>18.2f} {genius_ms / len(teams):>20.3f}")


if __name__ == "__main__":
    main()
