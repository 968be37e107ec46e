#!/usr/bin/env python3
"""End-to-end demo on synthetic data: generate, train, recommend, evaluate.

Writes everything into a workspace directory and prints a short summary of
each stage. Equivalent to chaining the CLI subcommands with shared defaults.
"""

import argparse
import json
from pathlib import Path

from subteam.cli import main as cli


def run(argv) -> int:
    code = cli(argv)
    if code != 0:
        raise SystemExit(f"step {' '.join(argv[:1])} failed with exit code {code}")
    return code


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workspace", default="workspace", help="output directory")
    parser.add_argument("--n", type=int, default=48)
    parser.add_argument("--blocks", type=int, default=4)
    parser.add_argument("--teams", type=int, default=40)
    parser.add_argument("--epochs", type=int, default=200)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    ws = Path(args.workspace)
    run(
        [
            "synth",
            "--n", str(args.n),
            "--d", "16",
            "--clusters", str(args.blocks),
            "--teams", str(args.teams),
            "--seed", str(args.seed),
            "--out", str(ws),
        ]
    )
    run(
        [
            "train",
            "--data", str(ws),
            "--epochs", str(args.epochs),
            "--hidden", "16", "16",
            "--seed", str(args.seed),
        ]
    )
    team = (ws / "teams.txt").read_text().splitlines()[0].split()
    run(
        [
            "recommend",
            "--data", str(ws),
            "--checkpoint", str(ws / "checkpoint.json"),
            "--team", *team,
            "--departing", team[0],
        ]
    )
    run(
        [
            "evaluate",
            "--data", str(ws),
            "--checkpoint", str(ws / "checkpoint.json"),
            "--train-log", str(ws / "train.log"),
            "--methods", "genius,kernel",
            "--percent", "25", "50",
            "--seed", str(args.seed),
            "--decay", "0.005",
            "--termination", "0.95",
            "--out", str(ws / "report.json"),
        ]
    )
    report = json.loads((ws / "report.json").read_text())
    print("\nmethod summary:")
    for name, stats in report["methods"].items():
        print(
            f"  {name:8s} cases={stats['cases']:3d} mean_ged={stats['mean_ged']} "
            f"mean_d1={stats['mean_d1']:.4f} mean_d2={stats['mean_d2']:.4f} "
            f"inference={stats['mean_inference_ms']:.2f}ms total={stats['mean_total_ms']:.2f}ms"
        )


if __name__ == "__main__":
    main()
