"""Command-line pipeline: synthesize data, train, recommend, evaluate.

Exit codes: 0 success, 1 internal error, 2 validation/parse failure,
3 no candidate found, 4 empty evaluation. Flags always win over the optional
JSON config file (``--config``), whose keys must match flag names with
dashes replaced by underscores; unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .encoder import ClusterModel, load_checkpoint, save_checkpoint
from .errors import ParseError, ValidationError
from .evaluate import (
    EvalCaps,
    TestSplit,
    feature_subsample,
    normalize_methods,
    run_comparison,
)
from .graph import (
    Team,
    generate_synthetic,
    load_network,
    load_teams,
    save_network,
    save_teams,
)
from .kernels import KernelConfig
from .objectives import LossWeights
from .recommender import recommend
from .trainer import TrainConfig, read_total_wall_ms, split_teams, train, write_train_log

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_NO_CANDIDATE = 3
EXIT_EMPTY_EVAL = 4

DATA_FILES = {"edges": "edges.tsv", "features": "features.tsv", "teams": "teams.txt"}


def _data_paths(data_dir: str) -> dict[str, Path]:
    base = Path(data_dir)
    return {key: base / name for key, name in DATA_FILES.items()}


def _load_data(data_dir: str):
    paths = _data_paths(data_dir)
    for path in paths.values():
        if not path.exists():
            raise ValidationError(f"missing data file: {path}")
    net = load_network(paths["edges"], paths["features"])
    teams = load_teams(paths["teams"], net)
    return net, teams


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    net, teams = generate_synthetic(
        n=args.n,
        d=args.d,
        k_planted=args.clusters,
        p_in=args.p_in,
        p_out=args.p_out,
        teams=args.teams,
        seed=args.seed,
    )
    paths = _data_paths(args.out)
    save_network(net, paths["edges"], paths["features"])
    save_teams(teams, paths["teams"])
    manifest = {
        "n": args.n,
        "d": args.d,
        "clusters": args.clusters,
        "p_in": args.p_in,
        "p_out": args.p_out,
        "teams": args.teams,
        "seed": args.seed,
        "files": {key: path.name for key, path in paths.items()},
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {net.n} nodes, {net.adjacency.nnz // 2} edges, {len(teams)} teams to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        weights=LossWeights(skill=args.b1, structural=args.b2, clustering=args.b3),
        subteam_fraction_range=(args.subteam_low, args.subteam_high),
        seed=args.seed,
        split=tuple(args.split),
        hidden=tuple(args.hidden),
        clusters=args.clusters,
    )
    net, teams = _load_data(args.data)
    params, log = train(net, teams, cfg)
    checkpoint = Path(args.checkpoint) if args.checkpoint else Path(args.data) / "checkpoint.json"
    log_path = Path(args.log) if args.log else Path(args.data) / "train.log"
    save_checkpoint(params, checkpoint)
    write_train_log(log, log_path)
    print(f"trained {cfg.epochs} epochs; checkpoint {checkpoint}, log {log_path}")
    print(f"final loss {log[-1].total!r} (initial {log[0].total!r})")
    return EXIT_OK


def cmd_recommend(args) -> int:
    net, _ = _load_data(args.data)
    params = load_checkpoint(args.checkpoint)
    model = ClusterModel.build(net, params)
    team = Team(tuple(args.team))
    team.validate_for(net)
    departing = Team(tuple(args.departing))
    result = recommend(team, departing, model, net)
    if not result.found:
        print("no candidate: every tuple dissolved into the original team", file=sys.stderr)
        return EXIT_NO_CANDIDATE
    if args.json:
        doc = {
            "members": list(result.subteam),
            "names": [net.name_of(v) for v in result.subteam],
            "similarity": result.similarity,
            "candidates_examined": result.candidates_examined,
            "elapsed_ms": result.elapsed_ms,
        }
        print(json.dumps(doc, indent=2))
    else:
        shown = ", ".join(f"{v} ({net.name_of(v)})" for v in result.subteam)
        print(f"members: {shown}")
        print(f"similarity: {result.similarity:.6f}")
        print(f"candidates examined: {result.candidates_examined}")
        print(f"elapsed: {result.elapsed_ms:.3f} ms")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    net, teams = _load_data(args.data)
    if args.features is not None:
        net = feature_subsample(net, args.features, args.seed)
    methods = normalize_methods(args.methods.split(","))
    _, _, test_teams = split_teams(teams, tuple(args.split), args.seed)
    if not test_teams:
        print("empty test split", file=sys.stderr)
        return EXIT_EMPTY_EVAL
    split = TestSplit(teams=tuple(test_teams), seed=args.seed)
    model = None
    if "genius" in methods:
        params = load_checkpoint(args.checkpoint)
        model = ClusterModel.build(net, params)
    training_time_ms = read_total_wall_ms(args.train_log) if args.train_log else 0.0
    report = run_comparison(
        net,
        split,
        methods,
        args.percent,
        args.seed,
        EvalCaps(ged_max_nodes=args.ged_cap, baseline_budget=args.budget),
        model=model,
        kernel_cfg=KernelConfig(decay=args.decay, termination=args.termination),
        training_time_ms=training_time_ms,
        workers=args.workers,
        config_echo={"feature_subset": args.features},
    )
    completed = sum(agg.cases for agg in report.methods.values())
    text = report.to_json() if args.format == "json" else report.to_table()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote report to {args.out}")
    else:
        print(text, end="")
    if completed == 0:
        print("no case completed across all methods", file=sys.stderr)
        return EXIT_EMPTY_EVAL
    return EXIT_OK


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="subteam",
        description="Clustering-based subteam replacement in attributed social networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands: dict[str, argparse.ArgumentParser] = {}

    p = sub.add_parser("synth", help="generate a synthetic planted-partition dataset")
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--clusters", type=int, default=4, help="planted block count")
    p.add_argument("--teams", type=int, default=30)
    p.add_argument("--p-in", type=float, default=0.8)
    p.add_argument("--p-out", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", default=None, help="JSON file with defaults; flags win")
    p.set_defaults(func=cmd_synth)
    commands["synth"] = p

    p = sub.add_parser("train", help="train the encoder on a dataset directory")
    p.add_argument("--data", required=True, help="directory with edges.tsv/features.tsv/teams.txt")
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--b1", type=float, default=1.0, help="skill loss weight")
    p.add_argument("--b2", type=float, default=100.0, help="structural loss weight")
    p.add_argument("--b3", type=float, default=1.0, help="clustering loss weight")
    p.add_argument("--subteam-low", type=float, default=0.25)
    p.add_argument("--subteam-high", type=float, default=0.75)
    p.add_argument("--split", type=float, nargs=3, default=[0.6, 0.2, 0.2])
    p.add_argument("--hidden", type=int, nargs="+", default=[64, 64])
    p.add_argument("--clusters", type=int, default=None, help="cluster count (default sqrt(n))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", default=None, help="output path (default <data>/checkpoint.json)")
    p.add_argument("--log", default=None, help="training log path (default <data>/train.log)")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_train)
    commands["train"] = p

    p = sub.add_parser("recommend", help="recommend a replacement for departing members")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--team", type=int, nargs="+", required=True, help="team member ids")
    p.add_argument("--departing", type=int, nargs="+", required=True)
    p.add_argument("--json", action="store_true", help="emit structured output")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_recommend)
    commands["recommend"] = p

    p = sub.add_parser("evaluate", help="compare methods on the held-out split")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--methods", default="genius,kernel")
    p.add_argument("--percent", type=float, nargs="+", default=[1.0, 10.0, 25.0, 50.0])
    p.add_argument("--features", type=int, default=None, help="random feature-subset size")
    p.add_argument("--split", type=float, nargs=3, default=[0.6, 0.2, 0.2])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decay", type=float, default=0.1)
    p.add_argument("--termination", type=float, default=0.1)
    p.add_argument("--ged-cap", type=int, default=12)
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--train-log", default=None, help="training log for amortized total time")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="report output path (default stdout)")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_evaluate)
    commands["evaluate"] = p
    return parser, commands


def _apply_config(argv, parser, commands) -> None:
    """Install config-file values as subparser defaults so explicit flags win."""
    if not argv or argv[0] not in commands:
        return
    command = argv[0]
    ns, _ = parser.parse_known_args(argv)
    config_path = getattr(ns, "config", None)
    if not config_path:
        return
    with open(config_path, encoding="utf-8") as fh:
        values = json.load(fh)
    if not isinstance(values, dict):
        raise ValidationError(f"config {config_path} must hold a JSON object")
    subparser = commands[command]
    known = {action.dest for action in subparser._actions}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValidationError(f"unknown config keys for {command}: {', '.join(unknown)}")
    subparser.set_defaults(**values)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, commands = build_parser()
    try:
        _apply_config(argv, parser, commands)
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValidationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
