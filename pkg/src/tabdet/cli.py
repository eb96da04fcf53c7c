"""Command-line entry point.

Subcommands: generate-toy, ingest, split, train, evaluate, report.
All commands exit 0 on success and are idempotent given identical inputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config
from .errors import TabdetError
from .experiment import run_evaluate, run_ingest, run_report, run_split, run_train
from .ingestion import TOY_MODES
from .toy import write_toy_corpus


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config YAML")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabdet",
        description="Train and evaluate synthetic tabular data detectors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-toy", help="write the toy corpus and its manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--rows", type=int, default=500, help="rows per real table")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--modes",
        default=",".join(TOY_MODES),
        help="comma-separated corruption modes (default: all)",
    )

    p = sub.add_parser("ingest", help="pool manifest tables into pooled.jsonl")
    _add_config_arg(p)

    p = sub.add_parser("split", help="compute and validate split plans")
    _add_config_arg(p)
    p.add_argument("--setup", default=None, help="restrict to one setup name")

    p = sub.add_parser("train", help="train every (setup, model) pair")
    _add_config_arg(p)

    p = sub.add_parser("evaluate", help="score test splits from checkpoints")
    _add_config_arg(p)

    p = sub.add_parser("report", help="aggregate eval results into report.csv/.txt")
    p.add_argument("--dir", required=True, help="output directory of a train/evaluate run")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate-toy":
            modes = tuple(m for m in args.modes.split(",") if m)
            for mode in modes:
                if mode not in TOY_MODES:
                    raise TabdetError(f"unknown toy mode {mode!r}; choose from {TOY_MODES}")
            manifest = write_toy_corpus(args.out, n_rows=args.rows, seed=args.seed, modes=modes)
            print(f"wrote toy corpus manifest: {manifest}")
        elif args.command == "ingest":
            cfg = load_config(args.config)
            pooled = run_ingest(cfg)
            print(f"wrote {pooled}")
        elif args.command == "split":
            cfg = load_config(args.config)
            for path in run_split(cfg, args.setup):
                print(f"wrote {path}")
        elif args.command == "train":
            cfg = load_config(args.config)
            for run_dir in run_train(cfg):
                print(f"trained {run_dir}")
        elif args.command == "evaluate":
            cfg = load_config(args.config)
            for path in run_evaluate(cfg):
                print(f"wrote {path}")
        elif args.command == "report":
            csv_path, txt_path = run_report(Path(args.dir))
            print(f"wrote {csv_path}")
            print(txt_path.read_text(encoding="utf-8"), end="")
    except TabdetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
