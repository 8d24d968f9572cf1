"""Command line entry point: ``kportfolio {generate,run,evaluate,report,all}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import PAPER_SCALE, Config
from .errors import ConfigError, DataError, PortfolioError

log = logging.getLogger("kportfolio")


def _parse_dims(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}") from None


def _parse_seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--store", type=Path, default=Path("kportfolio-store"), help="store directory")
    common.add_argument("--seed", type=_parse_seed, help="master seed (overrides config)")
    common.add_argument("--dims", type=_parse_dims, help="comma-separated dimensions, e.g. 2,5")
    common.add_argument("--workers", type=int, help="worker processes for optimizer runs")
    common.add_argument("--paper-scale", action="store_true",
                        help="1000 functions per dimension, d in {2,5,10}, T = 2000*d")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kportfolio", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="generate benchmark suites")
    sub.add_parser("run", parents=[common], help="optimizer runs, EAF matrices, features")
    sub.add_parser("evaluate", parents=[common], help="baselines, kNN portfolios, result tables")
    sub.add_parser("report", parents=[common], help="print the result tables")
    sub.add_parser("all", parents=[common], help="generate, run, evaluate and report")
    return parser


def load_config(args) -> Config:
    config = Config.load(args.config) if args.config else Config()
    if args.paper_scale:
        config = config.replace(**PAPER_SCALE)
    if args.seed is not None:
        config = config.replace(master_seed=args.seed)
    if args.dims is not None:
        config = config.replace(dims=args.dims)
    if args.workers is not None:
        config = config.replace(workers=args.workers)
    return config.validate()


def render_table(path: Path) -> str:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return f"{path.name}: (empty)\n"
    widths = [max(len(r[i]) for r in rows if i < len(r)) for i in range(len(rows[0]))]
    lines = [path.name, "  ".join(h.ljust(w) for h, w in zip(rows[0], widths)),
             "  ".join("-" * w for w in widths)]
    for r in rows[1:]:
        lines.append("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))))
    return "\n".join(lines) + "\n"


def report(root: Path, out=None) -> None:
    out = out or sys.stdout
    reports = Path(root) / "reports"
    missing = [name for name in pipeline.REPORT_FILES if not (reports / name).exists()]
    if missing:
        raise DataError(f"result bundle in {reports} is incomplete (missing {', '.join(missing)}); "
                        "run the 'evaluate' stage first")
    for name in ("table_improvement.csv", "table_features.csv", "weights_table.csv", "alignment.csv"):
        out.write(render_table(reports / name) + "\n")
    out.write(f"Further tables: {', '.join(n for n in pipeline.REPORT_FILES)} in {reports}\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args)
        if args.command in ("generate", "all"):
            pipeline.generate(config, args.store)
        if args.command in ("run", "all"):
            pipeline.run(config, args.store)
        if args.command in ("evaluate", "all"):
            pipeline.evaluate(config, args.store)
        if args.command in ("report", "all"):
            report(args.store)
    except PortfolioError as exc:
        print(f"kportfolio: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
