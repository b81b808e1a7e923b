"""Command-line entry point: ``fanout-dqst <subcommand> [--config FILE] [--seed N] [--out DIR] [--threads N]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..dqst import EstimationError
from ..formats import FormatError
from ..mitigation import MitigationError
from ..qcore import DimensionError, StateError
from .config import ConfigError, default_config, load_config
from .experiments import run_experiment, twirl_table_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SUBCOMMANDS = {
    "tomography": "full_tomography",
    "ghz": "ghz_fidelity",
    "compare": "qst_compare",
    "qrem": "qrem_check",
    "zne": "zne_demo",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML experiment config (defaults used when omitted)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", type=Path, help="output directory (overrides output_path)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")

    parser = _Parser(prog="fanout-dqst", description="Direct state tomography with fan-out couplings.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "tomography": "full DQST reconstruction with physical projection",
        "ghz": "GHZ fidelity versus qubit number with QREM and ZNE",
        "compare": "DQST against standard Pauli tomography",
        "qrem": "full-register versus tensored readout calibration",
        "zne": "zero-noise extrapolation fold series",
        "twirl-table": "list the CZ twirl sets",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "twirl-table":
        text = twirl_table_csv()
        sys.stdout.write(text)
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "twirl_table.csv").write_text(text, encoding="utf-8", newline="\n")
        return EXIT_OK

    experiment = SUBCOMMANDS[args.command]
    try:
        cfg = load_config(args.config) if args.config is not None else default_config(experiment)
        if cfg.experiment != experiment:
            raise ConfigError(f"config describes {cfg.experiment!r}, but subcommand {args.command!r} runs {experiment!r}")
        cfg = cfg.with_overrides(seed=args.seed, output_path=None if args.out is None else str(args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        bundle = run_experiment(cfg, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MitigationError, EstimationError, StateError, DimensionError, FormatError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    out = bundle.write()
    for row in bundle.metrics:
        print(", ".join(f"{k}={_short(v)}" for k, v in row.items()))
    print(f"wrote {len(bundle.files)} files to {out}")
    return EXIT_OK


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


if __name__ == "__main__":
    sys.exit(main())
