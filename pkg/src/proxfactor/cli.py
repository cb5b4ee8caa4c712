"""Command line entry point.

    proxfactor <stage> --config PATH [--out DIR]

Stages: ingest, efa, scales, correlate, regress, quadrants, run (all of them).
Exit status is 0 on success, 1 for invalid configuration or input, and 2 for
failures during computation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, default_config_text, load_config
from .dataset import DataError
from .pipeline import STAGE_FUNCS, STAGES, MissingArtifactError, run_pipeline
from .scales import ScaleError
from .synthetic import synthetic_table

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_COMPUTATION = 2

VALIDATION_ERRORS = (ConfigError, DataError, ScaleError, MissingArtifactError, KeyError)

log = logging.getLogger("proxfactor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxfactor",
        description="Factor analysis, scale construction and regression over occupation tables.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*STAGES, "run"):
        p = sub.add_parser(name, help=f"run the {name} stage" if name != "run" else "run every stage")
        p.add_argument("--config", required=True, type=Path, help="pipeline config (YAML)")
        p.add_argument("--out", type=Path, default=None, help="output directory override")
    p = sub.add_parser("init-config", help="write the default config")
    p.add_argument("path", type=Path)
    p = sub.add_parser("synth", help="write a synthetic score table")
    p.add_argument("path", type=Path)
    p.add_argument("--rows", type=int, default=400)
    p.add_argument("--seed", type=int, default=20200808)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    if args.command == "init-config":
        args.path.write_text(default_config_text(), encoding="utf-8")
        return EXIT_OK
    if args.command == "synth":
        args.path.write_text(synthetic_table(args.rows, args.seed), encoding="utf-8")
        return EXIT_OK

    try:
        config = load_config(args.config, args.out)
        if args.command == "run":
            run_pipeline(config)
        else:
            STAGE_FUNCS[args.command](config)
    except VALIDATION_ERRORS as exc:
        log.error("%s: %s", args.command, exc)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - any other failure is a computation error
        log.error("%s failed: %s: %s", args.command, type(exc).__name__, exc)
        return EXIT_COMPUTATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
