"""Command-line entry point: ``synmix run|list-experiments|test-acceptance``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from synmix.experiments.config import ConfigError, ExperimentConfig
from synmix.experiments.runner import DESCRIPTIONS, OUTPUT_ENV, RUNNERS, run_experiment


def _cmd_run(args) -> int:
    try:
        config = ExperimentConfig.from_file(args.config)
        if args.seed is not None:
            config = ExperimentConfig.from_dict({**config.to_dict(), "seed": args.seed})
        bundle = run_experiment(config, outdir=args.output)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {bundle.summary['output_dir']} ({bundle.summary['runtime_seconds']:.1f}s)")
    scalars = {k: v for k, v in bundle.metrics.items() if isinstance(v, (int, float, str, dict))}
    print(json.dumps(scalars, indent=2, default=float))
    return 0


def _cmd_list(args) -> int:
    width = max(map(len, RUNNERS))
    for name in RUNNERS:
        print(f"{name:<{width}}  {DESCRIPTIONS.get(name, '')}")
    return 0


def _cmd_acceptance(args) -> int:
    import pytest

    target = Path(args.tests) if args.tests else _acceptance_path()
    if target is None or not target.exists():
        print("error: tests/test_acceptance.py not found; pass --tests", file=sys.stderr)
        return 2
    return int(pytest.main([str(target), "-v", "-s", *args.pytest_args]))


def _acceptance_path() -> Path | None:
    for base in (Path.cwd(), *Path(__file__).resolve().parents):
        candidate = base / "tests" / "test_acceptance.py"
        if candidate.exists():
            return candidate
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synmix", description="Posterior mixing experiments on synthetic data.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a config file")
    run.add_argument("config", help="key = value config file")
    run.add_argument("-o", "--output", help=f"output directory (default: ${OUTPUT_ENV}/<experiment> or results/<experiment>)")
    run.add_argument("--seed", type=int, help="override the seed in the config")
    run.set_defaults(func=_cmd_run)

    lst = sub.add_parser("list-experiments", help="list experiment names")
    lst.set_defaults(func=_cmd_list)

    acc = sub.add_parser("test-acceptance", help="run the acceptance suite with pytest")
    acc.add_argument("--tests", help="path to test_acceptance.py")
    acc.add_argument("pytest_args", nargs=argparse.REMAINDER, help="extra arguments passed to pytest")
    acc.set_defaults(func=_cmd_acceptance)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
