"""Command line entry point: ``tourmob <stage> --config pipeline.yaml``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import yaml

from . import __version__
from .exceptions import ConfigError, TourmobError
from .pipeline import STAGES, PipelineConfig, run_pipeline
from .synth import ScenarioConfig, default_scenario, generate, write_scenario

logger = logging.getLogger("tourmob")

LOG_ENV = "TOURMOB_LOG_LEVEL"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; usage problems map to 1 here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", type=Path, help="pipeline YAML file")
    p.add_argument("--checkins", type=Path, help="check-in file (overrides the config)")
    p.add_argument("--venues", type=Path, help="venue file (overrides the config)")
    p.add_argument("--ground-truth", type=Path, help="synthetic ground truth for the accuracy entry in the manifest")
    p.add_argument("-o", "--output-dir", type=Path, help="output directory (overrides the config)")
    p.add_argument("--threshold-days", type=int, help="home-city stay threshold in days")
    p.add_argument("--seed", type=int, help="LDA sampler seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tourmob", description="Tourist/resident check-in analytics pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    helps = {
        "ingest-check": "validate inputs, remap categories, write clean tables and rejects",
        "classify": "infer home cities and label every check-in",
        "behavior": "interval, ranking, routine and category tables",
        "mobility": "mean displacement and radius of gyration per user",
        "graph": "venue x hour graphs and centrality rankings",
        "profiles": "LDA mobility profiles per city and class",
        "all": "run every stage in order",
    }
    for name in (*STAGES, "all"):
        _add_pipeline_args(sub.add_parser(name, help=helps[name], description=helps[name]))
    syn = sub.add_parser("synth", help="generate a synthetic scenario", description="generate a synthetic scenario")
    syn.add_argument("-s", "--scenario", type=Path, help="scenario YAML file (default: built-in three-city scenario)")
    syn.add_argument("-o", "--output-dir", type=Path, required=True)
    syn.add_argument("--seed", type=int, help="generator seed (overrides the scenario)")
    syn.add_argument("--residents", type=int, help="residents per city for the built-in scenario")
    syn.add_argument("--tourists", type=int, help="tourists per city for the built-in scenario")
    return parser


def _pipeline_config(args) -> PipelineConfig:
    if args.config is not None:
        config = PipelineConfig.load(args.config)
    else:
        config = PipelineConfig()
    for key in ("checkins", "venues", "ground_truth", "output_dir"):
        value = getattr(args, key)
        if value is not None:
            setattr(config, key, value)
    if args.threshold_days is not None:
        config.threshold_days = args.threshold_days
    if args.seed is not None:
        config.lda_seed = args.seed
    config.validate()
    return config


def _synth(args) -> None:
    if args.scenario is not None:
        if args.residents is not None or args.tourists is not None:
            raise ConfigError("--residents/--tourists only apply to the built-in scenario")
        config = ScenarioConfig.load(args.scenario)
    else:
        kwargs = {k: getattr(args, k) for k in ("residents", "tourists") if getattr(args, k) is not None}
        config = default_scenario(**kwargs)
    if args.seed is not None:
        config.seed = args.seed
    config.validate()
    paths = write_scenario(generate(config), args.output_dir)
    # a ready-to-run pipeline config next to the data
    pipeline_cfg = {
        "checkins": paths["checkins"].name,
        "venues": paths["venues"].name,
        "ground_truth": paths["ground_truth"].name,
        "output_dir": "report",
        "threshold_days": config.home_threshold_days,
    }
    (Path(args.output_dir) / "pipeline.yaml").write_text(yaml.safe_dump(pipeline_cfg, sort_keys=False))
    for name, path in paths.items():
        logger.info("wrote %s: %s", name, path)


def main(argv=None) -> int:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            _synth(args)
        else:
            config = _pipeline_config(args)
            stages = STAGES if args.command == "all" else (args.command,)
            run_pipeline(config, stages)
    except TourmobError as exc:
        print(f"tourmob {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        logger.debug("internal error", exc_info=True)
        print(f"tourmob {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
