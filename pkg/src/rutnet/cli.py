"""Command-line entry point: ``rutnet <command> [--config FILE] [--set key=value ...]``."""

import argparse
import json
import logging
import sys

from . import pipeline
from .exceptions import ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON run configuration")
    common.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a config field, e.g. --set swarm.iterations=50 (repeatable)",
    )
    common.add_argument("-q", "--quiet", action="store_true", help="only log warnings")

    ap = argparse.ArgumentParser(prog="rutnet", description="Rutting-depth prediction pipeline.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    sub.add_parser("cluster", parents=[common], help="grey similarity network and Louvain communities")
    p = sub.add_parser("train", parents=[common], help="train and score models for one training mode")
    p.add_argument("--mode", choices=pipeline.MODES, help="defaults to train_mode in the config")
    sub.add_parser("benchmark-pso", parents=[common], help="compare swarm variants")
    p = sub.add_parser("uncertainty", parents=[common], help="prediction variance over repeated trainings")
    p.add_argument("--trials", type=int, help="defaults to trials in the config")
    sub.add_parser("show-config", parents=[common], help="print the resolved configuration as YAML")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = pipeline.RunConfig.load(args.config) if args.config else pipeline.RunConfig()
        cfg = cfg.with_overrides(args.overrides)
        if args.command == "show-config":
            sys.stdout.write(cfg.to_yaml())
        elif args.command == "synth":
            ds = pipeline.cmd_synth(cfg)
            print(f"wrote {len(ds.records)} series to {cfg.data_path}")
        elif args.command == "cluster":
            res = pipeline.cmd_cluster(cfg)
            summary = {"communities": res.partition.communities(), "modularity": res.partition.modularity}
            if res.ari is not None:
                summary["ari_vs_planted"] = res.ari
            print(json.dumps(summary, indent=2))
        elif args.command == "train":
            report = pipeline.cmd_train(cfg, args.mode)
            sys.stdout.write(report.to_table(f"Test-set accuracy, mode={args.mode or cfg.train_mode}"))
        elif args.command == "benchmark-pso":
            table = pipeline.cmd_benchmark_pso(cfg)
            sys.stdout.write(pipeline._benchmark_table(table, cfg.benchmark.variants))
        elif args.command == "uncertainty":
            res = pipeline.cmd_uncertainty(cfg, args.trials)
            print(json.dumps(res, indent=2))
    except (ValidationError, ValueError, FileNotFoundError, KeyError) as exc:
        logging.getLogger("rutnet").error("%s", exc)
        return EXIT_VALIDATION
    except (RuntimeError, OSError, ArithmeticError) as exc:
        logging.getLogger("rutnet").error("%s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
