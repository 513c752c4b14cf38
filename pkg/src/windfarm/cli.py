"""Command line entry points.

    windfarm gnn-train --config cfg.yaml --out runs/demo
    windfarm train     --config cfg.yaml --out runs/demo [--setup ma_by_choice]
    windfarm infer     --config cfg.yaml --out runs/demo
    windfarm scale     --config cfg.yaml --out runs/demo
    windfarm sweep     --config cfg.yaml --out runs/demo
    windfarm report    --config cfg.yaml --out runs/demo
    windfarm serve     --config cfg.yaml --out runs/demo [--port 8734]

Exit codes: 0 on success, 2 for configuration problems, 1 for runtime
failures.  Set WINDFARM_LOG=debug|info|warning to control verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .configio import ConfigError, apply_override, load_yaml, parse_override
from .experiments import (
    PROFILES,
    ExperimentConfig,
    experiment_from_dict,
    refresh_derived,
    run_inference,
    run_neighbor_sweep,
    run_predictor_job,
    run_scaling,
    run_training,
    train_parallel,
    write_report,
)
from .setups import SetupKind

log = logging.getLogger("windfarm")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="windfarm", description="wind farm multi-agent RL harness")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_out: bool = True) -> None:
        p.add_argument("--config", type=Path, default=None, help="yaml config file")
        p.add_argument("--profile", choices=sorted(PROFILES), default=None, help="preset step/seed budget")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="dotted config override, repeatable")
        p.add_argument("--seed", type=int, default=None, help="run a single seed instead of the configured list")
        if needs_out:
            p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("gnn-train", help="train the frozen wind predictor")
    common(p)

    p = sub.add_parser("train", help="train one setup")
    common(p)
    p.add_argument("--setup", type=SetupKind, choices=list(SetupKind), default=None, help="override the configured setup")
    p.add_argument("--jobs", type=int, default=1, help="seed-parallel worker processes")

    p = sub.add_parser("infer", help="evaluate trained checkpoints greedily")
    common(p)
    p.add_argument("--setup", type=SetupKind, choices=list(SetupKind), default=None, help="evaluate only this setup")

    p = sub.add_parser("scale", help="evaluate across farm sizes on random layouts")
    common(p)
    p.add_argument("--setup", type=SetupKind, choices=list(SetupKind), default=None, help="evaluate only this setup")

    p = sub.add_parser("sweep", help="train/evaluate across neighbour counts")
    common(p)

    p = sub.add_parser("report", help="rebuild aggregates and write report.md")
    common(p)

    p = sub.add_parser("serve", help="stream live episodes over a websocket")
    common(p)
    p.add_argument("--setup", type=SetupKind, choices=list(SetupKind), default=None, help="setup to run (default: configured setup)")
    p.add_argument("--checkpoint", type=Path, default=None, help="policy checkpoint (default: <out>/<setup>/seed_<first>/checkpoints/final.nn)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8734)

    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    data = load_yaml(args.config) if args.config else {}
    for expr in args.overrides:
        keys, value = parse_override(expr)
        apply_override(data, keys, value)
    config = experiment_from_dict(data, args.profile)
    if args.seed is not None:
        config.seeds = [args.seed]
    return config


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("WINDFARM_LOG", "info").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        return _dispatch(args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # runtime failure
        log.debug("traceback", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace, config: ExperimentConfig) -> int:
    if args.command == "gnn-train":
        path = run_predictor_job(config, args.out)
        from .nn import load_sidecar

        meta = load_sidecar(path)
        log.info(
            "predictor saved to %s (model %.2f deg vs persistence %.2f deg)",
            path,
            meta["model_error_deg"],
            meta["persistence_error_deg"],
        )
        return 0
    if args.command == "train":
        setup = args.setup or config.setup
        if args.jobs > 1:
            train_parallel(config, args.out, setup, args.jobs)
        else:
            run_training(config, args.out, setup)
        log.info("training complete: %s -> %s", SetupKind(setup).value, args.out)
        return 0
    if args.command == "infer":
        setups = [args.setup] if args.setup else None
        path = run_inference(config, args.out, setups)
        log.info("inference results -> %s", path)
        return 0
    if args.command == "scale":
        setups = [args.setup] if args.setup else None
        path = run_scaling(config, args.out, setups)
        log.info("scaling results -> %s", path)
        return 0
    if args.command == "sweep":
        path = run_neighbor_sweep(config, args.out)
        log.info("sweep results -> %s", path)
        return 0
    if args.command == "report":
        refresh_derived(config, args.out)
        path = write_report(args.out)
        log.info("report -> %s", path)
        return 0
    if args.command == "serve":
        from .server import serve_forever

        serve_forever(config, args.out, setup=args.setup, checkpoint=args.checkpoint, host=args.host, port=args.port)
        return 0
    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
