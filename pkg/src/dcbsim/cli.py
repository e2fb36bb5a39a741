"""Command line entry point: ``dcbsim run | scenario gen|validate | describe-defaults``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .experiment import ConfigError, ExperimentConfig, run_experiment
from .mac import MacParams
from .phy import PhyParams
from .scenario import DeploymentParams, ScenarioError, generate, load, save, validate

EXIT_OK, EXIT_CELLS_FAILED, EXIT_CONFIG = 0, 1, 2


def _defaults() -> dict:
    exp = ExperimentConfig().to_dict()
    exp["phy"] = dataclasses.asdict(PhyParams())
    exp["mac"] = dataclasses.asdict(MacParams())
    exp["traffic"] = {"packet_bits": 12000, "buffer_packets": 150, "max_aggregation": 64}
    exp["deployment"] = dataclasses.asdict(DeploymentParams())
    return exp


def cmd_run(args) -> int:
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.workers is not None:
            cfg.workers = args.workers
        if args.out is not None:
            cfg.out_dir = args.out
        cfg.decision_log = cfg.decision_log or args.decision_log
        cfg.occupancy_log = cfg.occupancy_log or args.occupancy_log
        cfg.validate()
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(cfg, progress=True)


def cmd_scenario(args) -> int:
    params = DeploymentParams()
    if args.action == "gen":
        sc = generate(params, args.seed)
        if args.load is not None:
            sc = sc.with_central_load(args.load)
        if args.path:
            save(sc, args.path)
        else:
            from .scenario import to_dict
            print(json.dumps(to_dict(sc), indent=2))
        return EXIT_OK
    if not args.path:
        print("scenario validate needs a path", file=sys.stderr)
        return EXIT_CONFIG
    try:
        sc = load(args.path, params)
        validate(sc, params)
    except (ScenarioError, OSError) as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: {len(sc.wlans)} WLANs")
    return EXIT_OK


def cmd_defaults(args) -> int:
    print(json.dumps(_defaults(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcbsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a batch experiment")
    p.add_argument("--config", help="experiment JSON (defaults: full evaluation grid)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--decision-log", action="store_true", help="write per-iteration decisions.csv")
    p.add_argument("--occupancy-log", action="store_true", help="write per-iteration occupancy.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scenario", help="generate or validate a scenario file")
    p.add_argument("action", choices=["gen", "validate"])
    p.add_argument("path", nargs="?")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--load", type=float, help="central WLAN load (bit/s)")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("describe-defaults", help="print the default parameters")
    p.set_defaults(func=cmd_defaults)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
