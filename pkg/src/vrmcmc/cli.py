"""Command-line entry point: ``vrmcmc <experiment> --config path.json``."""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError, InvalidArgumentError, VrmcmcError
from .experiments import ExperimentConfig, run_experiment, run_oracle_check

EXIT_OK, EXIT_ORACLE_FAIL, EXIT_CONFIG = 0, 1, 2
_CLI_NAMES = {"budget-sweep": "budget_sweep", "vr-compare": "vr_compare",
              "n1-sweep": "n1_sweep", "oracle-check": "oracle_check"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vrmcmc", description="Variance-reduced SGLD experiments.")
    p.add_argument("experiment", help="budget_sweep, vr_compare, n1_sweep or oracle-check "
                                      "(dashes and underscores are interchangeable)")
    p.add_argument("--config", help="JSON experiment config (required except for oracle-check)")
    p.add_argument("--seed", type=int, help="override the config's master seed")
    p.add_argument("--out", default=".", help="output directory for <experiment>.csv")
    p.add_argument("--threads", type=int, default=1, help="worker processes for independent chains")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    name = _CLI_NAMES.get(args.experiment, args.experiment)
    try:
        if name == "oracle_check":
            cfg = ExperimentConfig.load(args.config) if args.config else None
            if cfg is not None and args.seed is not None:
                cfg.seed = args.seed
            elif cfg is None and args.seed is not None:
                cfg = ExperimentConfig("oracle_check", seed=args.seed)
            return EXIT_OK if run_oracle_check(cfg) else EXIT_ORACLE_FAIL
        if not args.config:
            raise ConfigError(f"{name} needs --config")
        cfg = ExperimentConfig.load(args.config)
        if cfg.experiment != name:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {name!r}")
        if args.seed is not None:
            cfg.seed = args.seed
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        text = run_experiment(cfg, threads=args.threads)
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"{name}.csv")
        with open(path, "w", newline="") as fh:
            fh.write(text)
        print(path)
        return EXIT_OK
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VrmcmcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE_FAIL


if __name__ == "__main__":
    sys.exit(main())
