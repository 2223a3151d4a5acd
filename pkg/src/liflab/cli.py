"""Command-line entry point.

Subcommands mirror the studies: convergence, selfsim, validate, simulate,
solve.  Every run writes its resolved configuration (config.txt) next to
the CSV outputs.  Exit code 0 means every pass/fail row passed and no
sweep cell failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backend import backend_name
from .config import (ConfigError, Experiment, ExperimentConfig, config_with,
                     parse_config, serialize_config)
from .csvio import emit_csv
from .experiments import RUNNERS

_SUBCOMMANDS = {
    "convergence": Experiment.CONVERGENCE,
    "selfsim": Experiment.SELF_SIMILAR,
    "validate": Experiment.VALIDATE,
    "simulate": Experiment.SIMULATE,
    "solve": Experiment.SOLVE,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liflab",
        description="Integrate-and-fire random-discharge laboratory "
                    f"(backend: {backend_name()})")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, exp in _SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {exp.value} experiment")
        p.add_argument("--config", type=Path, help="config file (key = value lines)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="base RNG seed (u64)")
        p.add_argument("--paths", type=int, help="Monte Carlo path count")
        p.add_argument("--cells", type=int, help="spatial cell count")
        p.add_argument("--tau", type=float, help="solver time step")
    return parser


def resolve_config(args) -> ExperimentConfig:
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        cfg = parse_config(text)
    else:
        cfg = ExperimentConfig()
    updates = {"experiment": _SUBCOMMANDS[args.command]}
    if args.out is not None:
        updates["out_dir"] = str(args.out)
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.paths is not None:
        updates["paths"] = args.paths
    if args.cells is not None:
        updates["n_cells"] = args.cells
    if args.tau is not None:
        updates["tau"] = args.tau
    return config_with(cfg, **updates)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(serialize_config(cfg))
    result = RUNNERS[cfg.experiment](cfg)
    for name, table in result.tables.items():
        emit_csv(table, out / f"{name}.csv")
    status = "ok" if result.passed else "FAILED"
    print(f"{cfg.experiment.value}: wrote {len(result.tables)} table(s) "
          f"to {out} [{status}]")
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
