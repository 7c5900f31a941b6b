"""Command-line front end: ``liphilbert <subcommand> [flags]``.

Flags build an :class:`~liphilbert.experiments.ExperimentConfig`; a JSON
config file given with ``--config`` overrides them key by key.  The JSON
report is written to ``--out`` (and printed to stdout).  The exit status is
0 when every check passes, 1 when a check fails and 2 for invalid
configurations or failing stages.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    StageError,
    _jsonable,
    run_experiment,
    write_report,
)

FAMILIES = ("identity", "lacunary", "random_sinusoidal", "shear")
DIRECTIONS = ("zero", "constant", "random_step", "sinusoid")


def family_spec(name: str, b0: float, seed: int) -> dict:
    """Family spec from the ``--family`` and ``--b0`` flags."""
    if name == "identity":
        return {"name": "identity"}
    if name == "shear":
        return {"name": "shear", "slope": b0}
    if name in ("lacunary", "random_sinusoidal"):
        return {"name": name, "b0": b0, "seed": seed}
    raise ConfigError(f"unknown family {name!r}; choose from {FAMILIES}")


def direction_spec(name: str, amplitude: float, seed: int) -> dict:
    """Direction spec from the ``--u`` flag with amplitude ``c0 / b0``."""
    if name == "zero":
        return {"name": "zero"}
    if name == "constant":
        return {"name": "constant", "value": amplitude}
    if name == "random_step":
        return {"name": "random_step", "pieces": 8, "amplitude": amplitude, "seed": seed}
    if name == "sinusoid":
        return {"name": "sinusoid", "amplitude": amplitude}
    raise ConfigError(f"unknown direction field {name!r}; choose from {DIRECTIONS}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liphilbert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--n", type=int, default=64, help="grid size (power of two)")
        sp.add_argument("--family", choices=FAMILIES, default="identity")
        sp.add_argument("--u", choices=DIRECTIONS, default="zero", help="direction field")
        sp.add_argument("--b0", type=float, default=0.01, help="vertical Lipschitz bound of the family")
        sp.add_argument("--c0", type=float, default=None,
                        help="direction amplitude is c0 / b0 (default amplitude 0.08)")
        sp.add_argument("--band", type=int, nargs=2, metavar=("KLO", "KHI"), default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=str, default=None, help="output directory")
        sp.add_argument("--config", type=str, default=None, help="JSON file overriding the flags")
        sp.add_argument("--param", action="append", default=[], metavar="KEY=JSON",
                        help="experiment parameter, e.g. --param R=32")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    amplitude = 0.08 if args.c0 is None else args.c0 / args.b0
    params = {}
    for item in args.param:
        key, _, raw = item.partition("=")
        if not key or not raw:
            raise ConfigError(f"--param expects KEY=JSON, got {item!r}")
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    d = {
        "experiment": args.experiment,
        "n": args.n,
        "family": family_spec(args.family, args.b0, args.seed),
        "direction": direction_spec(args.u, amplitude, args.seed),
        "band": list(args.band) if args.band else None,
        "seed": args.seed,
        "out": args.out,
        "params": params,
    }
    if args.config:
        override = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if override.get("experiment", args.experiment) != args.experiment:
            raise ConfigError("config file names a different experiment")
        d.update(override)
    return ExperimentConfig.from_dict(d)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
        report = run_experiment(cfg)
    except (ConfigError, StageError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.out:
        write_report(report, cfg.out)
    body = {k: v for k, v in report.items() if k != "curves"}
    print(json.dumps(_jsonable(body), indent=2, sort_keys=True))
    for c in report["checks"]:
        if not c["passed"]:
            print(f"check failed: {c['name']}", file=sys.stderr)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
