"""Command-line entry point for the experiment runner.

Verbs map onto experiment modes: ``generate`` draws traces, ``thresholds``
builds tables, ``curve`` evaluates analytic curves, ``simulate`` runs cache
sweeps, ``reproduce`` re-creates the standard figure bundles, ``validate``
dry-runs a config.  Exit codes: 0 success, 2 invalid config or usage,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .experiments import (
    FIGURES,
    MODES,
    SCALES,
    ConfigError,
    ExperimentConfig,
    reproduce_figure,
    run_experiment,
    tool_version,
    validate_config,
)

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_VERB_MODES = {
    "generate": ("trace",),
    "thresholds": ("thresholds",),
    "curve": ("curve-hit", "curve-gain", "curve-cluster", "curve-local-known"),
    "simulate": ("simulate",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snmcache",
        description="Experiment runner for age-based threshold caching "
                    "under shot-noise traffic.",
        epilog="config modes: " + " ".join(MODES),
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {tool_version()}")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="{generate,thresholds,curve,simulate,"
                                        "reproduce,validate}")

    def add_common(p: argparse.ArgumentParser, config: bool = True) -> None:
        if config:
            p.add_argument("--config", required=True, metavar="PATH",
                           help="experiment config file (JSON)")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="seed override")
        p.add_argument("--jobs", type=int, default=1, metavar="N",
                       help="parallel workers for grid points and replications")

    add_common(sub.add_parser(
        "generate", help="draw a request trace (mode: trace)"))
    add_common(sub.add_parser(
        "thresholds", help="build a threshold table (mode: thresholds)"))
    add_common(sub.add_parser(
        "curve", help="evaluate analytic curves (modes: curve-hit curve-gain "
                      "curve-cluster curve-local-known)"))
    add_common(sub.add_parser(
        "simulate", help="run replicated cache simulations (mode: simulate)"))

    rep = sub.add_parser("reproduce",
                         help="rebuild a standard figure bundle")
    rep.add_argument("figure", choices=FIGURES, help="figure id")
    rep.add_argument("--scale", choices=SCALES, default="desk",
                     help="desk shrinks lam*T and cache count (default: desk)")
    add_common(rep, config=False)

    val = sub.add_parser("validate",
                         help="schema and feasibility checks, no computation")
    val.add_argument("--config", required=True, metavar="PATH",
                     help="experiment config file (JSON)")
    return parser


def _fail(code: int, kind: str, detail) -> int:
    record = {"error": {"code": code, "type": kind, "detail": detail}}
    print(json.dumps(record), file=sys.stderr)
    return code


def _load_for(verb: str, args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config, out_dir=args.out,
                                   seed=args.seed)
    allowed = _VERB_MODES[verb]
    if config.mode not in allowed:
        raise ConfigError([f"mode: verb {verb!r} expects one of "
                           f"{', '.join(allowed)}, got {config.mode!r}"])
    return config


def _run_verb(verb: str, args: argparse.Namespace) -> int:
    paths = run_experiment(_load_for(verb, args), jobs=args.jobs)
    for path in paths:
        print(path)
    return EXIT_OK


def _cmd_reproduce(args: argparse.Namespace) -> int:
    paths = reproduce_figure(args.figure, scale=args.scale, out_dir=args.out,
                             seed=args.seed or 0, jobs=args.jobs)
    for path in paths:
        print(path)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        with open(args.config) as f:
            raw = json.load(f)
    except OSError as err:
        return _fail(EXIT_CONFIG, "ConfigError", [str(err)])
    except json.JSONDecodeError as err:
        return _fail(EXIT_CONFIG, "ConfigError",
                     [f"{args.config}: not valid JSON ({err})"])
    violations = validate_config(raw)
    if violations:
        for line in violations:
            print(line)
        return _fail(EXIT_CONFIG, "ConfigError", violations)
    print("ok")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce":
            return _cmd_reproduce(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _run_verb(args.command, args)
    except ConfigError as err:
        return _fail(EXIT_CONFIG, "ConfigError", err.violations)
    except OSError as err:
        return _fail(EXIT_CONFIG, "ConfigError", [str(err)])
    except (ValueError, ArithmeticError) as err:
        return _fail(EXIT_NUMERIC, type(err).__name__, [str(err)])


if __name__ == "__main__":
    sys.exit(main())
