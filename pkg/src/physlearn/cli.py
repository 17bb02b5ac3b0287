"""Command-line runner: ``physlearn list`` and ``physlearn run <experiment>``.

Exit codes: 0 success, 1 configuration error, 2 numerical abort.
"""

from __future__ import annotations

import argparse
import difflib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import NumericalAbort
from .experiments import REGISTRY, run_experiment

OUT_ENV = "PHYSLEARN_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2


class ConfigError(Exception):
    pass


def list_experiments():
    """``(name, figure, description)`` for every registered experiment."""
    return [(e.name, e.figure, e.description) for e in REGISTRY.values()]


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    return value


def _parse_sets(items):
    overrides = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    return overrides


def _load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object of key/value pairs")
    return data


def run(name, seed=1, overrides=None, out=None, stderr=None):
    """Run one experiment; returns the process exit code."""
    stderr = stderr or sys.stderr
    if name not in REGISTRY:
        near = difflib.get_close_matches(name, list(REGISTRY), n=3, cutoff=0.4)
        hint = f"; did you mean {', '.join(near)}?" if near else ""
        print(f"error: unknown experiment {name!r}{hint}", file=stderr)
        return EXIT_CONFIG
    out_root = Path(out or os.environ.get(OUT_ENV) or "runs")
    out_dir = out_root / name
    try:
        params, results = run_experiment(name, seed, dict(overrides or {}), out_dir)
    except KeyError as exc:
        print(f"error: unknown parameter {exc.args[0]!r} for {name}; "
              f"known: {', '.join(REGISTRY[name].defaults)}", file=stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        out_dir.mkdir(parents=True, exist_ok=True)
        diag = out_dir / "diagnostics.json"
        diag.write_text(json.dumps(_jsonable({"error": str(exc), **exc.diagnostics}), indent=2) + "\n")
        print(f"numerical abort: {exc}; diagnostics in {diag}", file=stderr)
        return EXIT_ABORT
    manifest = {
        "experiment": name,
        "figure": REGISTRY[name].figure,
        "seed": int(seed),
        "version": __version__,
        "params": params,
        "results": results,
        "files": sorted(p.name for p in out_dir.glob("*.csv")),
    }
    (out_dir / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2) + "\n")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="physlearn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="show the experiment catalog")
    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("experiment")
    p_run.add_argument("--seed", type=int, default=1)
    p_run.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE")
    p_run.add_argument("--config", help="JSON file of parameter overrides")
    p_run.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./runs)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, figure, desc in list_experiments():
            print(f"{name:16s} {figure:18s} {desc}")
        return EXIT_OK
    try:
        overrides = _load_config(args.config) if args.config else {}
        overrides.update(_parse_sets(args.sets))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.experiment, args.seed, overrides, args.out)


if __name__ == "__main__":
    sys.exit(main())
