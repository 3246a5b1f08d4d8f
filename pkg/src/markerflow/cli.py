"""Command-line surface: `markerflow run <config>` and `markerflow presets`.

Exit codes: 0 success, 1 validation failure, 2 integration failure (partial
artifacts are kept).
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__, figures, output, presets, spectral
from .config import ConfigError, load_config
from .experiments import run_experiment_kind
from .transport import IntegrationError


def _versions() -> dict:
    return {"markerflow": __version__, "numpy": np.__version__}


def run_command(config_path: str, out_override: str | None, threads: int | None) -> int:
    try:
        cfg = load_config(config_path)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if out_override:
        cfg.out = out_override
    if cfg.out is None:
        print("error: no output directory (set `out` in the config or pass --out)",
              file=sys.stderr)
        return 1
    env_threads = os.environ.get("MARKERFLOW_THREADS")
    if env_threads is not None:
        try:
            cfg.threads = int(env_threads)
        except ValueError:
            print(f"error: MARKERFLOW_THREADS must be an integer, got {env_threads!r}",
                  file=sys.stderr)
            return 1
    elif threads is not None:
        cfg.threads = threads

    try:
        result = run_experiment_kind(cfg)
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        # keep whatever was produced before the failure
        output.write_artifacts(cfg.out, cfg, getattr(exc, "partial", _empty_result()),
                               _versions())
        return 2

    output.write_artifacts(cfg.out, cfg, result, _versions())
    if cfg.figures:
        figures.render_figures(cfg.kind, result.records, result.manifest, cfg.out)
    print(f"wrote {cfg.out}/records.csv ({len(result.records)} records)")
    return 0


def _empty_result():
    from .experiments import RunResult
    return RunResult()


def presets_command() -> int:
    print("available presets (nondegeneracy constants measured at n=128, strip 0.5):")
    grid = spectral.Grid(128)
    for name in presets.preset_names():
        m = presets.build_preset(name, grid, beta=40.0)
        consts = presets.measure_nondegeneracy(m)
        pairs = ", ".join(f"{k}={v:.6g}" for k, v in sorted(consts.items())
                          if k.startswith("m_"))
        print(f"  {name}: K={m.k}, levels={m.config.levels}, {pairs}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="markerflow",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config", help="path to a key = value config file")
    p_run.add_argument("--out", help="output directory (overrides the config)")
    p_run.add_argument("--threads", type=int, default=None,
                       help="worker threads (MARKERFLOW_THREADS overrides)")
    sub.add_parser("presets", help="list shipped presets with measured constants")
    args = parser.parse_args(argv)

    if args.command == "run":
        return run_command(args.config, args.out, args.threads)
    return presets_command()


if __name__ == "__main__":
    sys.exit(main())
