"""Command-line entry point for refinement studies."""
from __future__ import annotations

import argparse
import sys
from typing import Optional

from .harness import RunConfig, emit_csv, format_table, run_convergence

_CONFIG_KEYS = {
    "example": str, "method": str, "mesh": str, "levels": str,
    "lambda": float, "mu": float, "seed": int, "tol": float,
    "solver": str, "out": str,
}


def _parse_levels(text: str):
    lo, sep, hi = text.partition("..")
    if not sep:
        lo = hi = text
    try:
        return int(lo), int(hi)
    except ValueError:
        raise ValueError(
            f"levels must look like 'A..B' or 'A', got {text!r}") from None


def _read_config(path) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: bad entry {raw.strip()!r}")
            values[key] = _CONFIG_KEYS[key](val)
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mscv",
        description="Cell-centered locally conservative solvers for "
                    "elasticity (with weak symmetry), Darcy flow, and "
                    "Stokes flow on quadrilateral/hexahedral grids.")
    p.add_argument("--example", default=None,
                   choices=["1", "2", "3", "4", "5", "darcy", "stokes"],
                   help="benchmark problem to run")
    p.add_argument("--method", default=None, choices=["1", "2", "1-scaled"],
                   help="rotation variant: per-vertex-region (1), "
                        "per-cell (2), or compliance-scaled per-region")
    p.add_argument("--mesh", default=None,
                   choices=["structured", "parallelogram", "smooth",
                            "random"],
                   help="mesh family")
    p.add_argument("--levels", default=None, metavar="A..B",
                   help="inclusive refinement level range (level 0 = "
                        "coarsest seed grid, each level halves h)")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="override the first Lame parameter")
    p.add_argument("--mu", type=float, default=None,
                   help="override the shear modulus")
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed for randomly perturbed meshes")
    p.add_argument("--tol", type=float, default=None,
                   help="iterative solver tolerance")
    p.add_argument("--solver", default=None,
                   choices=["auto", "dense", "direct", "cg"],
                   help="linear solver for the reduced system")
    p.add_argument("--out", default=None,
                   help="write the convergence table to this CSV file")
    p.add_argument("--config", default=None,
                   help="key=value file providing defaults "
                        "(explicit flags take precedence)")
    return p


def config_from_args(args) -> RunConfig:
    values = {}
    if args.config is not None:
        values.update(_read_config(args.config))
    for key in ("example", "method", "mesh", "levels", "lam", "mu",
                "seed", "tol", "solver", "out"):
        flag = getattr(args, key)
        if flag is not None:
            values["lambda" if key == "lam" else
                   "mesh" if key == "mesh" else key] = flag
    kw = {}
    if "example" in values:
        kw["example"] = str(values["example"])
    if "method" in values:
        kw["method"] = str(values["method"])
    if "mesh" in values:
        kw["mesh_family"] = values["mesh"]
    if "levels" in values:
        lo, hi = (_parse_levels(values["levels"])
                  if isinstance(values["levels"], str)
                  else values["levels"])
        kw["level_lo"], kw["level_hi"] = lo, hi
    if "lambda" in values:
        kw["lam"] = float(values["lambda"])
    if "mu" in values:
        kw["mu"] = float(values["mu"])
    if "seed" in values:
        kw["seed"] = int(values["seed"])
    if "tol" in values:
        kw["tol"] = float(values["tol"])
    if "solver" in values:
        kw["solver"] = values["solver"]
    if "out" in values:
        kw["out"] = values["out"]
    return RunConfig(**kw)


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    def progress(level, n, errors):
        cols = "  ".join(f"{k}={v:.4E}" for k, v in errors.items())
        print(f"level {level} (n={n}): {cols}", flush=True)

    try:
        table = run_convergence(cfg, progress=progress)
    except Exception as exc:  # surface solver failures as nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print()
    print(format_table(table), end="")
    if cfg.out:
        emit_csv(table, cfg.out)
        print(f"wrote {cfg.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
