#!/usr/bin/env python3
"""Convergence studies for the Darcy and Stokes companions.

Darcy: cell-centered pressure with locally conservative fluxes, manufactured
p = sin(pi x) sin(pi y).  Stokes: velocity-gradient elimination with a
per-vertex-region pressure, manufactured divergence-free velocity.
"""
import argparse
import pathlib

from mscv.harness import RunConfig, emit_csv, format_table, run_convergence


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--levels", type=int, default=3,
                    help="finest refinement level (n = 4 * 2^level)")
    args = ap.parse_args()

    outdir = pathlib.Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for example in ("darcy", "stokes"):
        cfg = RunConfig(example=example, level_lo=0, level_hi=args.levels)
        print(f"\n### {example}")
        table = run_convergence(cfg, progress=print)
        print(format_table(table))
        emit_csv(table, outdir / f"{example}.csv")
        print(f"wrote {outdir / f'{example}.csv'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
