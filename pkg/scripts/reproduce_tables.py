#!/usr/bin/env python3
"""Run the full elasticity benchmark suite and write one CSV per table.

Each run is a manufactured-solution convergence study; the printed tables show
relative errors and observed orders for the stress, mean stress, displacement,
and rotation fields.  Results land in results/ by default.
"""
import argparse
import pathlib

from mscv.harness import RunConfig, emit_csv, format_table, run_convergence

RUNS = [
    ("table1_method1", dict(example="1", method="1", level_hi=5)),
    ("table1_method2", dict(example="1", method="2", level_hi=5)),
    ("table2_3d_method1", dict(example="2", method="1", level_hi=2)),
    ("table2_3d_method2", dict(example="2", method="2", level_hi=2)),
    ("table3_method1_scaled", dict(example="3", method="1-scaled",
                                   level_hi=3)),
    ("table3_method2", dict(example="3", method="2", level_hi=3)),
    ("table4_method1", dict(example="4", method="1", level_hi=4)),
    ("table4_method2", dict(example="4", method="2", level_hi=4)),
    ("table5_parallelogram", dict(example="5", method="1",
                                  mesh_family="parallelogram", level_hi=5)),
    ("table6_smooth", dict(example="5", method="1", mesh_family="smooth",
                           level_hi=5)),
    ("table7_random", dict(example="5", method="1", mesh_family="random",
                           level_hi=5)),
]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--quick", action="store_true",
                    help="cap every study at three refinement levels")
    ap.add_argument("--only", default=None,
                    help="substring filter on table names")
    args = ap.parse_args()

    outdir = pathlib.Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, kw in RUNS:
        if args.only and args.only not in name:
            continue
        if args.quick:
            kw = dict(kw, level_hi=min(kw["level_hi"], 2))
        cfg = RunConfig(**kw)
        print(f"\n### {name}  (example {cfg.example}, method {cfg.method}, "
              f"{cfg.mesh_family})")
        table = run_convergence(cfg, progress=print)
        print(format_table(table))
        emit_csv(table, outdir / f"{name}.csv")
        print(f"wrote {outdir / f'{name}.csv'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
