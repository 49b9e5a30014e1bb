"""Experiment driver: refinement sequences, rate tables, CSV emission."""
from __future__ import annotations

import io
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import __version__
from .assembly import assemble_blocks, assemble_rhs, cell_measures
from .extensions import darcy_mass_balance, solve_darcy, solve_stokes
from .fespace import build_layout
from .mesh import build_structured, subdivide
from .postprocess import conservation_residual, error_norms
from .problems import (ManufacturedCase, build_family_mesh, darcy_case,
                       example1, example2_3d, example3_hetero,
                       example4_incompressible, stokes_case)
from .reduction import solve_elasticity

ELASTICITY_COLUMNS = ("sigma", "mean_sigma", "u", "gamma", "u_center")
DARCY_COLUMNS = ("velocity", "pressure")
STOKES_COLUMNS = ("velocity", "pressure")


@dataclass
class RunConfig:
    """One refinement study: problem, variant, meshes, levels, data."""

    example: str = "1"                # 1..5, darcy, stokes
    method: str = "1"                 # 1, 2, 1-scaled (elasticity only)
    mesh_family: str = "structured"
    level_lo: int = 0
    level_hi: int = 3
    lam: Optional[float] = None
    mu: Optional[float] = None
    seed: int = 20250814
    tol: float = 1e-12
    solver: str = "auto"
    out: Optional[str] = None

    def __post_init__(self):
        if self.example not in {"1", "2", "3", "4", "5", "darcy", "stokes"}:
            raise ValueError(f"unknown example {self.example!r}")
        if self.method not in {"1", "2", "1-scaled"}:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "1-scaled" and self.example in {"darcy", "stokes"}:
            raise ValueError("scaled rotation applies to elasticity only")
        if self.example == "2" and self.mesh_family != "structured":
            raise ValueError("3D runs use structured meshes only")
        if self.level_lo > self.level_hi:
            raise ValueError("empty level range")

    def case(self) -> Optional[ManufacturedCase]:
        if self.example == "1" or self.example == "5":
            kw = {}
            if self.lam is not None:
                kw["lam"] = self.lam
            if self.mu is not None:
                kw["mu"] = self.mu
            return example1(**kw)
        if self.example == "2":
            return example2_3d()
        if self.example == "3":
            return example3_hetero()
        if self.example == "4":
            kw = {"lam": self.lam} if self.lam is not None else {}
            if self.mu is not None:
                kw["mu"] = self.mu
            return example4_incompressible(**kw)
        return None

    def family(self) -> str:
        if self.example == "5" and self.mesh_family == "structured":
            raise ValueError("example 5 expects a distorted mesh family")
        return self.mesh_family

    def n_at(self, level: int) -> int:
        case = self.case()
        n0 = case.default_seed_n if case is not None else 4
        return n0 * (1 << level)


@dataclass
class ConvergenceTable:
    """Rows of (h, per-column error and rate, iterations, wall seconds)."""

    columns: tuple
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add_row(self, h: float, errors: dict, iterations: int,
                seconds: float) -> None:
        rates = {}
        if self.rows:
            prev = self.rows[-1]
            ratio = prev["h"] / h
            if abs(ratio - 2.0) < 1e-9:
                for k in self.columns:
                    a, b = prev["errors"][k], errors[k]
                    rates[k] = (np.log2(a / b)
                                if a > 0 and b > 0 else float("nan"))
        self.rows.append({"h": h, "errors": dict(errors), "rates": rates,
                          "iterations": iterations, "seconds": seconds})

    def column(self, name: str) -> list:
        return [r["errors"][name] for r in self.rows]

    def rate_column(self, name: str) -> list:
        return [r["rates"].get(name) for r in self.rows[1:]]


def run_convergence(cfg: RunConfig,
                    progress: Optional[Callable] = None) -> ConvergenceTable:
    """Build/solve/measure at every level of the configured study."""
    if cfg.example == "darcy":
        return _run_darcy(cfg, progress)
    if cfg.example == "stokes":
        return _run_stokes(cfg, progress)
    return _run_elasticity(cfg, progress)


def _meta(cfg: RunConfig) -> dict:
    return {"example": cfg.example, "method": cfg.method,
            "mesh": cfg.mesh_family, "levels": f"{cfg.level_lo}..{cfg.level_hi}",
            "lambda": cfg.lam, "mu": cfg.mu, "seed": cfg.seed,
            "tol": cfg.tol, "solver": cfg.solver,
            "version": f"mscv-{__version__}"}


def _run_elasticity(cfg, progress):
    case = cfg.case()
    table = ConvergenceTable(columns=ELASTICITY_COLUMNS, meta=_meta(cfg))
    dim = case.dim
    family = cfg.family() if cfg.example == "5" else cfg.mesh_family
    for level in range(cfg.level_lo, cfg.level_hi + 1):
        n = cfg.n_at(level)
        t0 = time.perf_counter()
        mesh = build_family_mesh(family, n, dim=dim, seed=cfg.seed)
        sub = subdivide(mesh)
        layout = build_layout(sub, cfg.method)
        blocks = assemble_blocks(sub, layout, case.material(sub))
        F, G = assemble_rhs(sub, layout, case.f, case.boundary)
        sol = solve_elasticity(blocks, F, G, solver=cfg.solver, tol=cfg.tol)
        rep = error_norms(sol, sub, case, cfg.method)
        seconds = time.perf_counter() - t0
        errors = {"sigma": rep.sigma, "mean_sigma": rep.mean_sigma,
                  "u": rep.u, "gamma": rep.gamma, "u_center": rep.u_center}
        table.add_row(1.0 / n, errors, sol.iterations, seconds)
        if progress:
            progress(level, n, errors)
    return table


def _subcell_centroids(sub) -> np.ndarray:
    return sub.subcell_corners.mean(axis=1)


def _run_darcy(cfg, progress):
    data = darcy_case()
    table = ConvergenceTable(columns=DARCY_COLUMNS, meta=_meta(cfg))
    for level in range(cfg.level_lo, cfg.level_hi + 1):
        n = 4 * (1 << level)
        t0 = time.perf_counter()
        mesh = build_family_mesh(cfg.mesh_family, n, seed=cfg.seed)
        sub = subdivide(mesh)
        sol = solve_darcy(sub, data["f"], data["pressure"],
                          solver=cfg.solver, tol=cfg.tol)
        cm = cell_measures(sub)
        pc = data["pressure"](sub.cell_centers)
        err_p = np.sqrt(np.sum(cm * (sol.pressure - pc) ** 2)
                        / np.sum(cm * pc ** 2))
        ctr = _subcell_centroids(sub)
        ve = data["velocity"](ctr)
        dv = sol.velocity - ve
        err_v = np.sqrt(np.sum(sub.subcell_measure * np.sum(dv * dv, axis=1))
                        / np.sum(sub.subcell_measure * np.sum(ve * ve, axis=1)))
        errors = {"velocity": float(err_v), "pressure": float(err_p)}
        table.add_row(1.0 / n, errors, sol.iterations,
                      time.perf_counter() - t0)
        if progress:
            progress(level, n, errors)
    return table


def _run_stokes(cfg, progress):
    data = stokes_case()
    table = ConvergenceTable(columns=STOKES_COLUMNS, meta=_meta(cfg))
    for level in range(cfg.level_lo, cfg.level_hi + 1):
        n = 4 * (1 << level)
        t0 = time.perf_counter()
        mesh = build_family_mesh(cfg.mesh_family, n, seed=cfg.seed)
        sub = subdivide(mesh)
        sol = solve_stokes(sub, data["f"])
        cm = cell_measures(sub)
        uc = data["velocity"](sub.cell_centers)
        du = sol.u - uc
        num = np.sum(cm * np.sum(du * du, axis=1))
        den = np.sum(cm * np.sum(uc * uc, axis=1))
        err_u = np.sqrt(num / den)
        from .postprocess import region_measures
        rm = region_measures(sub)
        pe = data["pressure"](sub.macro.vertices)
        pe = pe - np.sum(rm * pe) / rm.sum()
        ph = sol.pressure - np.sum(rm * sol.pressure) / rm.sum()
        err_p = np.sqrt(np.sum(rm * (ph - pe) ** 2) / np.sum(rm * pe ** 2))
        errors = {"velocity": float(err_u), "pressure": float(err_p)}
        table.add_row(1.0 / n, errors, 0, time.perf_counter() - t0)
        if progress:
            progress(level, n, errors)
    return table


def format_table(table: ConvergenceTable) -> str:
    """Aligned plain-text rendering of a convergence table."""
    out = io.StringIO()
    head = ["h"]
    for c in table.columns:
        head += [c, "rate"]
    head += ["iters", "seconds"]
    out.write("  ".join(f"{x:>11s}" for x in head) + "\n")
    for row in table.rows:
        cells = [f"{row['h']:>11.6f}"]
        for c in table.columns:
            cells.append(f"{row['errors'][c]:>11.4E}")
            r = row["rates"].get(c)
            cells.append(f"{r:>11.4f}" if r is not None else " " * 11)
        cells.append(f"{row['iterations']:>11d}")
        cells.append(f"{row['seconds']:>11.3f}")
        out.write("  ".join(cells) + "\n")
    return out.getvalue()


def emit_csv(table: ConvergenceTable, path) -> None:
    """CSV with one header line, 4-significant-digit scientific errors,
    4-decimal rates, and trailing '#'-prefixed metadata lines."""
    with open(path, "w") as fh:
        fh.write(_csv_text(table))


def _csv_text(table: ConvergenceTable) -> str:
    cols = ["h"]
    for c in table.columns:
        cols += [f"err_{c}", f"rate_{c}"]
    cols += ["iterations", "seconds"]
    lines = [",".join(cols)]
    for row in table.rows:
        cells = [f"{row['h']:.10g}"]
        for c in table.columns:
            cells.append(f"{row['errors'][c]:.4E}")
            r = row["rates"].get(c)
            cells.append(f"{r:.4f}" if r is not None else "")
        cells.append(str(row["iterations"]))
        cells.append(f"{row['seconds']:.3f}")
        lines.append(",".join(cells))
    for k, v in table.meta.items():
        lines.append(f"# {k} = {v}")
    return "\n".join(lines) + "\n"


def read_csv(path) -> ConvergenceTable:
    """Round-trip reader for emitted tables (metadata into meta)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    header = lines[0].split(",")
    columns = tuple(c[4:] for c in header[1:-2:2])
    table = ConvergenceTable(columns=columns)
    for ln in lines[1:]:
        if not ln:
            continue
        if ln.startswith("#"):
            k, _, v = ln[1:].partition("=")
            table.meta[k.strip()] = v.strip()
            continue
        cells = ln.split(",")
        errors, rates = {}, {}
        for i, c in enumerate(columns):
            errors[c] = float(cells[1 + 2 * i])
            if cells[2 + 2 * i]:
                rates[c] = float(cells[2 + 2 * i])
        table.rows.append({"h": float(cells[0]), "errors": errors,
                           "rates": rates,
                           "iterations": int(cells[-2]),
                           "seconds": float(cells[-1])})
    return table


def dump_fields(sol, sub, path, F: Optional[np.ndarray] = None) -> None:
    """CSV point cloud of cell centers, displacement, and (optionally) the
    per-cell conservation residual norm."""
    d = sub.dim
    centers = sub.cell_centers
    res = None
    if F is not None:
        res = np.linalg.norm(conservation_residual(sol, sub, F), axis=1)
    with open(path, "w") as fh:
        cols = [f"x{k}" for k in range(d)] + [f"u{k}" for k in range(d)]
        if res is not None:
            cols.append("residual")
        fh.write(",".join(cols) + "\n")
        for i in range(sub.macro.num_cells):
            cells = [f"{centers[i, k]:.10g}" for k in range(d)]
            cells += [f"{sol.u[i, k]:.10E}" for k in range(d)]
            if res is not None:
                cells.append(f"{res[i]:.4E}")
            fh.write(",".join(cells) + "\n")
