"""Batch command line front end.

    lbspectra solve --config run.toml --out results/
    lbspectra {solve,stats,convergence,fd-compare,fit-score} ...

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
``LBSPECTRA_NUM_THREADS`` caps assembly workers and BLAS threads.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from contextlib import nullcontext
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config as configmod
from .assembly import assemble, fit_score, penalty_matrix
from .config import ConfigError, RunConfig
from .eigensolve import DEFAULT_K, EigenSolveError, eigendecompose, mode_masses, sample_mode
from .geometry import (
    FlatTorus,
    GeometryError,
    Rectangle,
    UnitSphere,
    default_resolution,
    enumerate_basis,
    geometry_from_dict,
    geometry_to_dict,
    quadrature,
)
from .io import write_csv, write_json, write_matrix_binary, write_matrix_csv, write_mode
from .reference import (
    expand_levels,
    fd_assemble,
    fd_eigenvalues,
    hemisphere_spectrum,
    interval_relaxed_eigenvalue,
    triangle_spectrum,
)
from .region import Domain, Full, RegionError, region_hash, sphere_to_cartesian
from .stats import classify, goe_pdf, histogram, poisson_pdf, shell_split_warning, spacings

log = logging.getLogger("lbspectra")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


@dataclass
class Problem:
    domain: Domain
    spec: object
    grid: object


def build_problem(cfg: RunConfig, N: int | None = None, domain: Domain | None = None) -> Problem:
    dom = domain or cfg.domain()
    try:
        spec = enumerate_basis(dom.geometry, N or cfg.N, cfg.truncation)
    except GeometryError as exc:
        raise ConfigError("N", str(exc)) from exc
    res = cfg.resolution or default_resolution(spec, cfg.nodes_per_halfwave)
    return Problem(dom, spec, quadrature(dom.geometry, res))


def solve_problem(p: Problem, V0: float, K: int | None):
    H = assemble(p.spec, p.domain.region, V0, p.grid)
    K = min(K or DEFAULT_K, p.spec.N)
    return H, eigendecompose(H, K)


def sample_points(geometry, resolution):
    """Uniform cell-centred sampling grid and its output columns."""
    n1, n2 = resolution
    u = (np.arange(n1) + 0.5) / n1
    v = (np.arange(n2) + 0.5) / n2
    U, V = np.meshgrid(u, v, indexing="ij")
    if isinstance(geometry, Rectangle):
        pts = np.stack([U.ravel() * geometry.a1, V.ravel() * geometry.a2], axis=1)
        cols = {"x": pts[:, 0], "y": pts[:, 1]}
    elif isinstance(geometry, UnitSphere):
        pts = np.stack([U.ravel() * math.pi, V.ravel() * 2 * math.pi], axis=1)
        xyz = sphere_to_cartesian(pts)
        cols = {"x": xyz[:, 0], "y": xyz[:, 1], "z": xyz[:, 2]}
    else:
        pts = np.stack([U.ravel(), V.ravel()], axis=1) @ geometry.matrix
        cols = {"x": pts[:, 0], "y": pts[:, 1]}
    return pts, cols


def oracle_levels(dom: Domain, spec, count: int) -> np.ndarray | None:
    """Reference eigenvalues for domains that have one, repeated by multiplicity."""
    if isinstance(dom.region, Full):
        return np.asarray(spec.eigenvalues[:count])
    if dom.name == "equilateral_triangle":
        return expand_levels(triangle_spectrum(count, side=dom.geometry.a1))[:count]
    if dom.name == "hemisphere":
        return expand_levels(hemisphere_spectrum(count))[:count]
    return None


def _meta(cfg: RunConfig, p: Problem, V0: float) -> dict:
    return {
        "N": p.spec.N,
        "V0": V0,
        "geometry": geometry_to_dict(p.domain.geometry),
        "region": p.domain.name,
        "region_hash": region_hash(p.domain.region),
        "resolution": list(p.grid.resolution),
        "truncation": cfg.truncation,
    }


def cmd_solve(cfg: RunConfig, out: Path) -> dict:
    p = build_problem(cfg)
    H, sol = solve_problem(p, cfg.V0, cfg.K)
    _, leak = mode_masses(sol, p.grid, p.domain.region)
    write_csv(out / "spectrum.csv", ["index", "eigenvalue", "leakage"],
              [(j + 1, sol.eigenvalues[j], leak[j]) for j in range(sol.K)])
    meta = _meta(cfg, p, cfg.V0)
    n_modes = min(int(cfg.options.get("modes", 6)), sol.K)
    pts, cols = sample_points(p.domain.geometry, cfg.sample_resolution)
    for j in range(n_modes):
        vals = sample_mode(sol, j, pts)
        write_mode(out / "modes", j, dict(cols, value=vals), tuple(cfg.sample_resolution),
                   dict(meta, eigenvalue=float(sol.eigenvalues[j])))
    dump = cfg.options.get("dump_matrix")
    if dump == "binary":
        write_matrix_binary(out / "hamiltonian.bin", H.entries, cfg.V0, p.domain.geometry.tag)
    elif dump == "csv":
        write_matrix_csv(out / "hamiltonian.csv", H.entries)
    elif dump is not None:
        raise ConfigError("options.dump_matrix", "must be 'binary' or 'csv'")
    write_json(out / "solve.json", dict(meta, K=sol.K, modes_written=n_modes))
    return {"eigenvalues": sol.eigenvalues, "leakage": leak}


def _slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def cmd_convergence(cfg: RunConfig, out: Path) -> dict:
    opts = cfg.options
    nk = int(opts.get("count", 10))
    if opts.get("mode") == "interval":
        V0s = [float(v) for v in opts.get("values", [1e4, 1e5, 1e6, 1e7, 1e8])]
        lam = [interval_relaxed_eigenvalue(v, 1) for v in V0s]
        err = [abs(x - math.pi**2) for x in lam]
        write_csv(out / "convergence.csv", ["V0", "lambda_1", "abs_error"], zip(V0s, lam, err))
        slope = _slope(V0s, err)
        write_json(out / "convergence.json", {"mode": "interval", "loglog_slope": slope})
        return {"slope": slope, "lambda": lam}

    param = opts.get("parameter", "V0")
    if param not in ("V0", "N"):
        raise ConfigError("options.parameter", "must be 'V0' or 'N'")
    values = opts.get("values")
    if not values:
        raise ConfigError("options.values", "a non-empty list is required")
    rows, errs = [], []
    dom = cfg.domain()
    base = build_problem(cfg, domain=dom) if param == "V0" else None
    P = penalty_matrix(base.spec, dom.region, base.grid) if base else None
    for v in values:
        if param == "V0":
            p = base
            H = assemble(p.spec, dom.region, float(v), p.grid, penalty=P)
            V0 = float(v)
        else:
            p = build_problem(cfg, N=int(v), domain=dom)
            H = assemble(p.spec, dom.region, cfg.V0, p.grid)
            V0 = cfg.V0
        k = min(nk, p.spec.N)
        lam = eigendecompose(H, k).eigenvalues
        rows.append([v, *lam])
        ref = oracle_levels(dom, p.spec, k)
        if ref is not None:
            rel = np.where(ref != 0, np.abs(lam - ref) / np.where(ref != 0, ref, 1), np.abs(lam - ref))
            errs.append([v, float(rel.mean()), *rel])
        log.info("%s=%g lambda_1=%.10g", param, v, lam[0])
    k = len(rows[0]) - 1
    write_csv(out / "convergence.csv", [param] + [f"lambda_{i + 1}" for i in range(k)], rows)
    if errs:
        write_csv(out / "relative_error.csv", [param, "mean"] + [f"rel_err_{i + 1}" for i in range(k)], errs)
    return {"rows": rows, "errors": errs}


def _stats_levels(cfg: RunConfig, n: int) -> tuple[np.ndarray, str | None]:
    source = cfg.options.get("source", "expansion")
    rng = np.random.default_rng(cfg.seed)
    if source == "triangle_analytic":
        return expand_levels(triangle_spectrum(n + 1))[: n + 1], None
    if source == "synthetic_poisson":
        return np.concatenate([[0.0], np.cumsum(rng.exponential(size=n))]), None
    if source == "synthetic_goe":
        s = np.sqrt(-4.0 / math.pi * np.log(1.0 - rng.random(n)))
        return np.concatenate([[0.0], np.cumsum(s)]), None
    if source != "expansion":
        raise ConfigError("options.source", f"unknown source {source!r}")
    p = build_problem(cfg)
    warn = shell_split_warning(p.spec)
    if p.spec.N < n + 1:
        raise ConfigError("N", f"need at least {n + 1} basis functions for {n} gaps")
    _, sol = solve_problem(p, cfg.V0, max(cfg.K or 0, n + 1))
    return np.asarray(sol.eigenvalues), warn


def cmd_stats(cfg: RunConfig, out: Path) -> dict:
    opts = cfg.options
    n = int(opts.get("n_gaps", 150))
    lam, warn = _stats_levels(cfg, n)
    sample = spacings(lam, n, drop_degenerate=bool(opts.get("drop_degenerate", False)),
                      unfold_window=opts.get("unfold_window"))
    left, right, dens = histogram(sample, float(opts.get("bin_width", 0.2)), float(opts.get("max_s", 4.0)))
    mid = 0.5 * (left + right)
    write_csv(out / "histogram.csv", ["bin_left", "bin_right", "density", "reference_poisson", "reference_goe"],
              zip(left, right, dens, poisson_pdf(mid), goe_pdf(mid)))
    verdict = classify(sample)
    result = {"label": verdict.label, "ks_poisson": verdict.ks_poisson, "ks_goe": verdict.ks_goe,
              "n_gaps": len(sample), "source": opts.get("source", "expansion")}
    if warn:
        result["warning"] = warn
    write_json(out / "classification.json", result)
    return result


def cmd_fd_compare(cfg: RunConfig, out: Path) -> dict:
    dom = cfg.domain()
    if not isinstance(dom.geometry, Rectangle):
        raise ConfigError("geometry", "fd-compare needs a rectangle host")
    count = int(cfg.options.get("count", 10))
    p = build_problem(cfg, domain=dom)
    _, sol = solve_problem(p, cfg.V0, count)
    nodes = cfg.options.get("fd_nodes", [50, 50])
    op = fd_assemble(dom.geometry, dom.region, cfg.V0, nodes)
    fd = fd_eigenvalues(op, count)
    ref = oracle_levels(dom, p.spec, count)
    if ref is None and cfg.options.get("known"):
        ref = np.asarray(cfg.options["known"], dtype=float)[:count]
    rows = []
    for j in range(min(count, sol.K)):
        rows.append([j + 1, sol.eigenvalues[j], fd[j], ref[j] if ref is not None and j < len(ref) else ""])
    write_csv(out / "fd_compare.csv", ["index", "expansion", "fd", "oracle"], rows)
    # adding a constant to the FD potential must shift every eigenvalue by it
    shift = 1.0
    shifted = fd_eigenvalues(type(op)(op.h, op.nodes, op.potential + shift), 1)[0]
    write_json(out / "fd_compare.json", {"fd_nodes": list(op.nodes), "h": list(op.h),
                                         "constant_shift": shift, "shift_error": float(shifted - fd[0] - shift)})
    return {"expansion": sol.eigenvalues, "fd": fd, "oracle": ref}


def _label(g) -> str:
    if isinstance(g, Rectangle):
        return f"rectangle({g.a1:.17g};{g.a2:.17g})"
    if isinstance(g, FlatTorus):
        return "torus(" + ";".join(f"{v:.17g}" for r in g.B for v in r) + ")"
    return "sphere"


def cmd_fit_score(cfg: RunConfig, out: Path) -> dict:
    dom = cfg.domain()
    cands = cfg.options.get("candidates") or [geometry_to_dict(dom.geometry)]
    rows = []
    for i, c in enumerate(cands):
        try:
            g = geometry_from_dict(c)
        except GeometryError as exc:
            raise ConfigError(f"options.candidates[{i}]", str(exc)) from exc
        p = build_problem(cfg, domain=Domain(dom.name, g, dom.region))
        rows.append([_label(g), fit_score(p.spec, dom.region, p.grid)])
    write_csv(out / "fit_score.csv", ["geometry", "tau"], rows)
    return {"rows": rows}


COMMANDS = {
    "solve": cmd_solve,
    "convergence": cmd_convergence,
    "stats": cmd_stats,
    "fd-compare": cmd_fd_compare,
    "fit-score": cmd_fit_score,
}


def _thread_limit(deterministic: bool):
    cap = os.environ.get("LBSPECTRA_NUM_THREADS")
    limit = 1 if deterministic else (int(cap) if cap else None)
    if limit is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=limit)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="lbspectra", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, help="seed for synthetic samples (unsigned 64-bit)")
    ap.add_argument("--deterministic", action="store_true", help="single-threaded BLAS for reproducible bits")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    try:
        cfg = configmod.load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed", "must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        out = Path(args.out or cfg.out)
        with _thread_limit(args.deterministic):
            COMMANDS[args.command](cfg, out)
    except (ConfigError, GeometryError, RegionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EigenSolveError, np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
