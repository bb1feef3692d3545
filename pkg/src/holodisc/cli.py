"""Batch experiment runner.

Subcommands wrap one pipeline each: symplin-check, opnorm-study,
beltrami-solve, glue-cylinder, glue-torus, nonsqueeze.  Configuration comes
from defaults, an optional TOML file (--config) and a few named flag
overrides, in that order.  Every run writes a manifest.json (config echo,
versions, wall time) next to the result artifacts; with the same config and
seed the result CSV/JSON artifacts are byte-identical across runs, the
manifest being the one exception because of its wall-time entry.

Exit codes: 0 success, 2 convergence failure, 3 configuration error.
HOLODISC_LOG selects the logging level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .beltrami import constant_structure, solve_local
from .errors import ConvergenceError, DomainError, ShapeError
from .grid import DiscGrid, GridField, field_from_function, lp_norm, save_field
from .gluing import (CylinderProblem, TorusProblem, cylinder_structure, solve_cylinder,
                     solve_torus, triangle_area_quadrature, triangle_map)
from .nonsqueeze import (hamiltonian_flow, identity_map, nonsqueezing_experiment,
                         unitary_rotation)
from .singular import beurling_S, estimate_opnorm, op_S1, op_S2, random_test_field
from .svgplot import line_plot
from .symplin import (antiholomorphic_ratio_formula, build_unit_norm_example, is_compatible,
                      is_tamed, norm_antiholomorphic_ratio, opnorm, preserves_omega,
                      random_symplectomorphism, transposed_identities)

log = logging.getLogger("holodisc")

COMMANDS = ("symplin-check", "opnorm-study", "beltrami-solve", "glue-cylinder",
            "glue-torus", "nonsqueeze")

DEFAULTS = {
    "symplin-check": {"n_ops": 100, "dim_max": 8, "example_sizes": [2, 4, 8, 16], "seed": 0},
    "opnorm-study": {"op": "S", "p": [2.0], "nr": 128, "nt": 128, "trials": 50,
                     "dim": 1, "seed": 0},
    "beltrami-solve": {"a": 0.3, "nr": 96, "nt": 96, "tol": 1e-8, "max_iter": 80, "seed": 0},
    "glue-cylinder": {"a": 0.1, "dim": 2, "target": [[0.1, 0.4], [0.2, 0.1]],
                      "cutoff": False, "nr": 96, "nt": 96, "p": 2.05, "tol": 1e-8, "seed": 0},
    "glue-torus": {"r": 0.8, "n_wind": 2, "V": [[0.8, 0.0]], "amp_a": 0.15, "amp_b": 0.1,
                   "nr": 96, "nt": 96, "tol": 1e-10, "seed": 0},
    "nonsqueeze": {"phi": "identity", "time": 0.05, "dim": 4, "r": 1.0, "R": 1.0,
                   "eps": 0.05, "nr": 96, "nt": 96, "seed": 0},
}


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def config_digest(cfg):
    """Stable hash of the resolved configuration, echoed in every report."""
    import hashlib

    blob = json.dumps(cfg, sort_keys=True, default=_json_default).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1, default=_json_default)
        fh.write("\n")


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _complex_of(pair):
    if isinstance(pair, (list, tuple)):
        return complex(pair[0], pair[1])
    return complex(pair)


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------


def run_symplin_check(cfg, out, plots):
    rng = np.random.default_rng(cfg["seed"])
    rows = []
    worst = {"gram": 0.0, "skew": 0.0, "gram_t": 0.0, "skew_t": 0.0, "ratio": 0.0}
    for k in range(cfg["n_ops"]):
        n = int(rng.integers(1, cfg["dim_max"] + 1))
        F = random_symplectomorphism(n, seed=int(rng.integers(0, 2**31)))
        rep = preserves_omega(F)
        rt1, rt2 = transposed_identities(F)
        ratio_svd = norm_antiholomorphic_ratio(F)
        ratio_formula = antiholomorphic_ratio_formula(F)
        diff = abs(ratio_svd - ratio_formula)
        rows.append((k, n, rep.residual_gram, rep.residual_skew, rt1, rt2,
                     ratio_svd, ratio_formula, diff))
        worst["gram"] = max(worst["gram"], rep.residual_gram)
        worst["skew"] = max(worst["skew"], rep.residual_skew)
        worst["gram_t"] = max(worst["gram_t"], rt1)
        worst["skew_t"] = max(worst["skew_t"], rt2)
        worst["ratio"] = max(worst["ratio"], diff)
    write_csv(os.path.join(out, "symplectomorphisms.csv"),
              ("index", "dim", "res_gram", "res_skew", "res_gram_t", "res_skew_t",
               "ratio_svd", "ratio_formula", "ratio_diff"), rows)
    examples = []
    for n in cfg["example_sizes"]:
        c = 1.0 - 2.0 ** -np.arange(1, n + 1)
        acs = build_unit_norm_example(n, c)
        examples.append({
            "n": n,
            "tamed": bool(is_tamed(acs).tamed),
            "compatible": bool(is_compatible(acs)),
            "norm_A": opnorm(acs.A),
            "max_c": float(c.max()),
        })
    report = {
        "kind": "symplin-check",
        "config_sha256": config_digest(cfg),
        "worst_residuals": worst,
        "identity_pass": bool(max(worst["gram"], worst["skew"], worst["gram_t"],
                                  worst["skew_t"]) <= 1e-8 and worst["ratio"] <= 1e-8),
        "examples": examples,
    }
    write_json(os.path.join(out, "symplin-check.json"), report)
    return report


def run_opnorm_study(cfg, out, plots, threads=1):
    ops = {"S": beurling_S, "S1": op_S1, "S2": op_S2}
    if cfg["op"] not in ops:
        raise DomainError(f"unknown operator {cfg['op']!r}; choose from {sorted(ops)}")
    op = ops[cfg["op"]]
    p_list = cfg["p"] if isinstance(cfg["p"], list) else [cfg["p"]]
    nr_list = cfg["nr"] if isinstance(cfg["nr"], list) else [cfg["nr"]]
    rows = []
    for nr in nr_list:
        grid = DiscGrid(int(nr), int(cfg["nt"]) if not isinstance(cfg["nt"], list) else int(nr))
        rng = np.random.default_rng(cfg["seed"])
        fields = [random_test_field(grid, rng, cfg["dim"]) for _ in range(cfg["trials"])]

        def one(args):
            p, f = args
            return lp_norm(op(f), p) / lp_norm(f, p)

        for p in p_list:
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    ratios = list(pool.map(one, [(p, f) for f in fields]))
            else:
                ratios = [one((p, f)) for f in fields]
            rows.append((float(p), int(nr), float(np.max(ratios))))
            log.info("op=%s p=%g nr=%d estimate=%.6f", cfg["op"], p, nr, rows[-1][2])
    write_csv(os.path.join(out, "opnorm.csv"), ("p", "nr", "estimate"), rows)
    report = {"kind": "opnorm-study", "config_sha256": config_digest(cfg), "op": cfg["op"],
              "table": [{"p": r[0], "nr": r[1], "estimate": r[2]} for r in rows]}
    write_json(os.path.join(out, "opnorm-study.json"), report)
    if plots:
        series = []
        for nr in sorted({r[1] for r in rows}):
            sel = sorted((r[0], r[2]) for r in rows if r[1] == nr)
            series.append((f"nr={nr}", [s[0] for s in sel], [s[1] for s in sel]))
        line_plot(os.path.join(out, "opnorm.svg"), series,
                  title=f"empirical norm of {cfg['op']}", xlabel="p", ylabel="estimate")
    return report


def run_beltrami_solve(cfg, out, plots):
    grid = DiscGrid(int(cfg["nr"]), int(cfg["nt"]))
    a = _complex_of(cfg["a"])
    A = constant_structure([[a]])
    W = field_from_function(grid, lambda z: z)
    sol = solve_local(A, W, tol=cfg["tol"], max_iter=int(cfg["max_iter"]))
    save_field(os.path.join(out, "disc.field"), sol.Z)
    report = {
        "kind": "beltrami-solve",
        "config_sha256": config_digest(cfg),
        "a": a,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "residual_pde": sol.residual_pde,
        "history": sol.history,
        "max_ratio": max(sol.ratios) if sol.ratios else 0.0,
    }
    write_json(os.path.join(out, "beltrami-solve.json"), report)
    if plots:
        its = list(range(1, len(sol.history) + 1))
        line_plot(os.path.join(out, "convergence.svg"),
                  [("|dZ|", its, sol.history)], title="fixed-point convergence",
                  xlabel="iteration", ylabel="successive difference", logy=True)
    return report


def run_glue_cylinder(cfg, out, plots):
    dim = int(cfg["dim"])
    mat = np.zeros((dim, dim), dtype=complex)
    mat[0, 0] = _complex_of(cfg["a"])
    A = cylinder_structure(mat, cutoff=bool(cfg["cutoff"]))
    target = np.array([_complex_of(t) for t in cfg["target"]])
    problem = CylinderProblem(structure=A, target=target)
    grid = DiscGrid(int(cfg["nr"]), int(cfg["nt"]))
    sol = solve_cylinder(problem, grid, p=float(cfg["p"]), tol=float(cfg["tol"]))
    save_field(os.path.join(out, "disc.field"), sol.Z)
    report = {
        "kind": "glue-cylinder",
        "config_sha256": config_digest(cfg),
        "iterations": sol.iterations,
        "area": sol.area,
        "area_quadrature": sol.meta["area_quadrature"],
        "residual_boundary": sol.residual_boundary,
        "residual_pde": sol.residual_pde,
        "tau": complex(sol.meta["tau"]),
        "triangle_area": triangle_area_quadrature(triangle_map(grid)),
        "history": sol.history,
    }
    write_json(os.path.join(out, "glue-cylinder.json"), report)
    if plots and sol.history:
        its = list(range(1, len(sol.history) + 1))
        line_plot(os.path.join(out, "convergence.svg"), [("outer delta", its, sol.history)],
                  title="cylinder gluing", xlabel="outer iteration", ylabel="update size",
                  logy=True)
    return report


def run_glue_torus(cfg, out, plots):
    V = np.array([_complex_of(v) for v in cfg["V"]])
    amp_a, amp_b = float(cfg["amp_a"]), float(cfg["amp_b"])
    r = float(cfg["r"])

    def a_fn(z, w):
        return amp_a * w[:, 0] * np.exp(-np.abs(z) ** 2)

    def b_fn(z, w):
        return amp_b * w * z[:, None]

    problem = TorusProblem(a_fn=a_fn, b_fn=b_fn, r=r, n=int(cfg["n_wind"]), V=V,
                           a0=min(0.99, amp_a * (1.0 + r) + 0.05))
    grid = DiscGrid(int(cfg["nr"]), int(cfg["nt"]))
    sol = solve_torus(problem, grid, tol=float(cfg["tol"]))
    save_field(os.path.join(out, "disc.field"), sol.Z)
    report = {
        "kind": "glue-torus",
        "config_sha256": config_digest(cfg),
        "iterations": sol.iterations,
        "residual_moduli": list(sol.meta["res_moduli"]),
        "residual_pde": sol.residual_pde,
        "winding": sol.meta["winding"],
        "decay_constant": sol.meta["decay_constant"],
        "z_at_origin": complex(sol.meta["z_at_origin"]),
        "history": sol.history,
    }
    write_json(os.path.join(out, "glue-torus.json"), report)
    if plots and sol.history:
        its = list(range(1, len(sol.history) + 1))
        line_plot(os.path.join(out, "convergence.svg"), [("outer delta", its, sol.history)],
                  title="torus gluing", xlabel="outer iteration", ylabel="update size", logy=True)
    return report


def run_nonsqueeze(cfg, out, plots, threads=1):
    grid = DiscGrid(int(cfg["nr"]), int(cfg["nt"]))
    dim = int(cfg["dim"])
    name = cfg["phi"]
    if name == "identity":
        gen = identity_map(dim)
    elif name == "rotation":
        gen = unitary_rotation(dim, seed=int(cfg["seed"]))
    elif name == "hamiltonian":
        gen = hamiltonian_flow(dim, time=float(cfg["time"]), seed=int(cfg["seed"]))
    else:
        raise DomainError(f"unknown map {name!r}; choose identity, rotation or hamiltonian")
    rep = nonsqueezing_experiment(gen, grid, r=float(cfg["r"]), R=float(cfg["R"]),
                                  eps=float(cfg["eps"]), seed=int(cfg["seed"]))
    report = {"kind": "nonsqueeze", "config_sha256": config_digest(cfg), **rep.to_dict()}
    write_json(os.path.join(out, "nonsqueeze.json"), report)
    if plots:
        # area vs epsilon chain
        eps_list = [0.5 * cfg["eps"], cfg["eps"], 1.5 * cfg["eps"], 2.0 * cfg["eps"]]

        def one(e):
            rr = nonsqueezing_experiment(gen, grid, r=float(cfg["r"]), R=float(cfg["R"]),
                                         eps=float(e), seed=int(cfg["seed"]))
            return rr.projected_area, rr.lelong_lower_bound

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                vals = list(pool.map(one, eps_list))
        else:
            vals = [one(e) for e in eps_list]
        line_plot(os.path.join(out, "area-chain.svg"),
                  [("projected area", eps_list, [v[0] for v in vals]),
                   ("lower bound", eps_list, [v[1] for v in vals])],
                  title="area vs eps", xlabel="eps", ylabel="area")
    return report


def emit_plots(report_paths, out_dir):
    """Re-emit the SVG plots for existing JSON reports (dispatch on 'kind')."""
    made = []
    for path in report_paths:
        if not os.path.exists(path):
            raise DomainError(f"report {path} does not exist")
        with open(path, "r", encoding="utf-8") as fh:
            rep = json.load(fh)
        kind = rep.get("kind", "")
        base = os.path.join(out_dir, os.path.splitext(os.path.basename(path))[0])
        if kind == "opnorm-study":
            series = []
            for nr in sorted({row["nr"] for row in rep["table"]}):
                sel = sorted((row["p"], row["estimate"]) for row in rep["table"] if row["nr"] == nr)
                series.append((f"nr={nr}", [s[0] for s in sel], [s[1] for s in sel]))
            made.append(line_plot(base + ".svg", series, title=f"empirical norm of {rep['op']}",
                                  xlabel="p", ylabel="estimate"))
        elif kind in ("beltrami-solve", "glue-cylinder", "glue-torus") and rep.get("history"):
            its = list(range(1, len(rep["history"]) + 1))
            made.append(line_plot(base + ".svg", [("delta", its, rep["history"])],
                                  title=kind, xlabel="iteration", ylabel="update size", logy=True))
        elif kind == "nonsqueeze":
            made.append(line_plot(
                base + ".svg",
                [("areas", [1.0, 2.0, 3.0],
                  [rep["projected_area"], rep["pullback_area"], rep["disc_area"]])],
                title="area chain (projected, pulled back, disc)",
                xlabel="stage", ylabel="area"))
    return made


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _build_parser():
    ap = argparse.ArgumentParser(prog="holodisc",
                                 description="batch runner for the disc-gluing experiments")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="TOML config file")
    ap.add_argument("--out", help="output directory (default holodisc-out/<command>)")
    ap.add_argument("--seed", type=int, help="RNG seed override")
    ap.add_argument("--threads", type=int, default=1, help="worker pool size for independent solves")
    ap.add_argument("--dry-run", action="store_true", help="validate and print the plan only")
    ap.add_argument("--plots", action="store_true", help="emit SVG plots")
    ap.add_argument("--nr", type=int)
    ap.add_argument("--nt", type=int)
    ap.add_argument("--op", help="operator name for opnorm-study (S, S1, S2)")
    ap.add_argument("--p", action="append", type=float, help="exponent (repeatable)")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--dim", type=int)
    ap.add_argument("--r", type=float)
    ap.add_argument("--R", dest="R_big", type=float)
    ap.add_argument("--eps", type=float)
    ap.add_argument("--phi", help="map name for nonsqueeze (identity, rotation, hamiltonian)")
    ap.add_argument("--time", type=float, help="flow time for the hamiltonian map")
    ap.add_argument("--n-wind", type=int, help="winding for glue-torus")
    ap.add_argument("--a", type=float, help="structure amplitude for beltrami/cylinder")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="generic config override (TOML value syntax)")
    return ap


def resolve_config(args):
    cfg = dict(DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                loaded = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise DomainError(f"cannot read config {args.config}: {exc}") from exc
        for key, val in loaded.items():
            if key not in cfg:
                raise DomainError(f"unknown config key {key!r} for {args.command}")
            cfg[key] = val
    for key, attr in (("nr", "nr"), ("nt", "nt"), ("op", "op"), ("trials", "trials"),
                      ("dim", "dim"), ("r", "r"), ("R", "R_big"), ("eps", "eps"),
                      ("phi", "phi"), ("time", "time"), ("n_wind", "n_wind"),
                      ("a", "a"), ("seed", "seed")):
        val = getattr(args, attr, None)
        if val is not None and key in cfg:
            cfg[key] = val
    if args.p is not None and "p" in cfg:
        cfg["p"] = args.p if args.command == "opnorm-study" else args.p[0]
    for item in args.set:
        if "=" not in item:
            raise DomainError(f"--set needs KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        if key not in cfg:
            raise DomainError(f"unknown config key {key!r} for {args.command}")
        try:
            cfg[key] = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError as exc:
            raise DomainError(f"cannot parse --set {item!r}: {exc}") from exc
    for key, val in cfg.items():
        if isinstance(val, (int, float)) and not isinstance(val, bool):
            if key in ("nr", "nt", "trials", "dim", "n_ops", "dim_max", "n_wind", "max_iter") and val <= 0:
                raise DomainError(f"config {key} must be positive, got {val}")
    return cfg


def main(argv=None):
    level = os.environ.get("HOLODISC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (DomainError, ShapeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    out = args.out or os.path.join("holodisc-out", args.command)
    plan = {"command": args.command, "config": cfg, "out": out,
            "plots": bool(args.plots), "threads": args.threads}
    if args.dry_run:
        print(json.dumps(plan, sort_keys=True, indent=1, default=_json_default))
        return 0
    os.makedirs(out, exist_ok=True)
    start = time.perf_counter()
    try:
        if args.command == "symplin-check":
            run_symplin_check(cfg, out, args.plots)
        elif args.command == "opnorm-study":
            run_opnorm_study(cfg, out, args.plots, threads=args.threads)
        elif args.command == "beltrami-solve":
            run_beltrami_solve(cfg, out, args.plots)
        elif args.command == "glue-cylinder":
            run_glue_cylinder(cfg, out, args.plots)
        elif args.command == "glue-torus":
            run_glue_torus(cfg, out, args.plots)
        elif args.command == "nonsqueeze":
            run_nonsqueeze(cfg, out, args.plots, threads=args.threads)
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        _write_manifest(out, plan, start, status=2)
        return 2
    except (DomainError, ShapeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    _write_manifest(out, plan, start, status=0)
    return 0


def _write_manifest(out, plan, start, status):
    import scipy

    manifest = {
        **plan,
        "status": status,
        "versions": {"holodisc": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": time.perf_counter() - start,
    }
    write_json(os.path.join(out, "manifest.json"), manifest)


if __name__ == "__main__":
    sys.exit(main())
