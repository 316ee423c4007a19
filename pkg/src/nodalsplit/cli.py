"""Command-line entry point: nodalsplit <analyze|solve|sweep|figures|verify> --config PATH."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import nodal, output
from .analysis import analyze_branch, analyze_modes
from .boundary import InadmissibleShapeError, check_admissible, rescale_to_admissible
from .config import COMMANDS, MAX_NODES, ConfigError, RunConfig, load_config, resolve_jobs
from .grid import GridSpec
from .hadamard import hadamard_variation, limit_fields, predict_nodal
from .rectangle import DomainSpec
from .solver import assemble, auto_grid, solve_branches

log = logging.getLogger("nodalsplit")

ANALYSIS_COLUMNS = ["k", "Z", "a", "b", "c", "mu_dot", "gamma_dot", "c1", "c2", "y_bar", "m_k", "count_v", "count_w"]
SWEEP_COLUMNS = ["eta", "k", "domain_count", "gap", "min_curve_gap", "max_angle_error_deg",
                 "mu", "gamma", "count_w", "a1", "a2", "nx", "ny", "status"]
MODE_COLUMNS = ["j", "v_j_at_0", "predicted_v_j_at_0", "mu_j"]
CURVE_COLUMNS = ["curve_id", "x", "y"]
EXACT_ROWS = 256
A_REFERENCE_FACTOR = 1e-3


def _tag(k: int, eta: float) -> str:
    return f"k{k}_eta{eta:.6g}"


def checked_phi(cfg: RunConfig):
    """The configured boundary function, rescaled (with a warning) if only its size is wrong."""
    report = check_admissible(cfg.phi)
    if report.admissible:
        return cfg.phi, report
    try:
        phi = rescale_to_admissible(cfg.phi)
    except InadmissibleShapeError as exc:
        raise InadmissibleShapeError(f"{exc}; report: {report.to_dict()}") from None
    log.warning("phi is not admissible (%s); rescaled to Z = %.12g", "; ".join(report.reasons()), phi.scale)
    return phi, check_admissible(phi)


def grid_for(cfg: RunConfig, spec: DomainSpec) -> GridSpec:
    if cfg.grid == "auto":
        positive = [e for e in cfg.eta_list if e > 0]
        return auto_grid(spec, min(positive) if positive else 0.0)
    return GridSpec(cfg.grid["nx"], cfg.grid["ny"], spec.N)


def _outline(spec: DomainSpec, phi):
    return output.domain_outline(spec.N, lambda y: -spec.eta * phi(y))


def _curve_rows(curves) -> list:
    rows = []
    for cid, c in enumerate(curves):
        rows.extend({"curve_id": cid, "x": x, "y": y} for x, y in c.points)
    return rows


def _hyperbola_overlay(fit, half: float, n: int = 60) -> list:
    """Two branches of (x - xc)(y - yc) = d drawn inside a box of half-width `half`."""
    m = fit.model
    xc, yc = m.center
    d = m.d
    if d == 0:
        return []
    out = []
    for sgn in (1.0, -1.0):
        t = np.geomspace(abs(d) / half, half, n)
        xs = xc + sgn * t
        ys = yc + d / (sgn * t)
        keep = np.abs(ys - yc) <= half
        if keep.sum() > 1:
            out.append(np.column_stack([xs[keep], ys[keep]]))
    return out


# --- analyze ---------------------------------------------------------------

def run_analyze(cfg: RunConfig, out: Path) -> int:
    h = cfg.digest()
    phi, _ = checked_phi(cfg)
    rows = []
    for k in cfg.k_list:
        spec = DomainSpec(k)
        pred = predict_nodal(spec, phi, flood_rows=cfg.flood_rows)
        var = hadamard_variation(phi, k)
        d = var.d_matrix
        rows.append({"k": k, "Z": phi.scale, "a": d[0, 0], "b": d[0, 1], "c": d[1, 1],
                     "mu_dot": var.mu_dot, "gamma_dot": var.gamma_dot, "c1": var.c_pair[0],
                     "c2": var.c_pair[1], "y_bar": pred.y_bar, "m_k": pred.m_k,
                     "count_v": pred.domain_count_v, "count_w": pred.domain_count_w})
        grid = GridSpec.square_cells(EXACT_ROWS, spec.N)
        v0, w0 = limit_fields(spec, var.c_pair, grid)
        for name, fld in (("v0", v0), ("w0", w0)):
            curves = nodal.marching_squares(fld, grid)
            output.write_svg(out / f"exact_k{k}_{name}.svg", _outline(spec, phi), curves, h,
                             title=f"{name}, k = {k}")
    output.write_csv(out / "analysis.csv", ANALYSIS_COLUMNS, rows, h)
    log.info("wrote %s", out / "analysis.csv")
    return 0


# --- per-(k, eta) work -------------------------------------------------------

def _solve_row(args) -> dict:
    """Solve and measure one (k, eta); errors are returned, not raised."""
    cfg, phi, k, eta, want_fields, modes_only = args
    row = {"eta": eta, "k": k, "status": "ok"}
    try:
        spec = DomainSpec(k, eta)
        grid = grid_for(cfg, spec)
        row.update(nx=grid.nx, ny=grid.ny)
        if grid.nx * grid.ny > MAX_NODES:
            raise MemoryError(f"grid {grid.nx}x{grid.ny} exceeds the {MAX_NODES:.0e}-node guard")
        op = assemble(spec, phi, grid)
        var = hadamard_variation(phi, k, require_admissible=eta > 0)
        upper, lower = solve_branches(spec, phi, grid, cfg.subspace_dim, cfg.eta_max, op=op)
        row.update(mu=upper.value, gamma=lower.value)
        modes = analyze_modes(upper, op, var)
        row.update(a1=modes.summary.a1, a2=modes.summary.a2)
        row["mode_rows"] = [{"j": r.j, "v_j_at_0": r.measured, "predicted_v_j_at_0": r.predicted,
                             "mu_j": r.mu_j} for r in modes.rows]
        if eta <= 0 or modes_only:
            return row
        va = analyze_branch(upper, op, var, max_patch_nodes=MAX_NODES if cfg.refine else 0)
        wa = analyze_branch(lower, op, var)
        row.update(domain_count=va.domain_count, gap=va.gap if va.fit else None,
                   min_curve_gap=va.min_curve_gap, max_angle_error_deg=va.max_angle_error,
                   count_w=wa.domain_count)
        if va.fit is not None and not va.fit.resolvable:
            row["status"] = "gap-unresolvable"
        if va.notes:
            row["notes"] = "; ".join(va.notes)
        if want_fields:
            row["fields"] = {"upper": upper.field, "lower": lower.field}
            row["curves"] = {"upper": va.curves, "lower": wa.curves}
            row["fit"] = va.fit
            row["outline"] = _outline(spec, phi)
    except Exception as exc:  # one bad row must not stop a sweep
        log.warning("row k=%s eta=%s failed: %s", k, eta, exc)
        row["status"] = f"error: {type(exc).__name__}: {exc}".replace(",", ";")
    return row


def _run_rows(cfg: RunConfig, phi, pairs, jobs: int, want_fields: bool, modes_only=()) -> list:
    tasks = [(cfg, phi, k, eta, want_fields, (k, eta) in modes_only) for k, eta in pairs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            rows = list(pool.map(_solve_row, tasks))
    else:
        rows = [_solve_row(t) for t in tasks]
    return sorted(rows, key=lambda r: (r["k"], r["eta"]))


# --- solve -----------------------------------------------------------------

def run_solve(cfg: RunConfig, out: Path, jobs: int) -> int:
    h = cfg.digest()
    phi, _ = checked_phi(cfg)
    pairs = [(k, e) for k in cfg.k_list for e in cfg.eta_list]
    if not pairs:
        log.warning("eta_list is empty; nothing to solve")
        return 0
    rows = _run_rows(cfg, phi, pairs, jobs, want_fields=True)
    eig = []
    for r in rows:
        tag = _tag(r["k"], r["eta"])
        if r["status"].startswith("error"):
            eig.append({"k": r["k"], "eta": r["eta"], "branch": "", "value": None, "status": r["status"]})
            continue
        eig.append({"k": r["k"], "eta": r["eta"], "branch": "upper", "value": r["mu"], "status": r["status"]})
        eig.append({"k": r["k"], "eta": r["eta"], "branch": "lower", "value": r["gamma"], "status": r["status"]})
        output.write_csv(out / f"modes_{tag}.csv", MODE_COLUMNS, r["mode_rows"], h)
        for b, fld in r.get("fields", {}).items():
            output.dump_field(out / f"field_{tag}_{b}.nspl", fld, r["k"], r["eta"])
            output.write_csv(out / f"curves_{tag}_{b}.csv", CURVE_COLUMNS, _curve_rows(r["curves"][b]), h)
    output.write_csv(out / "eigenvalues.csv", ["k", "eta", "branch", "value", "status"], eig, h)
    return 0 if all(not r["status"].startswith("error") for r in rows) else 1


# --- sweep -----------------------------------------------------------------

def _slope(x, y):
    pts = [(a, b) for a, b in zip(x, y) if b is not None and a > 0 and np.isfinite(b) and b > 0]
    if len(pts) < 2:
        return None
    xs, ys = zip(*pts)
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def sweep_rates(rows, references) -> dict:
    by_k = {}
    for k in sorted({r["k"] for r in rows}):
        rs = [r for r in rows if r["k"] == k and r["status"] in ("ok", "gap-unresolvable") and r["eta"] > 0]
        etas = [r["eta"] for r in rs]
        split = [r["mu"] - r["gamma"] for r in rs]
        gaps = [r.get("gap") if r["status"] == "ok" else None for r in rs]
        ref = references.get(k)
        entry = {"slope_split": _slope(etas, split), "slope_gap": _slope(etas, gaps),
                 "slope_a1_dev": None, "slope_a2_dev": None}
        if ref is not None and ref.get("a1") is not None:
            entry["slope_a1_dev"] = _slope(etas, [abs(r["a1"] - ref["a1"]) for r in rs])
            entry["slope_a2_dev"] = _slope(etas, [abs(r["a2"] - ref["a2"]) for r in rs])
            entry["reference_eta"] = ref["eta"]
        by_k[str(k)] = entry
    first = by_k[next(iter(by_k))] if by_k else {}
    return {"slope_split": first.get("slope_split"), "slope_gap": first.get("slope_gap"),
            "slope_a_dev": first.get("slope_a1_dev"), "by_k": by_k}


def run_sweep(cfg: RunConfig, out: Path, jobs: int) -> int:
    h = cfg.digest()
    phi, _ = checked_phi(cfg)
    if not cfg.eta_list:
        log.warning("eta_list is empty; sweep is a no-op")
        return 0
    pairs = [(k, e) for k in cfg.k_list for e in sorted(set(cfg.eta_list))]
    positive = [e for e in cfg.eta_list if e > 0]
    refs = [(k, min(positive) * A_REFERENCE_FACTOR) for k in cfg.k_list] if len(positive) >= 2 else []
    rows = _run_rows(cfg, phi, pairs + refs, jobs, want_fields=False, modes_only=set(refs))
    ref_etas = {e for _, e in refs}
    references = {r["k"]: r for r in rows if r["eta"] in ref_etas and (r["k"], r["eta"]) in refs}
    rows = [r for r in rows if (r["k"], r["eta"]) not in refs]
    output.write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows, h)
    output.write_json(out / "rates.json", sweep_rates(rows, references), h)
    failed = [r for r in rows if r["status"].startswith("error")]
    for r in failed:
        log.error("k=%s eta=%s: %s", r["k"], r["eta"], r["status"])
    return 0 if not failed else 1


# --- figures ---------------------------------------------------------------

def run_figures(cfg: RunConfig, out: Path, jobs: int) -> int:
    code = run_analyze(cfg, out)
    h = cfg.digest()
    phi, _ = checked_phi(cfg)
    pairs = [(k, e) for k in cfg.k_list for e in cfg.eta_list if e > 0]
    rows = _run_rows(cfg, phi, pairs, jobs, want_fields=True)
    for r in rows:
        if r["status"].startswith("error"):
            code = 1
            continue
        tag = _tag(r["k"], r["eta"])
        for b in ("upper", "lower"):
            overlay = None
            if b == "upper" and r.get("fit") is not None:
                overlay = _hyperbola_overlay(r["fit"], 0.25)
            output.write_svg(out / f"computed_{tag}_{b}.svg", r["outline"], r["curves"][b], h,
                             title=f"{b} branch, k = {r['k']}, eta = {r['eta']:.6g}", overlay=overlay)
    return code


# --- verify ----------------------------------------------------------------

def run_verify(cfg: RunConfig, out: Path) -> int:
    from . import verify

    ny = None if cfg.grid == "auto" else cfg.grid["ny"]
    results = verify.run_all(seed=cfg.seed, ny=ny, refine=cfg.refine, log=print)
    report = {"criteria": [r.to_dict() for r in results],
              "passed": sum(r.passed is True for r in results),
              "failed": sum(r.passed is False for r in results),
              "skipped": sum(r.passed is None for r in results)}
    output.write_json(out / "verify_report.json", report, cfg.digest())
    return 0 if report["failed"] == 0 else 1


# --- entry -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nodalsplit", description=__doc__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--jobs", type=int, help="worker processes (NODALSPLIT_JOBS wins)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        jobs = resolve_jobs(args.jobs, cfg.jobs)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if cfg.command != args.command:
        log.info("config says %r; running %r", cfg.command, args.command)
    cfg = cfg.with_overrides(output_dir=args.out, command=args.command)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t = time.perf_counter()
    try:
        if args.command == "analyze":
            code = run_analyze(cfg, out)
        elif args.command == "solve":
            code = run_solve(cfg, out, jobs)
        elif args.command == "sweep":
            code = run_sweep(cfg, out, jobs)
        elif args.command == "figures":
            code = run_figures(cfg, out, jobs)
        else:
            code = run_verify(cfg, out)
    except InadmissibleShapeError as exc:
        print(f"inadmissible boundary function: {exc}", file=sys.stderr)
        return 3
    log.info("%s finished in %.1f s", args.command, time.perf_counter() - t)
    return code


if __name__ == "__main__":
    sys.exit(main())
