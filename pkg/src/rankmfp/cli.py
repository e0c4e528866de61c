"""Command-line entry points: solve, verify, mms and sweep runs.

Exit codes: 0 success, 1 solver nonconvergence, 2 configuration error,
3 I/O error.  The number of worker threads can be fixed with --threads or
the MFP_THREADS environment variable; all computations are deterministic
for a fixed seed and thread count.
"""

from __future__ import annotations

import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from .config import RunConfig, build_problem, parse_run_config, with_overrides
from .errors import ConfigurationError, ConvergenceError, RankMfpError
from .exports import (
    density_field_csv,
    stage_report_dict,
    svg_heatmap,
    svg_slices,
    write_field_csv,
    write_report_json,
)
from .grid import node_resample
from .reconstruct import mfp_residuals, reconstruct_solution
from .solver import continuation, feasible_set, potential_from_differences, random_feasible
from .vi_operator import monotonicity_gap, monotonicity_tolerance, perspective_energy
from .verify import (
    Certificate,
    empirical_orders,
    mms_study,
    perspective_certificates,
    run_suite,
    lower_certificate,
)

EXIT_OK = 0
EXIT_NONCONVERGED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _resolve_threads(threads: int | None) -> int | None:
    if threads is not None:
        return threads
    env = os.environ.get("MFP_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(f"MFP_THREADS must be an integer, got {env!r}") from None
    return None


def _common_options(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="Path to the run configuration file.")(fn)
    fn = click.option("--out", "out_dir", default=None, type=click.Path(),
                      help="Output directory (overrides the config).")(fn)
    fn = click.option("--threads", default=None, type=int,
                      help="Worker thread cap; falls back to MFP_THREADS.")(fn)
    fn = click.option("--seed", default=None, type=int,
                      help="Seed for randomized sweeps (overrides the config).")(fn)
    fn = click.option("--quiet", is_flag=True, default=False,
                      help="Suppress progress output.")(fn)
    return fn


def _load(config_path, out_dir, threads, seed) -> tuple[RunConfig, Path, int | None]:
    cfg = parse_run_config(config_path)
    cfg = with_overrides(cfg, out_dir=out_dir, seed=seed)
    nthreads = _resolve_threads(threads)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out, nthreads


def _base_report(cfg: RunConfig, mode: str, threads: int | None) -> dict:
    report = {
        "mode": mode,
        "config": asdict(cfg),
        "threads": threads,
        "caveats": [],
    }
    for name, text in (("m0", cfg.m0), ("mT", cfg.mT)):
        if text.lower().startswith("csv:"):
            report["caveats"].append(
                f"{name} supplied as CSV: piecewise-linear density, below the C1 "
                "regularity of the classical theory"
            )
    return report


def _echo(quiet: bool, message: str) -> None:
    if not quiet:
        click.echo(message)


def _write_artifacts(out: Path, cfg: RunConfig, model, spec, bd, ref, result, report: dict,
                     quiet: bool) -> list[str]:
    artifacts = []
    sol = reconstruct_solution(model, ref, result.psi)
    res = mfp_residuals(model, sol, bd)
    report["residuals"] = {
        "hj_l1": res.hj_l1, "hj_linf": res.hj_linf,
        "ct_l1": res.ct_l1, "ct_linf": res.ct_linf,
        "masked_fraction": sol.masked_fraction,
    }
    if cfg.write_fields:
        write_field_csv(out / "phi.csv", spec, sol.phi.values)
        density_field_csv(out / "m.csv", sol.m)
        write_field_csv(out / "u.csv", spec, sol.u.values)
        artifacts += ["phi.csv", "m.csv", "u.csv"]
    svg_heatmap(out / "m_heatmap.svg", spec, sol.m.values, "density m")
    svg_heatmap(out / "u_heatmap.svg", spec, node_resample_cells(sol.u.values), "value u")
    svg_slices(out / "slices.svg", spec, sol.m)
    artifacts += ["m_heatmap.svg", "u_heatmap.svg", "slices.svg"]
    _echo(quiet, f"wrote {', '.join(artifacts)} to {out}")
    return artifacts


def node_resample_cells(node_values: np.ndarray) -> np.ndarray:
    """Average node values onto cells for plotting."""
    return 0.25 * (node_values[:-1, :-1] + node_values[:-1, 1:]
                   + node_values[1:, :-1] + node_values[1:, 1:])


def _finish(out: Path, report: dict, exit_code: int) -> None:
    try:
        write_report_json(out / "report.json", report)
    except OSError as exc:
        click.echo(f"error: cannot write report.json: {exc}", err=True)
        sys.exit(EXIT_IO)
    sys.exit(exit_code)


@click.group()
def main():
    """Rank-coupled mean-field planning solver and certification suite."""


@main.command()
@_common_options
def solve(config_path, out_dir, threads, seed, quiet):
    """Solve the planning problem and export fields, plots and a report."""
    try:
        cfg, out, nthreads = _load(config_path, out_dir, threads, seed)
        model, spec, bd, ref, op = build_problem(cfg)
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    report = _base_report(cfg, "solve", nthreads)
    start = time.perf_counter()
    try:
        result = continuation(op, schedule=cfg.eps_schedule, tol_per_stage=cfg.tol,
                              max_iter=cfg.max_iter)
    except ConvergenceError as exc:
        report.update({"converged": False, "partial": True, "error": str(exc)})
        click.echo(f"solver failed: {exc}", err=True)
        _finish(out, report, EXIT_NONCONVERGED)
    report["stages"] = [stage_report_dict(r) for r in result.stage_reports]
    report["converged"] = result.failed_stage is None
    report["partial"] = result.failed_stage is not None
    report["wall_time_ms"] = (time.perf_counter() - start) * 1e3
    if result.failed_stage is not None:
        report["failed_stage"] = result.failed_stage
        _echo(quiet, f"stage {result.failed_stage} failed to converge")
        try:
            report["artifacts"] = _write_artifacts(out, cfg, model, spec, bd, ref, result,
                                                   report, quiet)
        except RankMfpError as exc:
            report["artifacts"] = []
            report["artifact_error"] = str(exc)
        _finish(out, report, EXIT_NONCONVERGED)
    try:
        report["artifacts"] = _write_artifacts(out, cfg, model, spec, bd, ref, result,
                                               report, quiet)
    except OSError as exc:
        click.echo(f"I/O error while writing artifacts: {exc}", err=True)
        sys.exit(EXIT_IO)
    _echo(quiet, f"converged in {sum(s['iterations'] for s in report['stages'])} iterations "
                 f"across {len(report['stages'])} stages")
    _finish(out, report, EXIT_OK)


@main.command()
@_common_options
def verify(config_path, out_dir, threads, seed, quiet):
    """Run the certification battery and write report.json."""
    try:
        cfg, out, nthreads = _load(config_path, out_dir, threads, seed)
        build_problem(cfg)
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    report = _base_report(cfg, "verify", nthreads)
    certs = run_suite(cfg)
    report["certificates"] = [c.as_dict() for c in certs]
    passed = sum(1 for c in certs if c.passed)
    report["converged"] = all(c.passed for c in certs)
    for c in certs:
        _echo(quiet, f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: "
                     f"measured={c.measured:.6g} bound={c.bound:.6g}")
    _echo(quiet, f"{passed}/{len(certs)} certificates passed")
    _finish(out, report, EXIT_OK if report["converged"] else EXIT_NONCONVERGED)


@main.command()
@_common_options
def mms(config_path, out_dir, threads, seed, quiet):
    """Manufactured-solution refinement study."""
    try:
        cfg, out, nthreads = _load(config_path, out_dir, threads, seed)
        model, *_ = build_problem(cfg)
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    report = _base_report(cfg, "mms", nthreads)
    levels = mms_study(model, levels=cfg.mms_levels, T=cfg.T, alpha=cfg.mms_alpha, q=cfg.q)
    orders = empirical_orders([lv.psi_error_l1 for lv in levels])
    hj_orders = empirical_orders([lv.hj_l1 for lv in levels])
    ct_orders = empirical_orders([lv.ct_l1 for lv in levels])
    report["mms"] = {
        "levels": [lv.n for lv in levels],
        "psi_error_l1": [lv.psi_error_l1 for lv in levels],
        "hj_l1": [lv.hj_l1 for lv in levels],
        "ct_l1": [lv.ct_l1 for lv in levels],
        "duality_sup": [lv.duality_sup for lv in levels],
        "orders": orders,
        "hj_orders": hj_orders,
        "ct_orders": ct_orders,
    }
    ok = bool(orders and min(orders) >= 1.0)
    report["converged"] = ok
    for lv in levels:
        _echo(quiet, f"N={lv.n}: |psi err|_L1={lv.psi_error_l1:.4e} "
                     f"hj={lv.hj_l1:.4e} ct={lv.ct_l1:.4e}")
    _echo(quiet, f"empirical orders: {['%.2f' % o for o in orders]}")
    _finish(out, report, EXIT_OK if ok else EXIT_NONCONVERGED)


@main.command()
@_common_options
def sweep(config_path, out_dir, threads, seed, quiet):
    """Randomized property sweeps: monotonicity, convexity, subgradients."""
    try:
        cfg, out, nthreads = _load(config_path, out_dir, threads, seed)
        model, spec, bd, ref, op = build_problem(cfg)
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    report = _base_report(cfg, "sweep", nthreads)
    rng = np.random.default_rng(cfg.seed)
    fs = feasible_set(spec, ref)
    certs: list[Certificate] = []

    certs.extend(perspective_certificates(model, rng, samples=cfg.sweep_samples))
    worst = np.inf
    for _ in range(cfg.sweep_samples):
        w1 = potential_from_differences(spec, random_feasible(fs, rng, 2.0))
        w2 = potential_from_differences(spec, random_feasible(fs, rng, 2.0))
        worst = min(worst, monotonicity_gap(op, w1, w2) + monotonicity_tolerance(spec, w1, w2))
    certs.append(lower_certificate("sweep-monotonicity", float(worst), 0.0,
                                   details=f"{cfg.sweep_samples} random feasible pairs"))
    worst_conv = np.inf
    for _ in range(min(200, cfg.sweep_samples)):
        w1 = potential_from_differences(spec, random_feasible(fs, rng, 1.0))
        w2 = potential_from_differences(spec, random_feasible(fs, rng, 1.0))
        mid = perspective_energy(op, 0.5 * (w1 + w2))
        avg = 0.5 * perspective_energy(op, w1) + 0.5 * perspective_energy(op, w2)
        worst_conv = min(worst_conv, avg - mid + 1e-12 * (1.0 + abs(avg)))
    certs.append(lower_certificate("sweep-energy-convexity", float(worst_conv), 0.0,
                                   details="midpoint convexity of the perspective energy"))

    report["certificates"] = [c.as_dict() for c in certs]
    report["converged"] = all(c.passed for c in certs)
    for c in certs:
        _echo(quiet, f"[{'PASS' if c.passed else 'FAIL'}] {c.name}")
    _finish(out, report, EXIT_OK if report["converged"] else EXIT_NONCONVERGED)


if __name__ == "__main__":
    main()
