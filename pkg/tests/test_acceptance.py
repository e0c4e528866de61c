"""Acceptance criteria, one test per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL
line per criterion.  Shared expensive solves live in module-scoped
fixtures; every tolerance below is pinned, not calibrated.
"""

import copy
import json
import time

import numpy as np
import pytest

from rankmfp.grid import (
    BoundaryDensities,
    GridSpec,
    build_reference_potential,
)
from rankmfp.hamiltonians import (
    HamiltonianModel,
    check_subgradient,
    eval_hamiltonian,
    legendre_lagrangian,
    perspective,
)
from rankmfp.solver import (
    DEFAULT_SCHEDULE,
    continuation,
    feasible_set,
    potential_from_differences,
    random_feasible,
    solve_vi,
)
from rankmfp.vi_operator import (
    OperatorConfig,
    apply_operator,
    field_norm,
    monotonicity_gap,
    pairing_gradient,
    perspective_energy,
)
from rankmfp.verify import (
    empirical_orders,
    minty_certificate,
    mms_study,
    random_test_function,
    trace_scaling_diagnostic,
)

QUAD = HamiltonianModel.quadratic()


def report(number, name, passed, detail, elapsed):
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number:02d} {name}: {status} ({detail}; {elapsed:.2f} s)")
    assert passed, f"criterion {number} ({name}): {detail}"


@pytest.fixture(scope="module")
def baseline_problem():
    spec = GridSpec(T=1.0, Nt=32, Nx=32)
    bd = BoundaryDensities.from_specs(spec, "uniform", "uniform")
    ref = build_reference_potential(spec, bd)
    return spec, bd, ref


@pytest.fixture(scope="module")
def baseline_solve(baseline_problem):
    spec, bd, ref = baseline_problem
    cfg = OperatorConfig(model=QUAD, ref=ref, q=3.0, eps=0.05)
    start = time.perf_counter()
    psi, rep = solve_vi(cfg, tol=1e-7, max_iter=200_000)
    elapsed = time.perf_counter() - start
    return cfg, psi, rep, elapsed


@pytest.fixture(scope="module")
def baseline_continuation(baseline_problem):
    spec, bd, ref = baseline_problem
    cfg = OperatorConfig(model=QUAD, ref=ref, q=3.0, eps=DEFAULT_SCHEDULE[0])
    result = continuation(cfg, schedule=DEFAULT_SCHEDULE, tol_per_stage=1e-7,
                          max_iter=200_000)
    assert result.failed_stage is None
    return cfg, result


@pytest.fixture(scope="module")
def mms_levels():
    return mms_study(QUAD, levels=(16, 32, 64), T=1.0, alpha=0.1)


def test_01_duality_identity_suite():
    start = time.perf_counter()
    worst_rt, worst_id = 0.0, 0.0
    v = np.linspace(-10.0, 10.0, 200)
    for model in (QUAD, HamiltonianModel.power_law(1.5), HamiltonianModel.power_law(3.0)):
        for x in (0.0, 0.5, 1.0):
            le = legendre_lagrangian(model, x, v)
            h, dph = eval_hamiltonian(model, x, -np.asarray(le.DvL))
            worst_rt = max(worst_rt, float(np.max(np.abs(dph + v))))
            worst_id = max(worst_id, float(np.max(np.abs(h - (v * le.DvL - le.L)))))
    elapsed = time.perf_counter() - start
    passed = worst_rt <= 1e-8 and worst_id <= 1e-8 and elapsed < 1.0
    report(1, "duality-identities", passed,
           f"roundtrip {worst_rt:.2e} <= 1e-8, identity {worst_id:.2e} <= 1e-8", elapsed)


def test_02_perspective_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(12)
    j = rng.uniform(-3.0, 3.0, 1000)
    m = rng.uniform(0.1, 4.0, 1000)
    x = rng.uniform(0.0, 1.0, 1000)
    worst_deriv = 0.0
    worst_hom = 0.0
    worst_slack = np.inf
    for model in (QUAD, HamiltonianModel.power_law(3.0)):
        pe = perspective(model, x, j, m)
        step = 1e-6 * np.maximum(1.0, np.abs(j) + m)
        fj_fd = (perspective(model, x, j + step, m).F
                 - perspective(model, x, j - step, m).F) / (2 * step)
        fm_fd = (perspective(model, x, j, m + step).F
                 - perspective(model, x, j, m - step).F) / (2 * step)
        denom = 1.0 + np.abs(pe.Fj) + np.abs(pe.Fm)
        worst_deriv = max(worst_deriv,
                          float(np.max(np.abs(pe.Fj - fj_fd) / denom)),
                          float(np.max(np.abs(pe.Fm - fm_fd) / denom)))
        lam = rng.uniform(0.25, 4.0, 1000)
        hom = perspective(model, x, lam * j, lam * m)
        worst_hom = max(worst_hom,
                        float(np.max(np.abs(hom.F - lam * pe.F) / (1.0 + lam * np.abs(pe.F)))))
        j0 = rng.uniform(-3.0, 3.0, 1000)
        m0 = rng.uniform(0.1, 4.0, 1000)
        worst_slack = min(worst_slack,
                          float(np.min(check_subgradient(model, x, j, m, j0, m0))))
    elapsed = time.perf_counter() - start
    passed = (worst_deriv <= 1e-5 and worst_hom <= 1e-12
              and worst_slack >= -1e-12 and elapsed < 5.0)
    report(2, "perspective-identities", passed,
           f"deriv {worst_deriv:.2e} <= 1e-5, hom {worst_hom:.2e} <= 1e-12, "
           f"slack {worst_slack:.2e} >= -1e-12", elapsed)


def test_03_operator_monotonicity():
    start = time.perf_counter()
    spec = GridSpec(T=1.0, Nt=8, Nx=8)
    bd = BoundaryDensities.from_specs(spec, "uniform", "sin-bump(0.3)")
    ref = build_reference_potential(spec, bd)
    cfg = OperatorConfig(model=QUAD, ref=ref, q=3.0, eps=0.1)
    fs = feasible_set(spec, ref)
    rng = np.random.default_rng(13)
    failures = 0
    worst = np.inf
    for _ in range(1000):
        w1 = potential_from_differences(spec, random_feasible(fs, rng, 2.0))
        w2 = potential_from_differences(spec, random_feasible(fs, rng, 2.0))
        gap = monotonicity_gap(cfg, w1, w2)
        scale = (1.0 + field_norm(spec, w1) + field_norm(spec, w2)) ** 2
        worst = min(worst, gap / scale)
        if gap < -1e-10 * scale:
            failures += 1
    elapsed = time.perf_counter() - start
    passed = failures == 0 and elapsed < 30.0
    report(3, "operator-monotonicity", passed,
           f"0 failures required, got {failures}; min scaled gap {worst:.2e}", elapsed)


def test_04_gradient_structure():
    start = time.perf_counter()
    spec = GridSpec(T=1.0, Nt=8, Nx=8)
    bd = BoundaryDensities.from_specs(spec, "gauss(0.5,0.25)", "uniform")
    ref = build_reference_potential(spec, bd)
    cfg = OperatorConfig(model=QUAD, ref=ref, q=3.0, eps=0.15)
    fs = feasible_set(spec, ref)
    rng = np.random.default_rng(14)
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        w = potential_from_differences(spec, random_feasible(fs, rng, 1.0))
        z = np.zeros_like(w)
        z[1:-1, 1:-1] = 0.1 * rng.normal(size=(spec.Nt - 1, spec.Nx - 1))
        pb = apply_operator(cfg, w, z)
        pairing = pb.perspective + pb.regularizer
        fd = (perspective_energy(cfg, w + h * z) - perspective_energy(cfg, w - h * z)) / (2 * h)
        worst = max(worst, abs(pairing - fd) / (1.0 + abs(pairing)))
    elapsed = time.perf_counter() - start
    passed = worst <= 1e-5
    report(4, "gradient-structure", passed, f"max relative gap {worst:.2e} <= 1e-5", elapsed)


def test_05_regularized_vi_solve(baseline_solve, baseline_problem):
    spec, bd, ref = baseline_problem
    cfg, psi, rep, solve_time = baseline_solve
    start = time.perf_counter()
    rng = np.random.default_rng(15)
    fs = feasible_set(spec, ref)
    grad = pairing_gradient(cfg, psi)
    worst = np.inf
    for _ in range(100):
        w = potential_from_differences(spec, random_feasible(fs, rng, 2.0))
        gap = float(np.sum(grad[1:-1, 1:-1] * (w - psi.values)[1:-1, 1:-1]))
        scale = 1.0 + field_norm(spec, w)
        worst = min(worst, gap / scale)
    elapsed = solve_time + (time.perf_counter() - start)
    passed = (rep.converged and rep.final_residual <= 1e-7
              and rep.iterations <= 200_000 and worst >= -1e-5 and solve_time < 300.0)
    report(5, "regularized-vi-solve", passed,
           f"residual {rep.final_residual:.2e} in {rep.iterations} iters, "
           f"min scaled VI gap {worst:.2e} >= -1e-5", elapsed)


def test_06_uniqueness_proxy(baseline_solve, baseline_problem):
    spec, bd, ref = baseline_problem
    cfg, psi_zero, rep, _ = baseline_solve
    start = time.perf_counter()
    tol = 1e-7
    rng = np.random.default_rng(16)
    fs = feasible_set(spec, ref)
    psi_rand, rep_rand = solve_vi(cfg, init=random_feasible(fs, rng, 2.0),
                                  tol=tol, max_iter=200_000)
    l1 = float(np.sum(np.abs(psi_zero.values - psi_rand.values)) * spec.cell_measure)
    elapsed = time.perf_counter() - start
    passed = rep_rand.converged and l1 <= 10 * tol
    report(6, "uniqueness-two-start", passed, f"L1 distance {l1:.2e} <= {10 * tol:.0e}", elapsed)


def test_07_apriori_estimates(baseline_continuation, baseline_problem):
    spec, bd, ref = baseline_problem
    cfg, result = baseline_continuation
    start = time.perf_counter()
    energies = np.array([r.kappa_energy for r in result.stage_reports])
    uniform_ok = float(np.max(energies)) <= 2.0 * float(np.median(energies))
    mass_ok = max(r.row_mass_error for r in result.stage_reports) <= 1e-10
    slope_ok = max(r.psi_x_l1 for r in result.stage_reports) <= 2.0 * spec.T
    elapsed = time.perf_counter() - start
    passed = uniform_ok and mass_ok and slope_ok
    report(7, "apriori-estimates", passed,
           f"kappa max {np.max(energies):.3e} <= 2x median {2 * np.median(energies):.3e}, "
           f"|psi_x| {max(r.psi_x_l1 for r in result.stage_reports):.3e} <= {2 * spec.T}, "
           f"row mass err {max(r.row_mass_error for r in result.stage_reports):.1e} <= 1e-10",
           elapsed)


def test_08_mms_convergence(mms_levels):
    start = time.perf_counter()
    psi_orders = empirical_orders([lv.psi_error_l1 for lv in mms_levels])
    hj_orders = empirical_orders([lv.hj_l1 for lv in mms_levels])
    ct_orders = empirical_orders([lv.ct_l1 for lv in mms_levels])
    elapsed = time.perf_counter() - start
    passed = (min(psi_orders) >= 1.0 and min(hj_orders) >= 1.0 and min(ct_orders) >= 1.0)
    report(8, "mms-convergence", passed,
           f"orders psi {['%.2f' % o for o in psi_orders]}, "
           f"hj {['%.2f' % o for o in hj_orders]}, ct {['%.2f' % o for o in ct_orders]}, "
           f"all >= 1", elapsed)


def test_09_linking_lemma_consistency(mms_levels):
    start = time.perf_counter()
    worst = max(lv.duality_sup for lv in mms_levels)
    elapsed = time.perf_counter() - start
    passed = worst <= 1e-4
    report(9, "linking-lemma-duality", passed,
           f"sup |D_pH(u_x) - flux/m| = {worst:.2e} <= 1e-4 across levels", elapsed)


def test_10_minty_certificates(baseline_continuation, baseline_problem):
    spec, bd, ref = baseline_problem
    cfg, result = baseline_continuation
    start = time.perf_counter()
    rng = np.random.default_rng(17)
    worst = np.inf
    all_pass = True
    for _ in range(20):
        eta = random_test_function(ref, rng)
        cert = minty_certificate(QUAD, ref, result.psi, eta, tol_scale=1e-5)
        worst = min(worst, cert.measured)
        all_pass = all_pass and cert.passed
    elapsed = time.perf_counter() - start
    report(10, "minty-weak-solution", all_pass,
           f"20 random admissible test functions, min value {worst:.2e}", elapsed)


def test_11_trace_attainment():
    start = time.perf_counter()
    spec = GridSpec(T=1.0, Nt=32, Nx=32)
    bd = BoundaryDensities.from_specs(spec, "uniform", "sin-bump(0.5)")
    ref = build_reference_potential(spec, bd)
    cfg = OperatorConfig(model=QUAD, ref=ref, q=3.0, eps=0.05)
    psi, rep = solve_vi(cfg, tol=1e-7, max_iter=200_000)
    cert = trace_scaling_diagnostic(psi, ref, kappa=QUAD.kappa)
    elapsed = time.perf_counter() - start
    target = (QUAD.kappa - 1.0) / QUAD.kappa - 0.15
    passed = rep.converged and cert.passed and "inconclusive" not in cert.details
    report(11, "trace-attainment-scaling", passed,
           f"fitted slope {cert.measured:.3f} >= {target:.2f}", elapsed)


def test_12_determinism(tmp_path):
    from click.testing import CliRunner
    from rankmfp.cli import main

    start = time.perf_counter()
    config = tmp_path / "det.cfg"
    config.write_text(
        "[problem]\nt = 1.0\nnt = 10\nnx = 10\nm0 = uniform\nmt = sin-bump(0.3)\n\n"
        "[operator]\neps_schedule = 0.2, 0.1\n\n"
        "[solver]\ntol = 1e-7\nmax_iter = 60000\n\n"
        "[verify]\nseed = 42\nminty_samples = 3\nmonotonicity_samples = 15\n\n"
        "[mms]\nlevels =\n"
    )
    reports = []
    out = tmp_path / "det-out"
    for _ in range(2):
        res = CliRunner().invoke(
            main, ["verify", "--config", str(config), "--out", str(out),
                   "--seed", "42", "--threads", "1", "--quiet"],
            catch_exceptions=False,
        )
        assert res.exit_code == 0, res.output
        data = json.loads((out / "report.json").read_text())
        data = copy.deepcopy(data)
        data.pop("wall_time_ms", None)
        for cert in data.get("certificates", []):
            cert.pop("wall_time_ms", None)
        reports.append(data)
    elapsed = time.perf_counter() - start
    passed = reports[0] == reports[1]
    report(12, "determinism", passed,
           "identical report.json across two seeded runs (timings excluded)", elapsed)
