"""Certification suite: duality identities, operator structure, solution checks.

Every check is packaged as a Certificate carrying the measured quantity,
the bound it is held against, and a pass flag.  Upper-bound certificates
pass when measured <= bound, lower-bound ones when measured >= bound.
The full battery is orchestrated by run_suite, which never aborts midway:
individual failures (including raised exceptions) become failed
certificates in the aggregated report.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    InvalidManufacturedSolutionError,
    InvalidTestFunctionError,
)
from .grid import (
    BoundaryDensities,
    CellField,
    GridSpec,
    NodeField,
    ReferencePotential,
    build_reference_potential,
    cell_average_values,
    cell_gradient_values,
)
from .hamiltonians import (
    HamiltonianModel,
    eval_hamiltonian,
    lagrangian_value_deriv,
    legendre_lagrangian,
    perspective,
)
from .reconstruct import duality_gap, mfp_residuals, reconstruct_solution
from .solver import (
    continuation,
    feasible_set,
    potential_from_differences,
    random_feasible,
    solve_vi,
)
from .vi_operator import (
    OperatorConfig,
    apply_operator,
    field_norm,
    monotonicity_gap,
    monotonicity_tolerance,
    pairing_gradient,
    perspective_energy,
    source_gradient,
)


@dataclass(frozen=True)
class Certificate:
    """One named check: measured value against a bound."""

    name: str
    passed: bool
    measured: float
    bound: float
    details: str = ""
    wall_time_ms: float = 0.0

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": float(self.measured),
            "bound": float(self.bound),
            "details": self.details,
            "wall_time_ms": float(self.wall_time_ms),
        }


def upper_certificate(name, measured, bound, details="", wall_time_ms=0.0) -> Certificate:
    return Certificate(name, bool(measured <= bound), float(measured), float(bound),
                       details, wall_time_ms)


def lower_certificate(name, measured, bound, details="", wall_time_ms=0.0) -> Certificate:
    details = ("lower-bound check; " + details).strip().rstrip(";")
    return Certificate(name, bool(measured >= bound), float(measured), float(bound),
                       details, wall_time_ms)


def _timed(fn: Callable[[], Certificate]) -> Certificate:
    start = time.perf_counter()
    try:
        cert = fn()
    except Exception as exc:  # individual failures never abort the suite
        elapsed = (time.perf_counter() - start) * 1e3
        return Certificate(
            name=getattr(fn, "__name__", "check"), passed=False,
            measured=float("nan"), bound=float("nan"),
            details=f"raised {type(exc).__name__}: {exc}", wall_time_ms=elapsed,
        )
    elapsed = (time.perf_counter() - start) * 1e3
    return Certificate(cert.name, cert.passed, cert.measured, cert.bound,
                       cert.details, elapsed)


# -- admissible test functions ------------------------------------------------

FAMILY_POLYNOMIAL = "polynomial-bump"
FAMILY_FOURIER = "fourier-bump"


@dataclass(frozen=True)
class TestFunctionSpec:
    """Bump coefficients added to the reference potential.

    The realized test function equals the reference potential on the
    boundary exactly and keeps a strictly positive spatial cell derivative;
    the bump amplitude is shrunk as needed to guarantee it.
    """

    __test__ = False        # keep pytest from collecting this as a test class

    family: str
    coefficients: np.ndarray
    margin: float = 0.1

    def __post_init__(self):
        if self.family not in (FAMILY_POLYNOMIAL, FAMILY_FOURIER):
            raise InvalidTestFunctionError(f"unknown test-function family {self.family!r}")
        coeffs = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if not np.all(np.isfinite(coeffs)):
            raise InvalidTestFunctionError("coefficients must be finite")
        if not 0.0 < self.margin < 1.0:
            raise InvalidTestFunctionError("margin must lie in (0, 1)")
        object.__setattr__(self, "coefficients", coeffs)


def _bump_values(spec: GridSpec, tf: TestFunctionSpec) -> np.ndarray:
    tt, xx = np.meshgrid(spec.t_nodes(), spec.x_nodes(), indexing="ij")
    bump = np.zeros_like(tt)
    rows, cols = tf.coefficients.shape
    if tf.family == FAMILY_POLYNOMIAL:
        base = tt * (spec.T - tt) * xx * (1.0 - xx)
        for r in range(rows):
            for s in range(cols):
                bump += tf.coefficients[r, s] * base * (tt / spec.T) ** r * xx**s
    else:
        for r in range(rows):
            for s in range(cols):
                bump += tf.coefficients[r, s] * np.sin(
                    np.pi * (r + 1) * tt / spec.T
                ) * np.sin(np.pi * (s + 1) * xx)
    # Boundary equality must be exact at nodes, not within float dust.
    bump[0] = 0.0
    bump[-1] = 0.0
    bump[:, 0] = 0.0
    bump[:, -1] = 0.0
    return bump


def build_test_function(ref: ReferencePotential, tf: TestFunctionSpec) -> NodeField:
    """Realize an admissible test function eta = phi0 + scaled bump.

    The bump is rescaled so the row differences keep a (1 - margin) slack
    inside the solver's feasible slabs, which in particular keeps every
    cell derivative of eta strictly positive.
    """
    spec = ref.spec
    bump = _bump_values(spec, tf)
    fs = feasible_set(spec, ref)
    diffs = bump[1:-1, 1:] - bump[1:-1, :-1]
    neg = diffs < 0.0
    if np.any(neg):
        ratio = fs.row_bounds[neg] / diffs[neg]   # both negative: positive ratios
        scale = min(1.0, (1.0 - tf.margin) * float(np.min(ratio)))
    else:
        scale = 1.0
    eta = NodeField(spec, ref.phi0.values + scale * bump)
    _, eta_x = cell_gradient_values(spec, eta.values)
    if np.min(eta_x) <= 0.0:
        raise InvalidTestFunctionError(
            f"constructed test function has nonpositive cell slope {np.min(eta_x)}"
        )
    return eta


def random_test_function(ref: ReferencePotential, rng: np.random.Generator) -> NodeField:
    """Random admissible test function, alternating families."""
    family = FAMILY_POLYNOMIAL if rng.integers(2) == 0 else FAMILY_FOURIER
    coeffs = rng.normal(scale=0.5, size=(2, 2))
    return build_test_function(ref, TestFunctionSpec(family=family, coefficients=coeffs))


# -- solution certificates -----------------------------------------------------

def minty_certificate(
    model: HamiltonianModel,
    ref: ReferencePotential,
    psi: NodeField,
    eta: NodeField,
    tol_scale: float = 1e-5,
) -> Certificate:
    """Discrete weak-solution inequality tested against one test function.

    Volume terms evaluated at eta minus the pairing of the perspective
    coefficients against the cell-derivative measures of phi = psi + phi0,
    minus the lateral boundary terms weighted by the zero-velocity running
    cost.  The value must not drop below -tol_scale times the pairing
    magnitude.
    """
    spec = ref.spec
    eta_t, eta_x = cell_gradient_values(spec, eta.values)
    if np.min(eta_x) <= 0.0:
        raise InvalidTestFunctionError(
            f"test function has nonpositive cell slope {np.min(eta_x)}"
        )
    pe = perspective(model, spec.x_cells()[None, :], -eta_t, eta_x)
    eta_bar = cell_average_values(eta.values)

    phi = psi.values + ref.phi0.values
    phi_t, phi_x = cell_gradient_values(spec, phi)

    mu = spec.cell_measure
    vol = float(np.sum(-pe.Fj * eta_t + pe.Fm * eta_x + eta_bar * eta_x) * mu)
    pair = float(np.sum(-pe.Fj * phi_t + pe.Fm * phi_x + eta_bar * phi_x) * mu)

    l_at_zero_left = float(np.asarray(legendre_lagrangian(model, 0.0, 0.0).L))
    l_at_zero_right = float(np.asarray(legendre_lagrangian(model, 1.0, 0.0).L))
    t_weights = np.full(spec.Nt + 1, spec.dt)
    t_weights[0] = t_weights[-1] = 0.5 * spec.dt
    lat = l_at_zero_left * float(np.sum(t_weights * phi[:, 0]))
    lat += (l_at_zero_right + 1.0) * float(np.sum(t_weights * (1.0 - phi[:, -1])))

    value = vol - pair - lat
    scale = 1.0 + abs(vol) + abs(pair) + abs(lat)
    return lower_certificate(
        "minty-inequality", value, -tol_scale * scale,
        details=f"volume={vol:.6e} pairing={pair:.6e} lateral={lat:.6e}",
    )


def vi_certificate(
    cfg: OperatorConfig,
    psi: NodeField,
    rng: np.random.Generator,
    samples: int = 100,
    tol: float = 1e-7,
    c_cert: float = 10.0,
    source: CellField | None = None,
) -> Certificate:
    """Check <A_eps psi - S, w - psi> >= -c_cert*tol*(1+||w||) on random feasible w."""
    spec = cfg.spec
    fs = feasible_set(spec, cfg.ref)
    grad = pairing_gradient(cfg, psi)
    if source is not None:
        grad = grad - source_gradient(cfg, source)
    worst = np.inf
    for _ in range(samples):
        w = potential_from_differences(spec, random_feasible(fs, rng, 2.0))
        gap = float(np.sum(grad[1:-1, 1:-1] * (w - psi.values)[1:-1, 1:-1]))
        allowance = c_cert * tol * (1.0 + field_norm(spec, w))
        worst = min(worst, gap + allowance)
    return lower_certificate(
        "vi-solution", worst, 0.0,
        details=f"min over {samples} random feasible w of pairing + allowance",
    )


def apriori_certificates(stage_reports, model: HamiltonianModel,
                         ref: ReferencePotential) -> list[Certificate]:
    """Uniform-boundedness and mass certificates across a continuation run."""
    spec = ref.spec
    kappa = model.kappa
    certs = []
    energies = np.array([r.kappa_energy for r in stage_reports])
    finite = bool(np.all(np.isfinite(energies)))
    certs.append(Certificate(
        "apriori-kappa-energy-finite", finite,
        float(np.max(energies)) if energies.size else float("nan"), float("inf"),
        details=f"stages={len(stage_reports)}",
    ))
    if energies.size:
        median = float(np.median(energies))
        certs.append(upper_certificate(
            "apriori-kappa-energy-uniform", float(np.max(energies)), 2.0 * median,
            details="max kappa energy against twice the schedule median",
        ))
    certs.append(upper_certificate(
        "apriori-psi-x-l1", float(max(r.psi_x_l1 for r in stage_reports)), 2.0 * spec.T,
        details="spatial derivative L1 mass bound",
    ))
    phi0_t_sup = float(np.max(np.abs(ref.phi0_t.values)))
    ratios = []
    for r in stage_reports:
        bound = phi0_t_sup * spec.T + r.kappa_energy / kappa \
            + (kappa - 1.0) / kappa * spec.T * (1.0 + r.eps)
        ratios.append(r.psi_t_l1 / bound)
    certs.append(upper_certificate(
        "apriori-psi-t-l1", float(max(ratios)), 1.0,
        details="time derivative L1 against the assembled energy bound (ratio)",
    ))
    certs.append(upper_certificate(
        "apriori-row-mass", float(max(r.row_mass_error for r in stage_reports)), 1e-10,
        details="per-row density mass distance from 1",
    ))
    unconverged = sum(0 if r.converged else 1 for r in stage_reports)
    certs.append(upper_certificate(
        "continuation-converged", float(unconverged), 0.0,
        details="number of unconverged stages",
    ))
    return certs


def trace_scaling_diagnostic(
    psi: NodeField,
    ref: ReferencePotential,
    kappa: float,
    deltas=None,
) -> Certificate:
    """Fit the terminal-window mass of |psi_t + phi0_t| against window width.

    The energy estimate makes this mass scale no slower than
    delta^((kappa-1)/kappa); the certificate checks the fitted slope stays
    within 0.15 of that exponent.  Stationary data with vanishing window
    mass is reported as an inconclusive pass.
    """
    spec = ref.spec
    pt, _ = cell_gradient_values(spec, psi.values)
    speed = np.abs(pt + ref.phi0_t.values)
    row_mass = np.sum(speed, axis=1) * spec.cell_measure
    if deltas is None:
        widths = []
        w = 1
        while w <= spec.Nt // 2:
            widths.append(w)
            w *= 2
    else:
        widths = sorted({max(1, int(round(d / spec.dt))) for d in deltas})
        widths = [w for w in widths if w <= spec.Nt]
    target = (kappa - 1.0) / kappa - 0.15
    masses = np.array([float(np.sum(row_mass[spec.Nt - w:])) for w in widths])
    scale = float(np.max(masses)) if masses.size else 0.0
    usable = masses > 1e-13 * max(scale, 1.0)
    if int(np.sum(usable)) < 3:
        return Certificate(
            "trace-attainment-scaling", True, 0.0, target,
            details=f"inconclusive: {int(np.sum(usable))} usable windows",
        )
    log_d = np.log(np.array(widths, dtype=float)[usable] * spec.dt)
    log_w = np.log(masses[usable])
    slope = float(np.polyfit(log_d, log_w, 1)[0])
    return lower_certificate(
        "trace-attainment-scaling", slope, target,
        details=f"windows={list(np.array(widths)[usable])} cells; fitted slope of log W vs log delta",
    )


# -- manufactured solutions ----------------------------------------------------

@dataclass(frozen=True)
class ManufacturedPotential:
    """Closed-form potential with exact partial derivatives."""

    phi: Callable
    phi_t: Callable
    phi_x: Callable
    label: str = "manufactured"


def bump_manufactured(T: float, alpha: float) -> ManufacturedPotential:
    """Uniform-endpoint potential x plus a separable space-time bump."""
    return ManufacturedPotential(
        phi=lambda t, x: x + alpha * t * (T - t) * x * (1.0 - x),
        phi_t=lambda t, x: alpha * (T - 2.0 * t) * x * (1.0 - x),
        phi_x=lambda t, x: 1.0 + alpha * t * (T - t) * (1.0 - 2.0 * x),
        label=f"bump(alpha={alpha})",
    )


def _perspective_coeffs(model, t, x, phi_star: ManufacturedPotential):
    pt = np.asarray(phi_star.phi_t(t, x), dtype=float)
    px = np.asarray(phi_star.phi_x(t, x), dtype=float)
    v = -pt / px
    lval, dval = lagrangian_value_deriv(model, x, v)
    return dval, -dval * v + lval            # F_j, F_m at (-phi_t, phi_x)


def mms_source(model: HamiltonianModel, ref: ReferencePotential,
               phi_star: ManufacturedPotential) -> tuple[CellField, NodeField]:
    """Forcing that makes phi_star solve the forced potential equation.

    The source is the cell-centered discrete divergence of the perspective
    coefficients minus the density, evaluated from the exact partial
    derivatives of the manufactured potential; it pairs against
    cell-averaged test values in the solver.
    """
    spec = ref.spec
    tn, xn = spec.t_nodes(), spec.x_nodes()
    tc, xc = spec.t_cells(), spec.x_cells()

    star_nodes = np.asarray(phi_star.phi(tn[:, None], xn[None, :]), dtype=float)
    edge_gap = max(
        float(np.max(np.abs(star_nodes[0] - ref.phi0.values[0]))),
        float(np.max(np.abs(star_nodes[-1] - ref.phi0.values[-1]))),
        float(np.max(np.abs(star_nodes[:, 0] - ref.phi0.values[:, 0]))),
        float(np.max(np.abs(star_nodes[:, -1] - ref.phi0.values[:, -1]))),
    )
    if edge_gap > 1e-10:
        raise InvalidManufacturedSolutionError(
            f"manufactured potential misses the boundary data by {edge_gap:.3e}"
        )
    px_cells = np.asarray(phi_star.phi_x(tc[:, None], xc[None, :]), dtype=float)
    if np.min(px_cells) <= 0.0:
        raise InvalidManufacturedSolutionError(
            f"manufactured potential has nonpositive slope {np.min(px_cells)}"
        )

    fj_t, _ = _perspective_coeffs(model, tn[:, None], xc[None, :], phi_star)
    _, fm_x = _perspective_coeffs(model, tc[:, None], xn[None, :], phi_star)
    source = (fj_t[1:, :] - fj_t[:-1, :]) / spec.dt
    source -= (fm_x[:, 1:] - fm_x[:, :-1]) / spec.dx
    source -= px_cells
    return CellField(spec, source), NodeField(spec, star_nodes)


@dataclass(frozen=True)
class MmsLevel:
    """Error data of one manufactured-solution refinement level."""

    n: int
    psi_error_l1: float
    hj_l1: float
    ct_l1: float
    duality_sup: float


def mms_study(
    model: HamiltonianModel,
    levels=(16, 32, 64),
    T: float = 1.0,
    alpha: float = 0.1,
    q: float | None = None,
    schedule=(0.05, 1e-2, 1e-3, 1e-4, 1e-5),
    tol: float = 1e-9,
    max_iter: int = 200_000,
) -> list[MmsLevel]:
    """Solve the forced problem on a refinement ladder and collect errors."""
    from .vi_operator import default_q

    out = []
    for n in levels:
        spec = GridSpec(T=T, Nt=n, Nx=n)
        bd = BoundaryDensities.from_specs(spec, "uniform", "uniform")
        ref = build_reference_potential(spec, bd)
        phi_star = bump_manufactured(T, alpha)
        source, star_nodes = mms_source(model, ref, phi_star)
        cfg = OperatorConfig(model=model, ref=ref,
                             q=q if q is not None else default_q(model), eps=schedule[0])
        result = continuation(cfg, schedule=schedule, tol_per_stage=tol,
                              max_iter=max_iter, source=source)
        psi_star = star_nodes.values - ref.phi0.values
        err = float(np.sum(np.abs(result.psi.values - psi_star)) * spec.cell_measure)
        sol = reconstruct_solution(model, ref, result.psi)
        res = mfp_residuals(model, sol, bd, source=source)
        _, dual_sup = duality_gap(model, sol)
        out.append(MmsLevel(n=n, psi_error_l1=err, hj_l1=res.hj_l1,
                            ct_l1=res.ct_l1, duality_sup=dual_sup))
    return out


def empirical_orders(values) -> list[float]:
    """Refinement orders log2(e_k / e_{k+1}) for a halving ladder."""
    vals = list(values)
    return [float(np.log2(a / b)) for a, b in zip(vals, vals[1:])]


# -- identity batteries ---------------------------------------------------------

def duality_certificates(model: HamiltonianModel, label: str,
                         n_points: int = 200) -> list[Certificate]:
    """Roundtrip identities of the Legendre transform on a velocity grid."""
    v = np.linspace(-10.0, 10.0, n_points)
    worst_roundtrip = 0.0
    worst_identity = 0.0
    for x in (0.0, 0.3, 1.0):
        le = legendre_lagrangian(model, x, v)
        h_val, dph = eval_hamiltonian(model, x, -np.asarray(le.DvL))
        worst_roundtrip = max(worst_roundtrip, float(np.max(np.abs(dph + v))))
        worst_identity = max(
            worst_identity,
            float(np.max(np.abs(h_val - (v * le.DvL - le.L)))),
        )
    return [
        upper_certificate(f"duality-roundtrip[{label}]", worst_roundtrip, 1e-8),
        upper_certificate(f"duality-identity[{label}]", worst_identity, 1e-8),
    ]


def perspective_certificates(model: HamiltonianModel, rng: np.random.Generator,
                             samples: int = 1000) -> list[Certificate]:
    """Derivative consistency, one-homogeneity and subgradient slack sweeps."""
    j = rng.uniform(-3.0, 3.0, samples)
    m = rng.uniform(0.1, 4.0, samples)
    x = rng.uniform(0.0, 1.0, samples)
    pe = perspective(model, x, j, m)

    step = 1e-6 * np.maximum(1.0, np.abs(j) + m)
    fj_fd = (perspective(model, x, j + step, m).F - perspective(model, x, j - step, m).F) / (2 * step)
    fm_fd = (perspective(model, x, j, m + step).F - perspective(model, x, j, m - step).F) / (2 * step)
    denom = 1.0 + np.abs(pe.Fj) + np.abs(pe.Fm)
    deriv_err = float(np.max(np.hypot(pe.Fj - fj_fd, pe.Fm - fm_fd) / denom))

    lam = rng.uniform(0.25, 4.0, samples)
    hom = perspective(model, x, lam * j, lam * m)
    hom_err = float(np.max(np.abs(hom.F - lam * pe.F) / (1.0 + np.abs(pe.F) * lam)))

    j0 = rng.uniform(-3.0, 3.0, samples)
    m0 = rng.uniform(0.1, 4.0, samples)
    target = perspective(model, x, j0, m0)
    slack = target.F - pe.Fj * j0 - pe.Fm * m0
    return [
        upper_certificate("perspective-derivatives", deriv_err, 1e-5,
                          details="relative gap to centered finite differences"),
        upper_certificate("perspective-one-homogeneity", hom_err, 1e-12),
        lower_certificate("perspective-subgradient-slack", float(np.min(slack)), -1e-12,
                          details=f"{samples} random tuples"),
    ]


def max_feasible_scale(cfg: OperatorConfig, w: np.ndarray) -> float:
    """Largest s keeping the shifted cell mass of s*w positive.

    The zero-boundary constraint makes the discrete feasible set bounded,
    so coercivity trends are probed along a direction scaled up to just
    inside this envelope rather than along an unbounded ray.
    """
    from .grid import cell_gradient_values

    _, wx = cell_gradient_values(cfg.spec, np.asarray(w, dtype=float))
    margin = cfg.ref.phi0_x.values + cfg.eps
    neg = wx < 0.0
    if not np.any(neg):
        return np.inf
    return float(np.min(margin[neg] / (-wx[neg])))


def operator_certificates(cfg: OperatorConfig, rng: np.random.Generator,
                          pairs: int = 100, fd_pairs: int = 20) -> list[Certificate]:
    """Monotonicity sweep, gradient structure and coercivity trend."""
    spec = cfg.spec
    fs = feasible_set(spec, cfg.ref)

    worst = np.inf
    for _ in range(pairs):
        w1 = potential_from_differences(spec, random_feasible(fs, rng, 2.0))
        w2 = potential_from_differences(spec, random_feasible(fs, rng, 2.0))
        gap = monotonicity_gap(cfg, w1, w2)
        worst = min(worst, gap + monotonicity_tolerance(spec, w1, w2))
    certs = [lower_certificate(
        "operator-monotonicity", worst, 0.0,
        details=f"min gap + allowance over {pairs} random feasible pairs",
    )]

    fd_worst = 0.0
    h = 1e-6
    for _ in range(fd_pairs):
        w = potential_from_differences(spec, random_feasible(fs, rng, 1.0))
        z = np.zeros_like(w)
        z[1:-1, 1:-1] = rng.normal(size=(spec.Nt - 1, spec.Nx - 1))
        z *= 0.1 / max(1.0, float(np.max(np.abs(z))))
        pb = apply_operator(cfg, w, z)
        pairing = pb.perspective + pb.regularizer
        fd = (perspective_energy(cfg, w + h * z) - perspective_energy(cfg, w - h * z)) / (2 * h)
        fd_worst = max(fd_worst, abs(pairing - fd) / (1.0 + abs(pairing)))
    certs.append(upper_certificate(
        "operator-gradient-structure", fd_worst, 1e-5,
        details=f"directional derivatives on {fd_pairs} random pairs",
    ))

    w0 = potential_from_differences(spec, random_feasible(fs, rng, 1.0))
    s_max = max_feasible_scale(cfg, w0)
    rayleigh = []
    for s in (s_max / 100.0, s_max / 10.0, 0.99 * s_max):
        w = s * w0
        pb = apply_operator(cfg, w, w)
        rayleigh.append(pb.total / max(field_norm(spec, w), 1e-30))
    growth = min(rayleigh[1] / rayleigh[0], rayleigh[2] / rayleigh[1])
    certs.append(lower_certificate(
        "operator-coercivity-trend", float(growth), 1.5,
        details=f"pairing/norm ratios along decade scaling inside the mass envelope: "
                f"{[f'{r:.3e}' for r in rayleigh]}",
    ))
    return certs


def splitting_certificate(cfg: OperatorConfig, rng: np.random.Generator) -> Certificate:
    """Total equals the sum of parts and matches the adjoint assembly."""
    spec = cfg.spec
    fs = feasible_set(spec, cfg.ref)
    worst = 0.0
    for _ in range(10):
        w = potential_from_differences(spec, random_feasible(fs, rng, 1.0))
        z = np.zeros_like(w)
        z[1:-1, 1:-1] = rng.normal(size=(spec.Nt - 1, spec.Nx - 1))
        pb = apply_operator(cfg, w, z)
        scale = 1.0 + abs(pb.total)
        worst = max(worst, abs(pb.total - (pb.perspective + pb.ranking + pb.regularizer)) / scale)
        adjoint = float(np.sum(pairing_gradient(cfg, w) * z))
        worst = max(worst, abs(adjoint - pb.total) / scale)
    return upper_certificate("operator-splitting", worst, 1e-12,
                             details="relative consistency of parts and adjoint")


# -- suite orchestration ---------------------------------------------------------

def run_suite(config) -> list[Certificate]:
    """Execute the full certification battery for a run configuration.

    ``config`` is a RunConfig (see rankmfp.config).  Individual certificate
    failures are recorded; the suite always runs to completion.
    """
    from .config import RunConfig, build_problem  # deferred: avoid import cycle

    assert isinstance(config, RunConfig)
    rng = np.random.default_rng(config.seed)
    model, spec, bd, ref, cfg = build_problem(config)
    certs: list[Certificate] = []

    def add(fn):
        certs.append(_timed(fn))

    add(lambda: duality_certificates(model, "config-model")[0])
    add(lambda: duality_certificates(model, "config-model")[1])
    for maker in (lambda: perspective_certificates(model, np.random.default_rng(config.seed + 1)),
                  lambda: operator_certificates(cfg, np.random.default_rng(config.seed + 2),
                                                pairs=config.monotonicity_samples),
                  ):
        start = time.perf_counter()
        try:
            group = maker()
            elapsed = (time.perf_counter() - start) * 1e3 / max(len(group), 1)
            certs.extend(Certificate(c.name, c.passed, c.measured, c.bound, c.details, elapsed)
                         for c in group)
        except Exception as exc:
            certs.append(Certificate("certificate-group", False, float("nan"), float("nan"),
                                     f"raised {type(exc).__name__}: {exc}",
                                     (time.perf_counter() - start) * 1e3))
    add(lambda: splitting_certificate(cfg, np.random.default_rng(config.seed + 3)))

    start = time.perf_counter()
    result = continuation(cfg, schedule=config.eps_schedule, tol_per_stage=config.tol,
                          max_iter=config.max_iter)
    solve_ms = (time.perf_counter() - start) * 1e3
    for cert in apriori_certificates(result.stage_reports, model, ref):
        certs.append(Certificate(cert.name, cert.passed, cert.measured, cert.bound,
                                 cert.details, solve_ms / max(len(result.stage_reports), 1)))

    if result.failed_stage is None:
        final_cfg = cfg.with_eps(result.schedule[-1])
        add(lambda: vi_certificate(final_cfg, result.psi,
                                   np.random.default_rng(config.seed + 4), tol=config.tol))
        for k in range(config.minty_samples):
            eta = random_test_function(ref, np.random.default_rng(config.seed + 100 + k))
            cert = _timed(lambda: minty_certificate(model, ref, result.psi, eta))
            certs.append(Certificate(f"minty-inequality[{k}]", cert.passed, cert.measured,
                                     cert.bound, cert.details, cert.wall_time_ms))
        add(lambda: trace_scaling_diagnostic(result.psi, ref, model.kappa))

        def two_start() -> Certificate:
            final = cfg.with_eps(result.schedule[-1])
            rng_ts = np.random.default_rng(config.seed + 5)
            fs = feasible_set(spec, ref)
            psi_a, _ = solve_vi(final, tol=config.tol, max_iter=config.max_iter)
            psi_b, _ = solve_vi(final, init=random_feasible(fs, rng_ts, 2.0),
                                tol=config.tol, max_iter=config.max_iter)
            l1 = float(np.sum(np.abs(psi_a.values - psi_b.values)) * spec.cell_measure)
            return upper_certificate("two-start-uniqueness", l1, 10.0 * config.tol,
                                     details="L1 distance between zero-start and random-start solves")
        add(two_start)

    if config.mms_levels:
        def mms() -> Certificate:
            levels = mms_study(model, levels=config.mms_levels, T=config.T,
                               alpha=config.mms_alpha, q=config.q)
            orders = empirical_orders([lv.psi_error_l1 for lv in levels])
            return lower_certificate(
                "mms-convergence-order", float(min(orders)) if orders else float("nan"), 1.0,
                details=f"errors={[f'{lv.psi_error_l1:.3e}' for lv in levels]} orders={[f'{o:.2f}' for o in orders]}",
            )
        add(mms)

    return certs
