"""Projected extragradient solver for the regularized variational inequality.

Unknowns are difference coordinates: for every interior time row the Nx
node differences of psi, constrained to sum to zero (lateral pinning) and
to respect the per-column lower bounds induced by the nonnegative-density
constraint.  In these coordinates the feasible set is a product of
simplex-like slabs, so the Euclidean projection reduces to a clipped
shift with a scalar bisection per row, and the operator is transported by
the adjoint of the prefix-sum map, which preserves monotonicity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ConvergenceError, DomainError, StagnationError
from .grid import CellField, GridSpec, NodeField, ReferencePotential, cell_gradient_values
from .vi_operator import (
    OperatorConfig,
    _pairing_gradient_raw,
    perspective_energy,
    source_gradient,
)

_PROJECTION_TOL = 1e-14
_TAU_FLOOR = 1e-14
_TAU_GROWTH = 1.03


@dataclass(frozen=True)
class FeasibleSet:
    """Row-separable feasible set for the difference coordinates.

    A row for interior time node i must satisfy g_k >= -dx * phi0_x over
    both cell rows adjacent to i (so that every cell keeps nonnegative
    density once adjacent rows are averaged) and sum to zero.
    """

    spec: GridSpec
    lower_bounds: CellField
    row_bounds: np.ndarray = field(repr=False)

    def bounds_for_row(self, row_index: int) -> np.ndarray:
        if not 1 <= row_index <= self.spec.Nt - 1:
            raise DomainError(f"row index {row_index} is not an interior time row")
        return self.row_bounds[row_index - 1]


def feasible_set(spec: GridSpec, ref: ReferencePotential) -> FeasibleSet:
    cell_lb = -spec.dx * ref.phi0_x.values
    row_lb = np.maximum(cell_lb[:-1, :], cell_lb[1:, :])
    if np.any(np.sum(row_lb, axis=1) > 0.0):
        raise ConfigurationError("feasible set is empty: lower bounds sum to a positive value")
    return FeasibleSet(spec=spec, lower_bounds=CellField(spec, cell_lb), row_bounds=row_lb)


def _bisect_shift(v: np.ndarray, lb: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Monotone bisection for the row shifts solving sum max(v - lam, lb) = 0."""
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        h = np.sum(np.maximum(v - mid[:, None], lb), axis=1)
        pos = h > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        if np.max(hi - lo) < _PROJECTION_TOL * (1.0 + np.max(np.abs(mid))):
            break
    return 0.5 * (lo + hi)


def _cold_bracket(v: np.ndarray, lb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # The shift is at least the row mean (clipping only raises the sum) and
    # at most the largest gap (beyond it every coordinate is clipped).
    gap = v - lb
    hi = np.max(gap, axis=1) + 1.0
    lo = np.minimum(np.min(gap, axis=1), np.mean(v, axis=1)) - 1.0
    return lo, hi


def project_rows(candidates: np.ndarray, lower_bounds: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto {g >= lb, sum(g) = 0}.

    Solves sum_k max(v_k - lam, lb_k) = 0 for the shift lam by monotone
    bisection on the piecewise-linear constraint; the final clip makes the
    result feasible to within 1e-14.
    """
    v = np.atleast_2d(np.asarray(candidates, dtype=float))
    lb = np.broadcast_to(np.atleast_2d(np.asarray(lower_bounds, dtype=float)), v.shape)
    if np.any(np.sum(lb, axis=1) > 0.0):
        raise ConfigurationError("projection target is empty: lower bounds sum above zero")
    lo, hi = _cold_bracket(v, lb)
    lam = _bisect_shift(v, lb, lo, hi)
    out = np.maximum(v - lam[:, None], lb)
    if np.ndim(candidates) == 1:
        return out[0]
    return out


class _NodeProjector:
    """Exact per-row projection onto the feasible set in the node metric.

    Each interior row solves

        min sum_k (psi_k - z_k)^2   s.t. psi_0 = psi_Nx = 0,
                                         psi_{k+1} - psi_k >= lb_k.

    Subtracting the prefix sums of the bounds turns the slope constraints
    into plain monotonicity with pinned endpoints, which is isotonic
    regression followed by a clip to the constant box the pins induce.
    The node metric keeps the iteration conditioning at the level of the
    underlying differential operator instead of inheriting the prefix-sum
    amplification of the difference coordinates.
    """

    def __init__(self, row_bounds: np.ndarray):
        from scipy.optimize import isotonic_regression

        self._isotonic = isotonic_regression
        prefix = np.cumsum(row_bounds, axis=1)
        self.offset = prefix[:, :-1]            # B_k at interior nodes, k = 1..Nx-1
        self.top = -prefix[:, -1]               # box upper bound R >= 0 per row
        if np.any(self.top < 0.0):
            raise ConfigurationError("feasible set is empty: lower bounds sum above zero")

    def __call__(self, interior: np.ndarray) -> np.ndarray:
        y = interior - self.offset
        out = np.empty_like(y)
        for r in range(y.shape[0]):
            out[r] = self._isotonic(y[r]).x
        np.clip(out, 0.0, self.top[:, None], out=out)
        return out + self.offset


def project_feasible(spec: GridSpec, ref: ReferencePotential, candidate: np.ndarray,
                     row_index: int | None = None) -> np.ndarray:
    """Project one row of difference coordinates onto the feasible slab.

    ``row_index`` selects the interior time row whose adjacent-cell bounds
    apply; without it the most restrictive column-wise bound is used.
    """
    candidate = np.asarray(candidate, dtype=float)
    if candidate.shape != (spec.Nx,):
        raise DomainError(f"candidate row must have length {spec.Nx}")
    fs = feasible_set(spec, ref)
    if row_index is None:
        bounds = np.max(-spec.dx * ref.phi0_x.values, axis=0)
    else:
        bounds = fs.bounds_for_row(row_index)
    return project_rows(candidate, bounds)


def difference_coordinates(psi: NodeField) -> np.ndarray:
    """Difference coordinates of a zero-boundary potential, shape (Nt-1, Nx)."""
    v = psi.values
    return v[1:-1, 1:] - v[1:-1, :-1]


def potential_from_differences(spec: GridSpec, g: np.ndarray) -> np.ndarray:
    """Rebuild node values by prefix sums; boundary rows and columns stay 0."""
    psi = np.zeros((spec.Nt + 1, spec.Nx + 1))
    psi[1:-1, 1:-1] = np.cumsum(g[:, :-1], axis=1)
    return psi


def _adjoint_prefix(spec: GridSpec, node_grad: np.ndarray) -> np.ndarray:
    """Adjoint of the prefix-sum map: node gradients to difference gradients."""
    interior = node_grad[1:-1, 1:-1]
    rev = np.flip(np.cumsum(np.flip(interior, axis=1), axis=1), axis=1)
    out = np.zeros((spec.Nt - 1, spec.Nx))
    out[:, : spec.Nx - 1] = rev
    return out


@dataclass
class SolveState:
    """Mutable iterate of the extragradient loop."""

    g: np.ndarray
    eps: float
    tau: float
    iterations: int
    residual: float
    history: list


@dataclass(frozen=True)
class SolveReport:
    """Convergence summary plus the a-priori quantities at the solution."""

    converged: bool
    iterations: int
    final_residual: float
    eps: float
    tau_final: float
    energy_trace: list
    residual_history: np.ndarray
    kappa_energy: float
    bv_bound: float
    psi_x_l1: float
    psi_t_l1: float
    row_mass_error: float
    min_cell_mass: float
    boundary_mass_fraction: float


def _solution_diagnostics(cfg: OperatorConfig, psi: np.ndarray) -> dict:
    spec = cfg.spec
    pt, px = cell_gradient_values(spec, psi)
    mass = px + cfg.ref.phi0_x.values
    speed = np.abs(pt + cfg.ref.phi0_t.values)
    kappa = cfg.model.kappa
    mu = spec.cell_measure
    kappa_energy = float(np.sum(speed**kappa / (mass + cfg.eps) ** (kappa - 1.0)) * mu)
    psi_x_l1 = float(np.sum(np.abs(px)) * mu)
    psi_t_l1 = float(np.sum(np.abs(pt)) * mu)
    row_mass = np.sum(mass, axis=1) * spec.dx
    boundary_fraction = float(np.max((mass[:, 0] + mass[:, -1]) * spec.dx))
    return {
        "kappa_energy": kappa_energy,
        "bv_bound": psi_x_l1 + psi_t_l1,
        "psi_x_l1": psi_x_l1,
        "psi_t_l1": psi_t_l1,
        "row_mass_error": float(np.max(np.abs(row_mass - 1.0))),
        "min_cell_mass": float(np.min(mass)),
        "boundary_mass_fraction": boundary_fraction,
    }


def _initial_differences(spec: GridSpec, init) -> np.ndarray:
    if init is None:
        return np.zeros((spec.Nt - 1, spec.Nx))
    if isinstance(init, SolveState):
        return np.array(init.g, dtype=float)
    if isinstance(init, NodeField):
        return difference_coordinates(init)
    arr = np.asarray(init, dtype=float)
    if arr.shape != (spec.Nt - 1, spec.Nx):
        raise DomainError(f"initial differences must have shape {(spec.Nt - 1, spec.Nx)}")
    return arr.copy()


def solve_vi(
    cfg: OperatorConfig,
    init=None,
    tol: float = 1e-7,
    max_iter: int = 200_000,
    source: CellField | None = None,
    theta: float = 0.9,
    tau0: float = 1.0,
    trace_every: int = 200,
) -> tuple[NodeField, SolveReport]:
    """Solve <A_eps psi - S, w - psi> >= 0 over the discrete feasible set.

    Korpelevich extragradient with adaptive step, run on the node values
    with the exact per-row isotonic projection: the predictor is
    re-projected with halved tau until the local Lipschitz test
    ||A(pbar) - A(p)|| <= (theta/tau) ||pbar - p|| passes.  Terminates when
    the scaled fixed-point residual drops below ``tol``.

    Returns the potential as a NodeField together with a report carrying
    the a-priori energy quantities evaluated at the solution.
    """
    spec = cfg.spec
    fs = feasible_set(spec, cfg.ref)
    s_node = source_gradient(cfg, source) if source is not None else None
    project = _NodeProjector(fs.row_bounds)

    def embed(interior: np.ndarray) -> np.ndarray:
        psi = np.zeros((spec.Nt + 1, spec.Nx + 1))
        psi[1:-1, 1:-1] = interior
        return psi

    def operator(interior: np.ndarray) -> np.ndarray:
        a = _pairing_gradient_raw(cfg, embed(interior))
        if s_node is not None:
            a = a - s_node
        return a[1:-1, 1:-1]

    p = project(potential_from_differences(spec, _initial_differences(spec, init))[1:-1, 1:-1])
    tau = float(tau0)
    residual_history = []
    energy_trace = []
    fp = operator(p)
    converged = False
    iterations = 0
    residual = np.inf

    for it in range(max_iter):
        while True:
            pbar = project(p - tau * fp)
            fpbar = operator(pbar)
            dp = pbar - p
            step_norm = float(np.linalg.norm(dp))
            if step_norm == 0.0:
                break
            if float(np.linalg.norm(fpbar - fp)) <= (theta / tau) * step_norm:
                break
            tau *= 0.5
            if tau < _TAU_FLOOR:
                raise StagnationError(
                    f"step size collapsed below {_TAU_FLOOR} at iteration {it}",
                    residual=residual if np.isfinite(residual) else None,
                )
        residual = step_norm / (tau * (1.0 + float(np.linalg.norm(p))))
        residual_history.append(residual)
        if it % trace_every == 0:
            energy_trace.append((it, perspective_energy(cfg, embed(p))))
        if residual <= tol:
            converged = True
            iterations = it
            break
        p = project(p - tau * fpbar)
        fp = operator(p)
        tau = min(tau * _TAU_GROWTH, tau0)
        iterations = it + 1

    psi_values = embed(p)
    diag = _solution_diagnostics(cfg, psi_values)
    energy_trace.append((iterations, perspective_energy(cfg, psi_values)))
    report = SolveReport(
        converged=converged,
        iterations=iterations,
        final_residual=float(residual),
        eps=cfg.eps,
        tau_final=tau,
        energy_trace=energy_trace,
        residual_history=np.asarray(residual_history),
        **diag,
    )
    return NodeField(spec, psi_values), report


@dataclass(frozen=True)
class ContinuationResult:
    """Outcome of an eps-continuation run; failed_stage is None on success."""

    psi: NodeField
    stage_reports: list
    schedule: tuple
    failed_stage: int | None


DEFAULT_SCHEDULE = (0.5, 0.25, 0.1, 0.05, 0.02, 0.01)


def continuation(
    cfg_base: OperatorConfig,
    schedule=DEFAULT_SCHEDULE,
    tol_per_stage: float = 1e-7,
    max_iter: int = 200_000,
    source: CellField | None = None,
    init=None,
) -> ContinuationResult:
    """Solve a decreasing sequence of regularizations with warm starts.

    The feasible set does not depend on eps, so each stage restarts the
    iteration from the previous potential unchanged; stage reports expose
    the energy quantities whose uniform boundedness the continuation is
    expected to display.
    """
    schedule = tuple(float(e) for e in schedule)
    if not schedule:
        raise ConfigurationError("continuation schedule must be non-empty")
    if any(not (0.0 < e < 1.0) for e in schedule):
        raise ConfigurationError(f"schedule entries must lie in (0, 1): {schedule}")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ConfigurationError(f"schedule must be strictly decreasing: {schedule}")

    reports = []
    psi = None
    state = init
    for stage, eps in enumerate(schedule):
        cfg = cfg_base.with_eps(eps)
        try:
            psi, report = solve_vi(
                cfg, init=state, tol=tol_per_stage, max_iter=max_iter, source=source
            )
        except ConvergenceError:
            return ContinuationResult(
                psi=psi if psi is not None else NodeField.zeros(cfg.spec),
                stage_reports=reports, schedule=schedule, failed_stage=stage,
            )
        reports.append(report)
        if not report.converged:
            return ContinuationResult(psi=psi, stage_reports=reports,
                                      schedule=schedule, failed_stage=stage)
        state = difference_coordinates(psi)
    return ContinuationResult(psi=psi, stage_reports=reports, schedule=schedule, failed_stage=None)


def random_feasible(fs: FeasibleSet, rng: np.random.Generator, scale: float = 0.1) -> np.ndarray:
    """Random feasible difference coordinates (normal candidates, projected)."""
    cand = rng.normal(scale=scale * fs.spec.dx, size=(fs.spec.Nt - 1, fs.spec.Nx))
    return project_rows(cand, fs.row_bounds)
