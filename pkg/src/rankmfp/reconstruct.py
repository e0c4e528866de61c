"""Recover value function, density and flux from a solved potential.

Given the potential phi = psi + phi0 the density is its spatial cell
derivative and the flux its temporal one; the value function is rebuilt
by integrating the flux-derivative of the perspective function in space
plus a boundary time integral, normalized to u(0, 0) = 0.  Residuals of
the original planning system are then evaluated on the same grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDensityError, DomainError
from .grid import (
    BoundaryDensities,
    CellField,
    NodeField,
    ReferencePotential,
    cell_gradient_values,
)
from .hamiltonians import HamiltonianModel, eval_hamiltonian, lagrangian_value_deriv

M_FLOOR = 1e-10
MAX_MASKED_FRACTION = 0.2


@dataclass(frozen=True)
class MfpSolution:
    """Reconstructed planning solution on one grid.

    ``mask`` is True on cells whose density exceeds the floor; only those
    cells enter value-function integrals and residual norms.
    """

    model: HamiltonianModel
    phi: NodeField
    m: CellField
    u: NodeField
    flux: CellField
    mask: np.ndarray
    masked_fraction: float


def reconstruct_solution(model: HamiltonianModel, ref: ReferencePotential, psi: NodeField) -> MfpSolution:
    """Rebuild (u, m, phi) from a zero-boundary potential increment.

    The x = 0 column trace needed by the boundary time integral is taken
    from the first interior cell column; cells below the density floor are
    masked out of the integrand and reported.
    """
    spec = psi.spec
    if spec != ref.spec:
        raise DomainError("psi and reference potential live on different grids")
    phi_values = psi.values + ref.phi0.values
    phi_t, phi_x = cell_gradient_values(spec, phi_values)
    if np.min(phi_x) < -1e-12:
        raise DomainError(f"reconstruction requires nonnegative density, min = {np.min(phi_x)}")

    mask = phi_x > M_FLOOR
    masked_fraction = 1.0 - float(np.mean(mask))
    if masked_fraction > MAX_MASKED_FRACTION:
        raise DegenerateDensityError(
            f"{masked_fraction:.1%} of cells fall below the density floor {M_FLOOR}"
        )

    # Perspective derivatives at (j, m) = (-phi_t, phi_x) on unmasked cells.
    fj = np.zeros_like(phi_x)
    fm = np.zeros_like(phi_x)
    v = np.zeros_like(phi_x)
    np.divide(-phi_t, phi_x, out=v, where=mask)
    lval, dval = lagrangian_value_deriv(model, 0.0, v)
    fj[mask] = dval[mask]
    fm[mask] = (-dval * v + lval)[mask]

    # Average cell rows onto node-time rows; linear extrapolation at t = 0, T
    # keeps the boundary rows second-order accurate.  Extrapolation needs
    # both participating cells unmasked, else fall back to the nearest row.
    fj_rows = np.empty((spec.Nt + 1, spec.Nx))
    first_ok = mask[0] & mask[1]
    last_ok = mask[-1] & mask[-2]
    fj_rows[0] = np.where(first_ok, 1.5 * fj[0] - 0.5 * fj[1], fj[0])
    fj_rows[-1] = np.where(last_ok, 1.5 * fj[-1] - 0.5 * fj[-2], fj[-1])
    fj_rows[1:-1] = 0.5 * (fj[:-1] + fj[1:])

    u = np.zeros((spec.Nt + 1, spec.Nx + 1))
    np.cumsum(-fj_rows * spec.dx, axis=1, out=u[:, 1:])
    # Boundary time integral along x = 0+, midpoint rule over cell rows.
    u0 = np.concatenate([[0.0], np.cumsum(-fm[:, 0] * spec.dt)])
    u += u0[:, None]
    u -= u[0, 0]

    row_mass = np.sum(phi_x, axis=1) * spec.dx
    if np.max(np.abs(row_mass - 1.0)) > 1e-10:
        raise DomainError(
            f"row mass deviates from 1 by {np.max(np.abs(row_mass - 1.0)):.3e}; psi is not feasible"
        )

    return MfpSolution(
        model=model,
        phi=NodeField(spec, phi_values),
        m=CellField(spec, phi_x),
        u=NodeField(spec, u),
        flux=CellField(spec, phi_t),
        mask=mask,
        masked_fraction=masked_fraction,
    )


@dataclass(frozen=True)
class ResidualReport:
    """Residual fields of the planning system and their norms.

    hj lives on cells; ct on interior cell corners; flux_bc holds the
    first/last interface flux per cell row; planning_bc the density gap to
    the prescribed boundary data on the first/last cell rows.
    """

    hj: CellField
    ct: np.ndarray
    flux_bc: np.ndarray
    planning_bc: np.ndarray
    hj_l1: float
    hj_linf: float
    ct_l1: float
    ct_linf: float


def mfp_residuals(model: HamiltonianModel, sol: MfpSolution, bd: BoundaryDensities,
                  source: CellField | None = None) -> ResidualReport:
    """Evaluate the planning-system residuals of a reconstructed solution.

    The transport residual is collocated at interior cell corners by
    pairing a time difference of space-averaged densities with a space
    difference of time-averaged fluxes, both centered at the same node.
    On a forced run the value function absorbs the cumulative forcing, so
    the matching amount is removed from the HJ residual when ``source`` is
    given; the transport residual is forcing-free either way.
    """
    spec = sol.phi.spec
    mu = spec.cell_measure
    u_t, u_x = cell_gradient_values(spec, sol.u.values)
    x_cells = np.broadcast_to(spec.x_cells()[None, :], u_x.shape)
    h_val, dph = eval_hamiltonian(model, x_cells, u_x)

    m = sol.m.values
    cum_m = (np.cumsum(m, axis=1) - 0.5 * m) * spec.dx
    hj = -u_t + h_val - cum_m
    if source is not None:
        hj -= (np.cumsum(source.values, axis=1) - 0.5 * source.values) * spec.dx

    flux_mfp = m * dph
    m_t = ((m[1:, :-1] + m[1:, 1:]) - (m[:-1, :-1] + m[:-1, 1:])) / (2.0 * spec.dt)
    f_x = ((flux_mfp[:-1, 1:] + flux_mfp[1:, 1:]) - (flux_mfp[:-1, :-1] + flux_mfp[1:, :-1])) / (2.0 * spec.dx)
    ct = m_t - f_x

    flux_bc = np.stack([flux_mfp[:, 0], flux_mfp[:, -1]], axis=1)
    m0_mid = 0.5 * (bd.m0[:-1] + bd.m0[1:])
    mT_mid = 0.5 * (bd.mT[:-1] + bd.mT[1:])
    planning_bc = np.stack([m[0] - m0_mid, m[-1] - mT_mid], axis=0)

    valid = sol.mask
    corner_valid = valid[:-1, :-1] & valid[:-1, 1:] & valid[1:, :-1] & valid[1:, 1:]
    hj_masked = np.where(valid, hj, 0.0)
    ct_masked = np.where(corner_valid, ct, 0.0)
    return ResidualReport(
        hj=CellField(spec, hj),
        ct=ct,
        flux_bc=flux_bc,
        planning_bc=planning_bc,
        hj_l1=float(np.sum(np.abs(hj_masked)) * mu),
        hj_linf=float(np.max(np.abs(hj_masked))),
        ct_l1=float(np.sum(np.abs(ct_masked)) * mu),
        ct_linf=float(np.max(np.abs(ct_masked))) if ct.size else 0.0,
    )


def duality_gap(model: HamiltonianModel, sol: MfpSolution) -> tuple[np.ndarray, float]:
    """Cell-wise |D_pH(x, u_x) - flux/m| on unmasked cells, with its sup.

    u_x is the cell gradient of the integrated value function, so this
    measures how well the reconstructed control matches the kinematic
    velocity of the potential.
    """
    spec = sol.phi.spec
    _, u_x = cell_gradient_values(spec, sol.u.values)
    x_cells = np.broadcast_to(spec.x_cells()[None, :], u_x.shape)
    _, dph = eval_hamiltonian(model, x_cells, u_x)
    gap = np.zeros_like(u_x)
    np.divide(sol.flux.values, sol.m.values, out=gap, where=sol.mask)
    gap = np.where(sol.mask, np.abs(dph - gap), 0.0)
    return gap, float(np.max(gap))
