"""Discrete regularized operator: assembly, pairings and monotonicity utilities.

The operator acting on a zero-boundary node field w pairs against a test
field zeta through three cell-collocated parts:

  perspective   F~_j(t,x, w_t, w_x + eps) zeta_t + F~_m(...) zeta_x
  ranking       (wbar + phi0bar) zeta_x
  regularizer   eps ( |wbar|^(q-2) wbar zetabar + |Dw|^(q-2) Dw . Dzeta )

integrated with the single cell quadrature rule.  Overbars are four-corner
cell averages; Dw is the cell gradient vector (w_t, w_x).  The averaged
stencil makes the ranking part exactly skew on zero-boundary fields, so
the assembled operator is monotone up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import (
    CellField,
    NodeField,
    ReferencePotential,
    cell_average_values,
    cell_gradient_values,
)
from .hamiltonians import HamiltonianModel, lagrangian_value_deriv


def default_q(model: HamiltonianModel) -> float:
    """Smallest shipped regularization exponent honoring q >= l + 1."""
    return max(3.0, model.l + 1.0)


@dataclass(frozen=True)
class OperatorConfig:
    """Immutable operator parameters plus cached reference-cell data."""

    model: HamiltonianModel
    ref: ReferencePotential
    q: float
    eps: float
    phi0_bar: np.ndarray = field(init=False, repr=False, compare=False)
    x_cells: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.q < self.model.l + 1.0:
            raise ConfigurationError(
                f"regularization exponent q = {self.q} violates q >= l + 1 = {self.model.l + 1.0}"
            )
        if not (0.0 < self.eps < 1.0):
            raise ConfigurationError(f"eps must lie in (0, 1), got {self.eps}")
        object.__setattr__(self, "phi0_bar", cell_average_values(self.ref.phi0.values))
        object.__setattr__(
            self, "x_cells",
            np.broadcast_to(self.ref.spec.x_cells()[None, :], self.phi0_bar.shape),
        )

    @property
    def spec(self):
        return self.ref.spec

    def with_eps(self, eps: float) -> "OperatorConfig":
        return OperatorConfig(model=self.model, ref=self.ref, q=self.q, eps=eps)


@dataclass(frozen=True)
class PairingBreakdown:
    """Operator pairing split into its three parts; total is their sum."""

    perspective: float
    ranking: float
    regularizer: float
    total: float


def _boundary_clean(spec, values: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (spec.Nt + 1, spec.Nx + 1):
        raise DomainError(f"{what} has wrong shape {arr.shape}")
    scale = 1.0 + float(np.max(np.abs(arr))) if arr.size else 1.0
    edge = max(
        np.max(np.abs(arr[0])), np.max(np.abs(arr[-1])),
        np.max(np.abs(arr[:, 0])), np.max(np.abs(arr[:, -1])),
    )
    if edge > 1e-10 * scale:
        raise DomainError(f"{what} must vanish on the boundary (max edge value {edge})")
    if edge != 0.0:
        arr = arr.copy()
        arr[0] = 0.0
        arr[-1] = 0.0
        arr[:, 0] = 0.0
        arr[:, -1] = 0.0
    return arr


def _as_values(w) -> np.ndarray:
    return w.values if isinstance(w, NodeField) else np.asarray(w, dtype=float)


def _cell_coefficients(cfg: OperatorConfig, w: np.ndarray):
    """Shifted perspective derivatives and regularizer coefficients at w."""
    spec = cfg.spec
    wt, wx = cell_gradient_values(spec, w)
    wbar = cell_average_values(w)
    flux = -(wt + cfg.ref.phi0_t.values)
    mass = wx + cfg.eps + cfg.ref.phi0_x.values
    if np.min(mass) <= 0.0:
        bad = np.unravel_index(int(np.argmin(mass)), mass.shape)
        raise DomainError(
            f"nonpositive shifted mass at cell {bad}: w_x + phi0_x + eps = {np.min(mass)}"
        )
    v = flux / mass
    lval, dval = lagrangian_value_deriv(cfg.model, cfg.x_cells, v)
    ftil_j = -dval                      # = -F_j at the shifted point
    ftil_m = -dval * v + lval           # = +F_m at the shifted point
    grad_pow = np.hypot(wt, wx) ** (cfg.q - 2.0)
    reg_t = cfg.eps * grad_pow * wt
    reg_x = cfg.eps * grad_pow * wx
    reg_0 = cfg.eps * np.abs(wbar) ** (cfg.q - 2.0) * wbar
    return wt, wx, wbar, flux, mass, lval, ftil_j, ftil_m, reg_t, reg_x, reg_0


def apply_operator(cfg: OperatorConfig, w, zeta) -> PairingBreakdown:
    """Pairing of the regularized operator at w against the test field zeta.

    Both fields must vanish on the boundary and the shifted cell mass
    w_x + phi0_x + eps must be positive on every cell.
    """
    spec = cfg.spec
    wv = _boundary_clean(spec, _as_values(w), "w")
    zv = _boundary_clean(spec, _as_values(zeta), "zeta")
    (_, _, wbar, _, _, _, ftil_j, ftil_m, reg_t, reg_x, reg_0) = _cell_coefficients(cfg, wv)
    zt, zx = cell_gradient_values(spec, zv)
    zbar = cell_average_values(zv)
    mu = spec.cell_measure
    perspective = float(np.sum(ftil_j * zt + ftil_m * zx) * mu)
    ranking = float(np.sum((wbar + cfg.phi0_bar) * zx) * mu)
    regularizer = float(np.sum(reg_0 * zbar + reg_t * zt + reg_x * zx) * mu)
    return PairingBreakdown(
        perspective=perspective, ranking=ranking, regularizer=regularizer,
        total=perspective + ranking + regularizer,
    )


def _corner_views(spec, cells: np.ndarray):
    padded = np.zeros((spec.Nt + 2, spec.Nx + 2))
    padded[1:-1, 1:-1] = cells
    nw = padded[:-1, :-1]
    ne = padded[:-1, 1:]
    sw = padded[1:, :-1]
    se = padded[1:, 1:]
    return nw, ne, sw, se


def _adjoint_to_nodes(cfg: OperatorConfig, c_t, c_x, c_0) -> np.ndarray:
    """Transpose the cell pairing onto node coefficients.

    Returns a node array a with sum(a * zeta) equal to the cell pairing
    sum((c_t zeta_t + c_x zeta_x + c_0 zetabar) * dt * dx) for every
    zero-boundary zeta.
    """
    spec = cfg.spec
    nw, ne, sw, se = _corner_views(spec, c_t)
    a = 0.5 * spec.dx * (nw + ne - sw - se)
    nw, ne, sw, se = _corner_views(spec, c_x)
    a += 0.5 * spec.dt * (nw + sw - ne - se)
    nw, ne, sw, se = _corner_views(spec, c_0)
    a += 0.25 * spec.cell_measure * (nw + ne + sw + se)
    return a


def _pairing_gradient_raw(cfg: OperatorConfig, wv: np.ndarray) -> np.ndarray:
    """Hot-path gradient assembly; assumes a clean zero-boundary array."""
    (_, _, wbar, _, _, _, ftil_j, ftil_m, reg_t, reg_x, reg_0) = _cell_coefficients(cfg, wv)
    c_t = ftil_j + reg_t
    c_x = ftil_m + (wbar + cfg.phi0_bar) + reg_x
    return _adjoint_to_nodes(cfg, c_t, c_x, reg_0)


def pairing_gradient(cfg: OperatorConfig, w) -> np.ndarray:
    """Node representation of the operator at w.

    The returned array a satisfies <A_eps w, zeta> = sum(a * zeta) for all
    zero-boundary zeta; boundary entries are meaningless and should be
    masked by the caller.
    """
    wv = _boundary_clean(cfg.spec, _as_values(w), "w")
    return _pairing_gradient_raw(cfg, wv)


def source_gradient(cfg: OperatorConfig, source: CellField) -> np.ndarray:
    """Node gradient of the linear forcing pairing sum(source * zetabar * dt*dx)."""
    nw, ne, sw, se = _corner_views(cfg.spec, source.values)
    return 0.25 * cfg.spec.cell_measure * (nw + ne + sw + se)


def perspective_energy(cfg: OperatorConfig, w) -> float:
    """Convex energy whose Gateaux derivative is the non-ranking pairing.

    J(w) = sum F~(t, x, w_t, w_x + eps) dt dx
         + (eps/q) sum (|wbar|^q + |Dw|^q) dt dx.
    """
    spec = cfg.spec
    wv = _boundary_clean(spec, _as_values(w), "w")
    wt, wx = cell_gradient_values(spec, wv)
    wbar = cell_average_values(wv)
    flux = -(wt + cfg.ref.phi0_t.values)
    mass = wx + cfg.eps + cfg.ref.phi0_x.values
    if np.min(mass) <= 0.0:
        bad = np.unravel_index(int(np.argmin(mass)), mass.shape)
        raise DomainError(f"nonpositive shifted mass at cell {bad}")
    lval, _ = lagrangian_value_deriv(cfg.model, cfg.x_cells, flux / mass)
    mu = spec.cell_measure
    energy = float(np.sum(mass * lval) * mu)
    energy += float(cfg.eps / cfg.q * np.sum(np.abs(wbar) ** cfg.q + np.hypot(wt, wx) ** cfg.q) * mu)
    return energy


def monotonicity_gap(cfg: OperatorConfig, w1, w2) -> float:
    """<A_eps w1 - A_eps w2, w1 - w2>; nonnegative up to roundoff."""
    v1 = _boundary_clean(cfg.spec, _as_values(w1), "w1")
    v2 = _boundary_clean(cfg.spec, _as_values(w2), "w2")
    a1 = pairing_gradient(cfg, v1)
    a2 = pairing_gradient(cfg, v2)
    diff = v1 - v2
    return float(np.sum((a1 - a2)[1:-1, 1:-1] * diff[1:-1, 1:-1]))


def field_norm(spec, values: np.ndarray) -> float:
    """Discrete L2 norm with the cell measure weight."""
    return float(np.linalg.norm(values) * np.sqrt(spec.cell_measure))


def monotonicity_tolerance(spec, w1, w2) -> float:
    """Roundoff allowance for the monotonicity gap, quadratic in field size."""
    n1 = field_norm(spec, _as_values(w1))
    n2 = field_norm(spec, _as_values(w2))
    return 1e-10 * (1.0 + n1 + n2) ** 2
