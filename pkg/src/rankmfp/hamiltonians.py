"""Convex-duality machinery: Hamiltonians, Lagrangians and perspective functions.

The running-cost Lagrangian is obtained from the Hamiltonian through

    L(x, v) = sup_p ( -v*p - H(x, p) ),

which differs from the textbook convex conjugate by the sign of the
velocity; with this convention the maximizer satisfies p* = -D_vL(x, v)
and the roundtrip identities

    D_pH(x, -D_vL(x, v)) = -v,
    H(x, -D_vL(x, v))    = v*D_vL(x, v) - L(x, v)

hold wherever the duality is exact.  The perspective function

    F(x, j, m) = sup_p ( -j*p - m*H(x, p) ) = m*L(x, j/m)   (m > 0)

is jointly convex and positively one-homogeneous in (j, m); its partial
derivatives are F_j = D_vL(x, j/m) and F_m = -D_vL(x, j/m)*(j/m) + L(x, j/m).

All evaluation routines are pure functions of immutable model data and
accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError

KIND_QUADRATIC = "quadratic"
KIND_POWER_LAW = "power-law"
KIND_TABLE = "table"


@dataclass(frozen=True)
class HamiltonianModel:
    """Hamiltonian together with its growth metadata.

    Parameters
    ----------
    kind : str
        One of ``"quadratic"``, ``"power-law"``, ``"table"``.
    a : float or None
        Exponent of the power-law Hamiltonian ``|p|^a / a`` (``a > 1``).
    l : float
        Growth exponent of ``D_vL``: ``|D_vL(x,v)| <= c*(|v|^(l-1) + 1)``.
    kappa : float
        Coercivity exponent: ``L(x,v) >= |v|^kappa / c - c``.
    c_growth : float
        Constant serving both growth bounds above.
    p_max : float
        Half-width of the momentum bracket used by numeric maximizer
        searches (table kind only).
    """

    kind: str
    a: float | None
    l: float
    kappa: float
    c_growth: float
    p_max: float = 1e3
    _h: Callable | None = field(default=None, repr=False, compare=False)
    _dph: Callable | None = field(default=None, repr=False, compare=False)
    _ddph: Callable | None = field(default=None, repr=False, compare=False)

    @staticmethod
    def quadratic() -> "HamiltonianModel":
        """Kinetic Hamiltonian ``H = p^2/2`` (so ``L = v^2/2``)."""
        # c_growth = 2 makes the kappa lower bound an identity: v^2/2 - 2 <= v^2/2.
        return HamiltonianModel(kind=KIND_QUADRATIC, a=None, l=2.0, kappa=2.0, c_growth=2.0)

    @staticmethod
    def power_law(a: float) -> "HamiltonianModel":
        """Power Hamiltonian ``H = |p|^a / a`` with conjugate exponent growth."""
        if not (a > 1.0):
            raise DomainError(f"power-law exponent must exceed 1, got {a}")
        conj = a / (a - 1.0)
        return HamiltonianModel(
            kind=KIND_POWER_LAW, a=float(a), l=conj, kappa=conj,
            c_growth=max(1.0, conj),
        )

    @staticmethod
    def from_table(
        p: np.ndarray,
        h: np.ndarray,
        *,
        l: float,
        kappa: float,
        c_growth: float,
        p_max: float = 1e3,
    ) -> "HamiltonianModel":
        """Model interpolating sampled ``(p, H(p))`` pairs with a cubic spline.

        The samples must describe a strictly convex, coercive Hamiltonian;
        the Legendre transform falls back to a safeguarded Newton search on
        the interpolant.  x-dependence is not supported for tabulated data.
        """
        from scipy.interpolate import CubicSpline

        p = np.asarray(p, dtype=float)
        h = np.asarray(h, dtype=float)
        if p.ndim != 1 or p.shape != h.shape or p.size < 4:
            raise DomainError("table requires matching 1-d arrays with >= 4 samples")
        if not np.all(np.diff(p) > 0):
            raise DomainError("table momentum grid must be strictly increasing")
        spline = CubicSpline(p, h)
        return HamiltonianModel(
            kind=KIND_TABLE, a=None, l=float(l), kappa=float(kappa),
            c_growth=float(c_growth), p_max=float(p_max),
            _h=spline, _dph=spline.derivative(1), _ddph=spline.derivative(2),
        )


@dataclass(frozen=True)
class LagrangianEval:
    """Result of the Legendre transform at one (or many) velocities."""

    L: float | np.ndarray
    DvL: float | np.ndarray
    argmax_p: float | np.ndarray


@dataclass(frozen=True)
class PerspectiveEval:
    """Perspective value and partial derivatives.

    At zero mass the value is the extended limit (0 for j = 0, +inf
    otherwise) and the derivatives are flagged undefined with NaN.
    """

    F: float | np.ndarray
    Fj: float | np.ndarray
    Fm: float | np.ndarray


def _require_finite(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def eval_hamiltonian(model: HamiltonianModel, x, p):
    """Evaluate ``(H(x, p), D_pH(x, p))``.

    ``x`` is accepted for interface uniformity; the shipped models are
    x-independent.
    """
    _require_finite("x", x)
    p = _require_finite("p", p)
    if model.kind == KIND_QUADRATIC:
        return 0.5 * p * p, p.copy() if isinstance(p, np.ndarray) else p
    if model.kind == KIND_POWER_LAW:
        a = model.a
        ap = np.abs(p)
        return ap**a / a, np.sign(p) * ap ** (a - 1.0)
    if model.kind == KIND_TABLE:
        return model._h(p), model._dph(p)
    raise DomainError(f"unknown hamiltonian kind {model.kind!r}")


def _rtsafe(f, fprime, lo: float, hi: float, tol: float, max_iter: int = 200) -> float:
    """Newton iteration safeguarded by bisection inside a sign-changing bracket."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ConvergenceError(
            f"maximizer search failed to bracket a stationary point in [{lo}, {hi}]",
            residual=float(min(abs(flo), abs(fhi))),
        )
    p = 0.5 * (lo + hi)
    step_old = abs(hi - lo)
    step = step_old
    fp = f(p)
    dfp = fprime(p)
    for _ in range(max_iter):
        newton_leaves = ((p - hi) * dfp - fp) * ((p - lo) * dfp - fp) > 0.0
        too_slow = abs(2.0 * fp) > abs(step_old * dfp)
        if newton_leaves or too_slow or dfp == 0.0:
            step_old = step
            step = 0.5 * (hi - lo)
            p = 0.5 * (lo + hi)
        else:
            step_old = step
            step = fp / dfp
            p -= step
        if abs(step) < tol:
            return p
        fp = f(p)
        dfp = fprime(p)
        if fp * flo > 0.0:
            lo = p
        else:
            hi = p
    return p


def _table_lagrangian_scalar(model: HamiltonianModel, v: float) -> tuple[float, float, float]:
    # Stationarity of the sup: -v - D_pH(p) = 0.  D_pH is strictly increasing,
    # so the root is unique; the bracket guards the coercive tails.
    bound = model.p_max
    p_star = _rtsafe(
        lambda p: -v - float(model._dph(p)),
        lambda p: -float(model._ddph(p)),
        -bound, bound, tol=1e-13 * max(1.0, bound),
    )
    lval = -v * p_star - float(model._h(p_star))
    return lval, -p_star, p_star


def lagrangian_value_deriv(model: HamiltonianModel, x, v):
    """Return ``(L(x, v), D_vL(x, v))`` for scalar or array ``v``."""
    v = _require_finite("v", v)
    if model.kind == KIND_QUADRATIC:
        return 0.5 * v * v, v + 0.0
    if model.kind == KIND_POWER_LAW:
        conj = model.l
        av = np.abs(v)
        return av**conj / conj, np.sign(v) * av ** (conj - 1.0)
    if model.kind == KIND_TABLE:
        flat = np.atleast_1d(np.asarray(v, dtype=float))
        lvals = np.empty_like(flat)
        dvals = np.empty_like(flat)
        for i, vi in enumerate(flat.ravel()):
            li, di, _ = _table_lagrangian_scalar(model, float(vi))
            lvals.ravel()[i] = li
            dvals.ravel()[i] = di
        if np.isscalar(v) or np.asarray(v).ndim == 0:
            return float(lvals[0]), float(dvals[0])
        return lvals.reshape(np.shape(v)), dvals.reshape(np.shape(v))
    raise DomainError(f"unknown hamiltonian kind {model.kind!r}")


def legendre_lagrangian(model: HamiltonianModel, x, v) -> LagrangianEval:
    """Legendre transform ``L(x,v) = sup_p(-vp - H(x,p))`` and its derivative.

    The maximizer is returned as well; by strict convexity it is unique and
    equals ``-D_vL(x, v)``.
    """
    lval, dval = lagrangian_value_deriv(model, x, v)
    return LagrangianEval(L=lval, DvL=dval, argmax_p=-np.asarray(dval) if isinstance(dval, np.ndarray) else -dval)


def perspective(model: HamiltonianModel, x, j, m) -> PerspectiveEval:
    """Perspective function ``F(x, j, m)`` with partial derivatives.

    Requires ``m >= 0``.  Zero-mass cells carry the extended value
    (0 when the flux vanishes, +inf otherwise) and NaN derivatives.
    """
    j = _require_finite("j", j)
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise DomainError("m must be finite")
    if np.any(m < 0):
        raise DomainError("m must be nonnegative")

    scalar = np.ndim(j) == 0 and np.ndim(m) == 0
    j_arr = np.atleast_1d(np.asarray(j, dtype=float))
    m_arr = np.atleast_1d(m)
    j_arr, m_arr = np.broadcast_arrays(j_arr, m_arr)

    F = np.empty(j_arr.shape)
    Fj = np.full(j_arr.shape, np.nan)
    Fm = np.full(j_arr.shape, np.nan)

    pos = m_arr > 0.0
    if np.any(pos):
        v = j_arr[pos] / m_arr[pos]
        lval, dval = lagrangian_value_deriv(model, x, v)
        F[pos] = m_arr[pos] * lval
        Fj[pos] = dval
        Fm[pos] = -dval * v + lval
    zero = ~pos
    if np.any(zero):
        F[zero] = np.where(j_arr[zero] == 0.0, 0.0, np.inf)

    if scalar:
        return PerspectiveEval(F=float(F[0]), Fj=float(Fj[0]), Fm=float(Fm[0]))
    return PerspectiveEval(F=F, Fj=Fj, Fm=Fm)


def shifted_perspective_values(model: HamiltonianModel, x, phi0_t, phi0_x, j, m, eps) -> PerspectiveEval:
    """Shifted perspective at explicit reference-derivative values.

    Evaluates F and its derivatives at the translated point
    ``(-j - phi0_t, m + phi0_x + eps)`` and flips the sign of the
    flux derivative, so the returned triple is ``(F~, F~_j, F~_m)``.
    """
    shifted_m = np.asarray(m, dtype=float) + np.asarray(phi0_x, dtype=float) + eps
    if np.any(shifted_m <= 0.0):
        bad = int(np.argmin(shifted_m))
        idx = np.unravel_index(bad, np.shape(shifted_m)) if np.ndim(shifted_m) else ()
        raise DomainError(f"nonpositive shifted mass at cell {idx}: {np.min(shifted_m)}")
    shifted_j = -np.asarray(j, dtype=float) - np.asarray(phi0_t, dtype=float)
    base = perspective(model, x, shifted_j, shifted_m)
    if isinstance(base.Fj, np.ndarray):
        return PerspectiveEval(F=base.F, Fj=-base.Fj, Fm=base.Fm)
    return PerspectiveEval(F=base.F, Fj=-base.Fj, Fm=base.Fm)


def shifted_perspective(model: HamiltonianModel, ref, t, x, j, m, eps) -> PerspectiveEval:
    """Shifted perspective ``F~`` looked up at domain point ``(t, x)``.

    Reference derivatives are taken from the cell of ``ref`` containing
    ``(t, x)``.  ``eps >= 0`` widens the mass argument.
    """
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    spec = ref.spec
    it = int(np.clip(math.floor(t / spec.dt), 0, spec.Nt - 1))
    ix = int(np.clip(math.floor(x / spec.dx), 0, spec.Nx - 1))
    try:
        return shifted_perspective_values(
            model, x,
            ref.phi0_t.values[it, ix], ref.phi0_x.values[it, ix],
            j, m, eps,
        )
    except DomainError:
        raise DomainError(
            f"nonpositive shifted mass at cell ({it}, {ix}): "
            f"m + phi0_x + eps = {m + ref.phi0_x.values[it, ix] + eps}"
        ) from None


def check_subgradient(model: HamiltonianModel, x, j, m, j0, m0) -> float:
    """Slack of the perspective subgradient inequality at base (j, m).

    Returns ``F(x, j0, m0) - F_j(x, j, m)*j0 - F_m(x, j, m)*m0``, which is
    nonnegative up to roundoff for positive masses.
    """
    if np.any(np.asarray(m) <= 0) or np.any(np.asarray(m0) <= 0):
        raise DomainError("subgradient check requires strictly positive masses")
    base = perspective(model, x, j, m)
    target = perspective(model, x, j0, m0)
    return target.F - base.Fj * j0 - base.Fm * m0
