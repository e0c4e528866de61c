"""Uniform space-time grid, field containers, discrete calculus and boundary data.

The domain (0, T) x (0, 1) is discretized by Nt x Nx congruent cells.
Scalar unknowns live on nodes; derivative and density quantities live on
cells.  Cell derivatives use the two-edge averaged stencil

    ft(i+1/2, k+1/2) = (f[i+1,k] + f[i+1,k+1] - f[i,k] - f[i,k+1]) / (2 dt)

(analogously in x), which is exact for bilinear fields and makes the
discrete summation-by-parts identities hold to roundoff -- the operator
monotonicity checks rely on this.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on (0, T) x (0, 1) with Nt time and Nx space intervals."""

    T: float
    Nt: int
    Nx: int

    def __post_init__(self):
        if not (self.T > 0):
            raise ConfigurationError(f"horizon T must be positive, got {self.T}")
        if self.Nt < 2 or self.Nx < 2:
            raise ConfigurationError(
                f"grid needs at least one interior row/column: Nt={self.Nt}, Nx={self.Nx}"
            )

    @property
    def dt(self) -> float:
        return self.T / self.Nt

    @property
    def dx(self) -> float:
        return 1.0 / self.Nx

    def t_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.Nt + 1)

    def x_nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.Nx + 1)

    def t_cells(self) -> np.ndarray:
        return (np.arange(self.Nt) + 0.5) * self.dt

    def x_cells(self) -> np.ndarray:
        return (np.arange(self.Nx) + 0.5) * self.dx

    @property
    def cell_measure(self) -> float:
        return self.dt * self.dx


def _check_values(spec: GridSpec, values: np.ndarray, shape: tuple, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != shape:
        raise DomainError(f"{what} expects shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} entries must be finite")
    return arr


@dataclass(frozen=True)
class NodeField:
    """Scalar samples at grid nodes, shape (Nt+1, Nx+1)."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values",
            _check_values(self.spec, self.values, (self.spec.Nt + 1, self.spec.Nx + 1), "NodeField"),
        )

    @classmethod
    def zeros(cls, spec: GridSpec) -> "NodeField":
        return cls(spec, np.zeros((spec.Nt + 1, spec.Nx + 1)))

    @classmethod
    def from_function(cls, spec: GridSpec, fn) -> "NodeField":
        tt, xx = np.meshgrid(spec.t_nodes(), spec.x_nodes(), indexing="ij")
        return cls(spec, np.asarray(fn(tt, xx), dtype=float))


@dataclass(frozen=True)
class CellField:
    """Scalar samples at cell centers, shape (Nt, Nx)."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values",
            _check_values(self.spec, self.values, (self.spec.Nt, self.spec.Nx), "CellField"),
        )

    @classmethod
    def zeros(cls, spec: GridSpec) -> "CellField":
        return cls(spec, np.zeros((spec.Nt, spec.Nx)))

    @classmethod
    def from_function(cls, spec: GridSpec, fn) -> "CellField":
        tt, xx = np.meshgrid(spec.t_cells(), spec.x_cells(), indexing="ij")
        return cls(spec, np.asarray(fn(tt, xx), dtype=float))


def cell_gradient_values(spec: GridSpec, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cell-collocated (ft, fx) of a node array; exact for bilinear fields."""
    ft = (f[1:, :-1] + f[1:, 1:] - f[:-1, :-1] - f[:-1, 1:]) / (2.0 * spec.dt)
    fx = (f[:-1, 1:] + f[1:, 1:] - f[:-1, :-1] - f[1:, :-1]) / (2.0 * spec.dx)
    return ft, fx


def cell_gradient(f: NodeField) -> tuple[CellField, CellField]:
    ft, fx = cell_gradient_values(f.spec, f.values)
    return CellField(f.spec, ft), CellField(f.spec, fx)


def cell_average_values(f: np.ndarray) -> np.ndarray:
    return 0.25 * (f[:-1, :-1] + f[:-1, 1:] + f[1:, :-1] + f[1:, 1:])


def cell_average(f: NodeField) -> CellField:
    return CellField(f.spec, cell_average_values(f.values))


def cell_integral(g: CellField) -> float:
    """Quadrature over the space-time domain: cell sum times dt*dx."""
    return float(np.sum(g.values) * g.spec.cell_measure)


def node_resample(g: CellField) -> NodeField:
    """Average cell values back onto nodes (one-sided at the boundary).

    Row sums are preserved exactly under the trapezoid rule, so resampling
    a unit-mass density row keeps its integral at 1 to roundoff.
    """
    spec = g.spec
    v = g.values
    mid_x = np.empty((spec.Nt, spec.Nx + 1))
    mid_x[:, 0] = v[:, 0]
    mid_x[:, -1] = v[:, -1]
    mid_x[:, 1:-1] = 0.5 * (v[:, :-1] + v[:, 1:])
    out = np.empty((spec.Nt + 1, spec.Nx + 1))
    out[0] = mid_x[0]
    out[-1] = mid_x[-1]
    out[1:-1] = 0.5 * (mid_x[:-1] + mid_x[1:])
    return NodeField(spec, out)


def cumulative_trapezoid(values: np.ndarray, dx: float) -> np.ndarray:
    """Cumulative trapezoid integral starting at 0, same length as input."""
    out = np.empty_like(values, dtype=float)
    out[0] = 0.0
    np.cumsum(0.5 * (values[1:] + values[:-1]) * dx, out=out[1:])
    return out


# -- boundary densities ------------------------------------------------------

_BUILTIN_RE = re.compile(r"^\s*([a-zA-Z-]+)\s*(?:\(([^)]*)\))?\s*$")


def density_from_builtin(name: str, x: np.ndarray) -> np.ndarray:
    """Evaluate a named builtin density profile on the node coordinates.

    Supported: ``uniform``, ``gauss(center,width)`` (truncated to [0,1],
    renormalized downstream) and ``sin-bump(amplitude)`` with |amplitude| < 1.
    """
    m = _BUILTIN_RE.match(name)
    if not m:
        raise ConfigurationError(f"unparseable density spec {name!r}")
    kind, args = m.group(1).lower(), m.group(2)
    params = [float(s) for s in args.split(",")] if args else []
    if kind == "uniform":
        if params:
            raise ConfigurationError("uniform takes no parameters")
        return np.ones_like(x)
    if kind == "gauss":
        if len(params) != 2:
            raise ConfigurationError("gauss expects (center, width)")
        center, width = params
        if width <= 0:
            raise ConfigurationError("gauss width must be positive")
        return np.exp(-0.5 * ((x - center) / width) ** 2)
    if kind == "sin-bump":
        if len(params) != 1:
            raise ConfigurationError("sin-bump expects (amplitude)")
        (amp,) = params
        if not abs(amp) < 1.0:
            raise ConfigurationError("sin-bump amplitude must satisfy |a| < 1 for positivity")
        return 1.0 + amp * np.sin(2.0 * math.pi * x)
    raise ConfigurationError(f"unknown builtin density {kind!r}")


def density_from_csv(path: str | Path, x: np.ndarray) -> np.ndarray:
    """Load a density profile from CSV and interpolate onto ``x``.

    Two layouts are accepted: a two-column profile with header ``x`` and
    ``density`` (strictly increasing abscissae covering [0, 1]), or an
    emitted density field whose header starts with ``t\\x`` followed by the
    space coordinates, in which case the first data row (t = 0) is used.
    Piecewise-linear inputs are accepted even though the classical theory
    asks for C^1 data; callers record that regularity caveat in run reports.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"{path}: empty file") from None
        if header and header[0].strip().lower().startswith("t\\x"):
            xs = np.asarray([float(c) for c in header[1:]])
            try:
                first = next(reader)
            except StopIteration:
                raise ConfigurationError(f"{path}: field file has no data rows") from None
            ds = np.asarray([float(c) for c in first[1:]])
        else:
            names = [h.strip().lower() for h in header]
            if "x" not in names or "density" not in names:
                raise ConfigurationError(
                    f"{path}: expected header with columns 'x' and 'density'"
                )
            xi, di = names.index("x"), names.index("density")
            xs, ds = [], []
            for row in reader:
                if not row:
                    continue
                xs.append(float(row[xi]))
                ds.append(float(row[di]))
            xs = np.asarray(xs)
            ds = np.asarray(ds)
    if xs.size < 2 or not np.all(np.diff(xs) > 0):
        raise ConfigurationError(f"{path}: x column must be strictly increasing with >= 2 rows")
    if xs[0] > 1e-12 or xs[-1] < 1.0 - 1e-12:
        raise ConfigurationError(f"{path}: x column must cover [0, 1], got [{xs[0]}, {xs[-1]}]")
    return np.interp(x, xs, ds)


def resolve_density(spec_text: str, x: np.ndarray) -> np.ndarray:
    """Dispatch a density spec string: ``csv:<path>`` or a builtin name."""
    if spec_text.strip().lower().startswith("csv:"):
        return density_from_csv(spec_text.strip()[4:].strip(), x)
    return density_from_builtin(spec_text, x)


@dataclass(frozen=True)
class BoundaryDensities:
    """Initial and terminal densities on space nodes, unit mass, positive."""

    spec: GridSpec
    m0: np.ndarray
    mT: np.ndarray

    def __post_init__(self):
        for name in ("m0", "mT"):
            raw = np.asarray(getattr(self, name), dtype=float)
            if raw.shape != (self.spec.Nx + 1,):
                raise DomainError(f"{name} must have shape ({self.spec.Nx + 1},), got {raw.shape}")
            if not np.all(np.isfinite(raw)):
                raise DomainError(f"{name} entries must be finite")
            if np.min(raw) <= 0.0:
                raise DomainError(f"{name} must be strictly positive, min = {np.min(raw)}")
            mass = cumulative_trapezoid(raw, self.spec.dx)[-1]
            object.__setattr__(self, name, raw / mass)

    @classmethod
    def from_specs(cls, spec: GridSpec, m0_spec: str, mT_spec: str) -> "BoundaryDensities":
        x = spec.x_nodes()
        return cls(spec, resolve_density(m0_spec, x), resolve_density(mT_spec, x))


@dataclass(frozen=True)
class ReferencePotential:
    """Interpolating potential between the boundary cumulative distributions."""

    spec: GridSpec
    phi0: NodeField
    phi0_t: CellField
    phi0_x: CellField
    min_phi0_x: float


def build_reference_potential(spec: GridSpec, bd: BoundaryDensities) -> ReferencePotential:
    """Linear-in-time interpolation of the cumulative boundary distributions.

    Node values are phi0(t, x) = (1 - t/T) C0(x) + (t/T) CT(x) where C0 and
    CT are cumulative trapezoid integrals renormalized so the right edge is
    exactly 1; cell derivatives use the standard two-edge averaged stencil.
    """
    c0 = cumulative_trapezoid(bd.m0, spec.dx)
    cT = cumulative_trapezoid(bd.mT, spec.dx)
    c0 = c0 / c0[-1]
    cT = cT / cT[-1]
    w1 = spec.t_nodes() / spec.T
    w0 = 1.0 - w1
    nodes = w0[:, None] * c0[None, :] + w1[:, None] * cT[None, :]
    phi0 = NodeField(spec, nodes)
    phi0_t, phi0_x = cell_gradient(phi0)
    return ReferencePotential(
        spec=spec, phi0=phi0, phi0_t=phi0_t, phi0_x=phi0_x,
        min_phi0_x=float(np.min(phi0_x.values)),
    )
