"""Grid containers, discrete calculus and boundary-data construction."""

import numpy as np
import pytest

from rankmfp.errors import ConfigurationError, DomainError
from rankmfp.grid import (
    BoundaryDensities,
    CellField,
    GridSpec,
    NodeField,
    build_reference_potential,
    cell_gradient,
    cell_integral,
    cumulative_trapezoid,
    density_from_builtin,
    density_from_csv,
    node_resample,
)


def test_grid_spec_geometry():
    spec = GridSpec(T=2.0, Nt=4, Nx=5)
    assert spec.dt == 0.5
    assert spec.dx == 0.2
    assert spec.t_nodes()[-1] == 2.0
    assert spec.x_cells()[0] == pytest.approx(0.1)
    assert spec.cell_measure == pytest.approx(0.1)


def test_degenerate_grids_rejected():
    with pytest.raises(ConfigurationError):
        GridSpec(T=1.0, Nt=1, Nx=8)
    with pytest.raises(ConfigurationError):
        GridSpec(T=-1.0, Nt=4, Nx=4)


def test_fields_validate_shape_and_finiteness():
    spec = GridSpec(T=1.0, Nt=3, Nx=3)
    with pytest.raises(DomainError):
        NodeField(spec, np.zeros((3, 3)))
    bad = np.zeros((4, 4))
    bad[1, 1] = np.nan
    with pytest.raises(DomainError):
        NodeField(spec, bad)
    with pytest.raises(DomainError):
        CellField(spec, np.zeros((4, 4)))


class TestCellCalculus:
    spec = GridSpec(T=2.0, Nt=5, Nx=7)

    def test_affine_exactness(self):
        f = NodeField.from_function(self.spec, lambda t, x: x)
        ft, fx = cell_gradient(f)
        assert np.allclose(ft.values, 0.0, atol=1e-14)
        assert np.allclose(fx.values, 1.0, atol=1e-14)
        g = NodeField.from_function(self.spec, lambda t, x: t)
        gt, gx = cell_gradient(g)
        assert np.allclose(gt.values, 1.0, atol=1e-14)
        assert np.allclose(gx.values, 0.0, atol=1e-14)

    def test_bilinear_exactness(self):
        f = NodeField.from_function(self.spec, lambda t, x: t * x)
        ft, fx = cell_gradient(f)
        tt, xx = np.meshgrid(self.spec.t_cells(), self.spec.x_cells(), indexing="ij")
        assert np.allclose(ft.values, xx, atol=1e-14)
        assert np.allclose(fx.values, tt, atol=1e-14)

    def test_cell_integral_area(self):
        ones = CellField(self.spec, np.ones((5, 7)))
        assert cell_integral(ones) == pytest.approx(2.0, abs=1e-14)
        assert cell_integral(CellField.zeros(self.spec)) == 0.0

    def test_cell_integral_composes_with_gradient(self):
        f = NodeField.from_function(self.spec, lambda t, x: x)
        _, fx = cell_gradient(f)
        assert cell_integral(fx) == pytest.approx(self.spec.T, abs=1e-14)

    def test_summation_by_parts_depends_only_on_boundary(self):
        rng = np.random.default_rng(0)
        spec = self.spec

        def pairing(f, g):
            ft, fx = cell_gradient(NodeField(spec, f))
            gt, gx = cell_gradient(NodeField(spec, g))
            return cell_integral(CellField(spec, fx.values * gt.values - ft.values * gx.values))

        f = rng.normal(size=(6, 8))
        g = rng.normal(size=(6, 8))
        v1 = pairing(f, g)
        f2, g2 = f.copy(), g.copy()
        f2[1:-1, 1:-1] = rng.normal(size=(4, 6))
        g2[1:-1, 1:-1] = rng.normal(size=(4, 6))
        v2 = pairing(f2, g2)
        scale = 1.0 + abs(v1)
        assert abs(v1 - v2) <= 1e-12 * scale

    def test_mass_telescoping_for_zero_lateral_rows(self):
        rng = np.random.default_rng(1)
        w = rng.normal(size=(6, 8))
        w[:, 0] = 0.0
        w[:, -1] = 0.0
        _, wx = cell_gradient(NodeField(self.spec, w))
        assert np.max(np.abs(np.sum(wx.values, axis=1))) <= 1e-12

    def test_node_resample_preserves_row_mass(self):
        rng = np.random.default_rng(2)
        m = CellField(self.spec, np.abs(rng.normal(1.0, 0.3, (5, 7))))
        nodes = node_resample(m)
        for i in (0, 2, 5):
            row = nodes.values[i]
            trap = (0.5 * (row[0] + row[-1]) + np.sum(row[1:-1])) * self.spec.dx
            cell_row = m.values[min(max(i - 1, 0), 4)]
            # interior node rows mix two cell rows; compare against their mean
            if i == 0:
                expected = np.sum(m.values[0]) * self.spec.dx
            elif i == 5:
                expected = np.sum(m.values[-1]) * self.spec.dx
            else:
                expected = 0.5 * (np.sum(m.values[i - 1]) + np.sum(m.values[i])) * self.spec.dx
            assert trap == pytest.approx(expected, abs=1e-14)


class TestBoundaryDensities:
    spec = GridSpec(T=1.0, Nt=4, Nx=50)

    def test_uniform_builtin(self):
        x = self.spec.x_nodes()
        assert np.allclose(density_from_builtin("uniform", x), 1.0)

    def test_gauss_and_sin_bump_parse(self):
        x = self.spec.x_nodes()
        g = density_from_builtin("gauss(0.5, 0.1)", x)
        assert np.argmax(g) == 25
        s = density_from_builtin("sin-bump(0.5)", x)
        assert np.min(s) > 0.0

    def test_builtin_validation(self):
        x = self.spec.x_nodes()
        with pytest.raises(ConfigurationError):
            density_from_builtin("sin-bump(1.5)", x)
        with pytest.raises(ConfigurationError):
            density_from_builtin("gauss(0.5)", x)
        with pytest.raises(ConfigurationError):
            density_from_builtin("mystery", x)

    def test_normalization_and_positivity(self):
        bd = BoundaryDensities.from_specs(self.spec, "gauss(0.3,0.2)", "sin-bump(0.4)")
        for m in (bd.m0, bd.mT):
            assert np.min(m) > 0.0
            assert cumulative_trapezoid(m, self.spec.dx)[-1] == pytest.approx(1.0, abs=1e-12)

    def test_nonpositive_density_rejected(self):
        vals = np.ones(self.spec.Nx + 1)
        vals[3] = 0.0
        with pytest.raises(DomainError):
            BoundaryDensities(self.spec, vals, np.ones(self.spec.Nx + 1))

    def test_csv_profile_roundtrip(self, tmp_path):
        path = tmp_path / "density.csv"
        path.write_text("x,density\n0.0,1.0\n0.5,2.0\n1.0,1.0\n")
        x = self.spec.x_nodes()
        d = density_from_csv(path, x)
        assert d[0] == 1.0
        assert d[25] == 2.0

    def test_csv_validation(self, tmp_path):
        bad_cols = tmp_path / "bad.csv"
        bad_cols.write_text("a,b\n0,1\n1,1\n")
        with pytest.raises(ConfigurationError):
            density_from_csv(bad_cols, self.spec.x_nodes())
        short = tmp_path / "short.csv"
        short.write_text("x,density\n0.2,1.0\n1.0,1.0\n")
        with pytest.raises(ConfigurationError):
            density_from_csv(short, self.spec.x_nodes())
        unsorted = tmp_path / "unsorted.csv"
        unsorted.write_text("x,density\n0.0,1.0\n0.7,1.0\n0.4,1.0\n1.0,1.0\n")
        with pytest.raises(ConfigurationError):
            density_from_csv(unsorted, self.spec.x_nodes())


class TestReferencePotential:
    def test_uniform_endpoints_give_identity(self):
        spec = GridSpec(T=1.0, Nt=8, Nx=8)
        bd = BoundaryDensities.from_specs(spec, "uniform", "uniform")
        ref = build_reference_potential(spec, bd)
        assert np.allclose(ref.phi0.values, spec.x_nodes()[None, :], atol=1e-14)
        assert np.allclose(ref.phi0_t.values, 0.0, atol=1e-14)
        assert np.allclose(ref.phi0_x.values, 1.0, atol=1e-14)
        assert ref.min_phi0_x == pytest.approx(1.0)

    def test_lateral_values_exact(self):
        spec = GridSpec(T=3.0, Nt=6, Nx=30)
        bd = BoundaryDensities.from_specs(spec, "gauss(0.4,0.25)", "sin-bump(0.3)")
        ref = build_reference_potential(spec, bd)
        assert np.max(np.abs(ref.phi0.values[:, 0])) <= 1e-12
        assert np.max(np.abs(ref.phi0.values[:, -1] - 1.0)) <= 1e-12

    def test_interpolates_boundary_rows(self):
        spec = GridSpec(T=2.0, Nt=5, Nx=40)
        bd = BoundaryDensities.from_specs(spec, "gauss(0.5,0.2)", "uniform")
        ref = build_reference_potential(spec, bd)
        c0 = cumulative_trapezoid(bd.m0, spec.dx)
        cT = cumulative_trapezoid(bd.mT, spec.dx)
        assert np.allclose(ref.phi0.values[0], c0 / c0[-1], atol=1e-13)
        assert np.allclose(ref.phi0.values[-1], cT / cT[-1], atol=1e-13)

    def test_sin_bump_against_fine_quadrature(self):
        spec = GridSpec(T=1.0, Nt=4, Nx=64)
        bd = BoundaryDensities.from_specs(spec, "uniform", "sin-bump(0.5)")
        ref = build_reference_potential(spec, bd)
        fine = np.linspace(0.0, 1.0, 100001)
        density = 1.0 + 0.5 * np.sin(2 * np.pi * fine)
        mass = np.trapezoid(density, fine)
        target = np.trapezoid(density[: 50001], fine[: 50001]) / mass
        assert ref.phi0.values[-1, 32] == pytest.approx(target, abs=2.0 / spec.Nx**2)

    def test_linearity_in_boundary_data(self):
        spec = GridSpec(T=1.0, Nt=4, Nx=16)
        x = spec.x_nodes()
        a = 1.0 + 0.3 * np.sin(2 * np.pi * x)
        b = np.exp(-x)
        bd_a = BoundaryDensities(spec, a, a)
        bd_b = BoundaryDensities(spec, b, b)
        mix = 0.5 * bd_a.m0 + 0.5 * bd_b.m0
        bd_mix = BoundaryDensities(spec, mix, mix)
        ref_a = build_reference_potential(spec, bd_a)
        ref_b = build_reference_potential(spec, bd_b)
        ref_mix = build_reference_potential(spec, bd_mix)
        blended = 0.5 * ref_a.phi0.values + 0.5 * ref_b.phi0.values
        assert np.allclose(ref_mix.phi0.values, blended, atol=1e-12)

    def test_min_slope_dominated_by_boundary_minimum(self):
        spec = GridSpec(T=1.0, Nt=6, Nx=24)
        bd = BoundaryDensities.from_specs(spec, "gauss(0.5,0.15)", "uniform")
        ref = build_reference_potential(spec, bd)
        floor = min(np.min(bd.m0), np.min(bd.mT))
        assert ref.min_phi0_x >= floor - spec.dx
