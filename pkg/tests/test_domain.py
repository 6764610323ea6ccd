"""Basis, grid, and transform contracts."""

import numpy as np
import pytest

from stokesbox.domain import (
    BoxDomain,
    GridField,
    SpaceTimeField,
    SpatialGrid,
    SpectralField,
    TimeGrid,
    enumerate_modes,
    eval_eigenfunction,
    forward_sine,
    inverse_sine,
    l2_norm,
    l2_norm_spacetime,
)


def unit_cube():
    return BoxDomain((1.0, 1.0, 1.0), rho=1.0)


def sample_mode(grid, index, n_modes=None):
    n = n_modes or max(index)
    tabs = [grid.sine_table(n, ax)[:, index[ax] - 1] for ax in range(3)]
    return np.einsum("i,j,k->ijk", *tabs)


class TestDomainTypes:
    def test_rejects_nonpositive_lengths(self):
        with pytest.raises(ValueError):
            BoxDomain((1.0, 0.0, 1.0))
        with pytest.raises(ValueError):
            BoxDomain((1.0, 1.0, 1.0), rho=-2.0)

    def test_time_grid_invariants(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 4)
        with pytest.raises(ValueError):
            TimeGrid(1.0, 1)
        tg = TimeGrid(0.5, 128)
        assert tg.dt == pytest.approx(0.5 / 128)
        assert len(tg.knots) == 129

    def test_grid_nodes_strictly_interior(self):
        g = SpatialGrid(BoxDomain((1.0, 2.0, 0.5)), 7)
        for ax in range(3):
            nodes = g.axis_nodes(ax)
            assert nodes[0] > 0 and nodes[-1] < g.domain.lengths[ax]
            spacing = np.diff(nodes)
            assert np.allclose(spacing, spacing[0])


class TestModes:
    def test_unit_cube_ground_mode(self):
        modes = enumerate_modes(unit_cube(), 1)
        assert len(modes) == 1
        assert modes[0].index == (1, 1, 1)
        assert modes[0].eigenvalue == pytest.approx(3 * np.pi**2, abs=1e-12)

    def test_flat_box_ground_mode(self):
        modes = enumerate_modes(BoxDomain((1.0, 1.0, 2.0)), 1)
        assert modes[0].eigenvalue == pytest.approx(np.pi**2 * 2.25, abs=1e-12)

    def test_mode_count_and_order(self):
        modes = enumerate_modes(unit_cube(), 4)
        assert len(modes) == 64
        assert min(m.eigenvalue for m in modes) == pytest.approx(3 * np.pi**2)
        indices = [m.index for m in modes]
        assert indices == sorted(indices)  # lexicographic
        assert all(1 <= n <= 4 for idx in indices for n in idx)

    def test_rejects_bad_count(self):
        with pytest.raises(ValueError):
            enumerate_modes(unit_cube(), 0)

    def test_eigenvalue_matches_formula(self):
        d = BoxDomain((1.0, 1.5, 0.8))
        for m in enumerate_modes(d, 3):
            lam = sum((m.index[i] * np.pi / d.lengths[i]) ** 2 for i in range(3))
            assert m.eigenvalue == pytest.approx(lam, rel=1e-15)


class TestEigenfunction:
    def test_center_value(self):
        d = unit_cube()
        m = enumerate_modes(d, 1)[0]
        assert eval_eigenfunction(m, (0.5, 0.5, 0.5), d) == pytest.approx(
            2 * np.sqrt(2), rel=1e-12
        )

    def test_face_zero(self):
        d = unit_cube()
        m = enumerate_modes(d, 2)[5]
        assert eval_eigenfunction(m, (0.0, 0.3, 0.7), d) == pytest.approx(0.0, abs=1e-15)

    def test_quarter_point_second_mode(self):
        d = unit_cube()
        m = [mm for mm in enumerate_modes(d, 2) if mm.index == (2, 2, 2)][0]
        assert eval_eigenfunction(m, (0.25, 0.25, 0.25), d) == pytest.approx(
            2 * np.sqrt(2), rel=1e-12
        )

    def test_outside_box_rejected(self):
        d = unit_cube()
        m = enumerate_modes(d, 1)[0]
        with pytest.raises(ValueError):
            eval_eigenfunction(m, (1.5, 0.5, 0.5), d)

    def test_unit_l2_norm(self):
        # continuous normalization checked by the transform quadrature
        d = BoxDomain((1.0, 1.3, 0.6))
        g = SpatialGrid(d, 24)
        f = GridField(sample_mode(g, (2, 1, 3)), g)
        assert l2_norm(f) == pytest.approx(1.0, abs=1e-12)


class TestTransforms:
    def test_mode_sample_gives_unit_coefficient(self):
        d = unit_cube()
        g = SpatialGrid(d, 16)
        f = GridField(sample_mode(g, (2, 3, 1), 4), g)
        spec = forward_sine(f, 4)
        expected = np.zeros((4, 4, 4))
        expected[1, 2, 0] = 1.0
        assert np.abs(spec.coeffs - expected).max() <= 1e-12

    def test_zero_field(self):
        g = SpatialGrid(unit_cube(), 8)
        spec = forward_sine(GridField(np.zeros((8, 8, 8)), g))
        assert np.all(spec.coeffs == 0.0)

    def test_band_limited_round_trip(self):
        # oracle: direct double-loop transform at small M
        d = BoxDomain((1.0, 0.7, 1.4))
        m, n = 6, 4
        g = SpatialGrid(d, m)
        rng = np.random.default_rng(11)
        coeffs = rng.standard_normal((n, n, n))
        fld = inverse_sine(SpectralField(coeffs, d), g)
        spec = forward_sine(fld, n)
        assert np.abs(spec.coeffs - coeffs).max() <= 1e-12
        back = inverse_sine(spec, g)
        assert np.abs(back.values - fld.values).max() <= 1e-12

    def test_forward_against_direct_quadrature(self):
        d = BoxDomain((1.0, 0.7, 1.4))
        m = 5
        g = SpatialGrid(d, m)
        rng = np.random.default_rng(7)
        values = rng.standard_normal((m, m, m))
        spec = forward_sine(GridField(values, g))
        # direct loops: c_n = h^3 sum_j f(x_j) u_n(x_j)
        tabs = [g.sine_table(m, ax) for ax in range(3)]
        direct = np.zeros((m, m, m))
        for a in range(m):
            for b in range(m):
                for c in range(m):
                    basis = np.einsum("i,j,k->ijk", tabs[0][:, a], tabs[1][:, b], tabs[2][:, c])
                    direct[a, b, c] = g.cell_volume * np.sum(values * basis)
        assert np.abs(spec.coeffs - direct).max() <= 1e-12

    def test_rejects_m_smaller_than_n(self):
        g = SpatialGrid(unit_cube(), 4)
        with pytest.raises(ValueError):
            forward_sine(GridField(np.zeros((4, 4, 4)), g), 6)

    def test_discrete_orthonormality(self):
        d = BoxDomain((1.0, 1.1, 0.9))
        n, m = 4, 9
        g = SpatialGrid(d, m)
        worst = 0.0
        samples = {}
        for i1 in range(1, n + 1):
            for i2 in range(1, n + 1):
                for i3 in range(1, n + 1):
                    samples[(i1, i2, i3)] = sample_mode(g, (i1, i2, i3), n)
        keys = list(samples)
        for a in keys:
            for b in keys:
                val = g.cell_volume * np.sum(samples[a] * samples[b])
                expect = 1.0 if a == b else 0.0
                worst = max(worst, abs(val - expect))
        assert worst <= 1e-12


class TestNorms:
    def test_parseval_three_four_five(self):
        d = unit_cube()
        g = SpatialGrid(d, 12)
        f = 3.0 * sample_mode(g, (1, 1, 1), 3) + 4.0 * sample_mode(g, (2, 1, 3), 3)
        assert l2_norm(GridField(f, g)) == pytest.approx(5.0, abs=1e-12)

    def test_zero_norm(self):
        g = SpatialGrid(unit_cube(), 6)
        assert l2_norm(GridField(np.zeros((6, 6, 6)), g)) == 0.0

    def test_spacetime_norm_constant_history(self):
        # field equal to u_n at every knot: L2(Q_t) norm = sqrt(t_final)
        d = unit_cube()
        g = SpatialGrid(d, 10)
        tg = TimeGrid(0.5, 16)
        v = np.repeat(sample_mode(g, (1, 2, 1), 2)[None], tg.n_knots, axis=0)
        fld = SpaceTimeField(v, g, tg)
        assert l2_norm_spacetime(fld) == pytest.approx(np.sqrt(0.5), rel=1e-12)


class TestEigenRelation:
    def test_fd_laplacian_second_order(self):
        # centered FD Laplacian of u_n -> -lambda_n u_n at O(h^2); error ratio
        # between M and 2M+1 grids must sit in [3.6, 4.4]
        d = unit_cube()
        index = (2, 1, 3)
        lam = sum((index[i] * np.pi) ** 2 for i in range(3))

        def fd_error(m):
            g = SpatialGrid(d, m)
            u = sample_mode(g, index, 3)
            h = g.spacings[0]
            padded = np.zeros((m + 2, m + 2, m + 2))
            padded[1:-1, 1:-1, 1:-1] = u
            lap = (
                padded[2:, 1:-1, 1:-1] + padded[:-2, 1:-1, 1:-1]
                + padded[1:-1, 2:, 1:-1] + padded[1:-1, :-2, 1:-1]
                + padded[1:-1, 1:-1, 2:] + padded[1:-1, 1:-1, :-2]
                - 6.0 * u
            ) / h**2
            return np.abs(lap + lam * u).max()

        m = 24
        ratio = fd_error(m) / fd_error(2 * m + 1)
        assert 3.6 <= ratio <= 4.4
