"""Heat-kernel evaluations: free space, spectral and image Green functions."""

import numpy as np
import pytest
from scipy.special import erf

from stokesbox.domain import BoxDomain
from stokesbox.kernels import (
    TimeSeparationError,
    TruncationPolicy,
    eval_G_images,
    eval_G_spectral,
    eval_V,
    eval_Z,
    grad_x_G_spectral,
    grad_x_Z,
    grad_xi_Z,
)


UNIT = BoxDomain((1.0, 1.0, 1.0), rho=1.0)
POLICY = TruncationPolicy(n_kernel=24, r_images=3, eps_t=1e-9)
CENTER = (0.5, 0.5, 0.5)


class TestFreeSpaceKernel:
    def test_on_diagonal_value(self):
        # 1/(8 pi^{3/2}) at rho = 1, s = 1 since (4 pi)^{3/2} = 8 pi^{3/2}
        val = eval_Z(CENTER, 1.0, CENTER, 0.0, 1.0)
        assert val == pytest.approx(1.0 / (8.0 * np.pi**1.5), rel=1e-14)

    def test_one_standard_deviation(self):
        # |x-xi|^2 = 4 rho s scales the diagonal value by e^{-1}
        x = (0.5 + np.sqrt(4.0 * 0.25) / np.sqrt(3.0),) * 3
        xi = CENTER
        val = eval_Z(np.array(x), 0.75, xi, 0.5, 1.0)
        diag = eval_Z(xi, 0.75, xi, 0.5, 1.0)
        assert val == pytest.approx(diag * np.exp(-1.0), rel=1e-12)

    def test_normalization(self):
        # erf-product integral over a box wide enough that the tail is < 1e-8
        for rho, s in ((1.0, 0.3), (0.5, 1.0)):
            half = 12.0 * np.sqrt(rho * s)
            total = erf(half / (2.0 * np.sqrt(rho * s))) ** 3
            assert abs(total - 1.0) <= 1e-8

    def test_diagonal_guard(self):
        with pytest.raises(TimeSeparationError):
            eval_Z(CENTER, 1e-9, CENTER, 0.0, 1.0, eps_t=1e-6)

    def test_gradient_antisymmetry_exact(self):
        x = np.array([0.3, 0.6, 0.7])
        xi = np.array([0.5, 0.4, 0.55])
        gx = grad_x_Z(x, 0.4, xi, 0.1, 0.8)
        gxi = grad_xi_Z(x, 0.4, xi, 0.1, 0.8)
        assert np.all(gx + gxi == 0.0)

    def test_gradient_zero_at_coincident_points(self):
        assert np.all(grad_x_Z(CENTER, 0.2, CENTER, 0.0, 1.0) == 0.0)

    def test_gradient_matches_finite_difference(self):
        x = np.array([0.3, 0.6, 0.7])
        xi = np.array([0.5, 0.4, 0.55])
        g = grad_x_Z(x, 0.4, xi, 0.1, 0.8)
        h = 1e-5
        for ax in range(3):
            e = np.zeros(3)
            e[ax] = h
            fd = (
                eval_Z(x + e, 0.4, xi, 0.1, 0.8) - eval_Z(x - e, 0.4, xi, 0.1, 0.8)
            ) / (2 * h)
            assert g[ax] == pytest.approx(fd, rel=1e-8, abs=1e-10)


class TestGreenFunction:
    def test_boundary_zero_spectral(self):
        val = eval_G_spectral((0.0, 0.4, 0.6), 0.1, CENTER, 0.0, UNIT, POLICY)
        assert val == 0.0

    def test_symmetry_exact(self):
        a = np.array([0.3, 0.7, 0.45])
        b = np.array([0.6, 0.25, 0.8])
        assert eval_G_spectral(a, 0.13, b, 0.0, UNIT, POLICY) == eval_G_spectral(
            b, 0.13, a, 0.0, UNIT, POLICY
        )
        assert eval_G_images(a, 0.13, b, 0.0, UNIT, POLICY) == pytest.approx(
            eval_G_images(b, 0.13, a, 0.0, UNIT, POLICY), rel=1e-12
        )

    def test_constructions_agree(self):
        rng = np.random.default_rng(5)
        worst = 0.0
        for _ in range(25):
            x = rng.uniform(0.1, 0.9, 3)
            xi = rng.uniform(0.1, 0.9, 3)
            s = rng.uniform(0.02, 0.5)
            gs = eval_G_spectral(x, s, xi, 0.0, UNIT, POLICY)
            gi = eval_G_images(x, s, xi, 0.0, UNIT, POLICY)
            ref = max(abs(gs), eval_Z(x, s, x, 0.0, 1.0))
            worst = max(worst, abs(gs - gi) / ref)
        assert worst <= 1e-6

    def test_images_reduce_to_free_space_at_tiny_times(self):
        pol = TruncationPolicy(n_kernel=24, r_images=1, eps_t=1e-12)
        s = 1e-3 * min(UNIT.lengths) ** 2
        g = eval_G_images(CENTER, s, CENTER, 0.0, UNIT, pol)
        z = eval_Z(CENTER, s, CENTER, 0.0, 1.0)
        assert g == pytest.approx(z, rel=1e-10)

    def test_boundary_cancellation_improves_with_shells(self):
        x = np.array([0.4, 0.55, 0.6])
        xb = np.array([0.0, 0.5, 0.5])
        s = 0.2
        errs = []
        for r in (1, 2, 3):
            pol = TruncationPolicy(n_kernel=8, r_images=r, eps_t=1e-12)
            errs.append(abs(eval_G_images(x, s, xb, 0.0, UNIT, pol)))
        assert errs[2] <= errs[1] <= errs[0]
        znear = eval_Z(x, s, x, 0.0, 1.0)
        assert errs[2] / znear <= 1e-8


class TestCorrector:
    def test_equals_minus_Z_on_boundary(self):
        x = np.array([0.35, 0.6, 0.7])
        xb = np.array([0.3, 1.0, 0.6])
        s = 0.03
        v = eval_V(x, s, xb, 0.0, UNIT, POLICY)
        assert v == pytest.approx(-eval_Z(x, s, xb, 0.0, 1.0), rel=1e-8)

    def test_vanishes_toward_terminal_time(self):
        s = 1e-3
        v = eval_V(CENTER, s, CENTER, 0.0, UNIT, POLICY)
        z = eval_Z(CENTER, s, CENTER, 0.0, 1.0)
        assert abs(v) / z <= 1e-8

    def test_consistent_with_spectral_difference(self):
        x = np.array([0.3, 0.45, 0.62])
        xi = np.array([0.55, 0.5, 0.4])
        s = 0.2  # spectral branch of the hybrid
        v = eval_V(x, s, xi, 0.0, UNIT, POLICY)
        g = eval_G_spectral(x, s, xi, 0.0, UNIT, POLICY)
        z = eval_Z(x, s, xi, 0.0, 1.0)
        assert v == pytest.approx(g - z, rel=1e-12)

    def test_hybrid_branches_agree_at_crossover(self):
        s = POLICY.image_crossover * min(UNIT.lengths) ** 2
        x = np.array([0.42, 0.58, 0.66])
        gi = eval_G_images(x, s, x, 0.0, UNIT, POLICY)
        gs = eval_G_spectral(x, s, x, 0.0, UNIT, POLICY)
        assert gi == pytest.approx(gs, rel=1e-8)


class TestGreenGradient:
    def test_odd_symmetry_at_center(self):
        g = grad_x_G_spectral(CENTER, 0.1, CENTER, 0.0, UNIT, POLICY)
        assert np.abs(g).max() <= 1e-12

    def test_finite_difference(self):
        x = np.array([0.42, 0.58, 0.66])
        xi = np.array([0.3, 0.44, 0.7])
        g = grad_x_G_spectral(x, 0.13, xi, 0.0, UNIT, POLICY)
        h = 1e-5
        for ax in range(3):
            e = np.zeros(3)
            e[ax] = h
            fd = (
                eval_G_spectral(x + e, 0.13, xi, 0.0, UNIT, POLICY)
                - eval_G_spectral(x - e, 0.13, xi, 0.0, UNIT, POLICY)
            ) / (2 * h)
            assert g[ax] == pytest.approx(fd, rel=1e-7, abs=1e-9)

    def test_zero_for_boundary_source(self):
        g = grad_x_G_spectral((0.4, 0.5, 0.6), 0.1, (1.0, 0.5, 0.5), 0.0, UNIT, POLICY)
        assert np.abs(g).max() == 0.0


class TestSemigroup:
    def test_composition_identity(self):
        # int G(x,t;y,s) G(y,s;xi,tau) dy = G(x,t;xi,tau), quadrature at M=48
        from stokesbox.domain import SpatialGrid

        mq = 48
        grid = SpatialGrid(UNIT, mq)
        x = np.array([0.37, 0.52, 0.61])
        xi = np.array([0.55, 0.33, 0.72])
        t2, t1, t0 = 0.25, 0.12, 0.0
        prod = 1.0
        direct = 1.0
        for ax in range(3):
            k = np.arange(1, POLICY.n_kernel + 1) * np.pi
            nodes = grid.axis_nodes(ax)
            row_a = 2.0 * (
                np.sin(np.outer(nodes, k)) * np.exp(-(t2 - t1) * k**2) * np.sin(k * x[ax])
            ).sum(axis=1)
            row_b = 2.0 * (
                np.sin(np.outer(nodes, k)) * np.exp(-(t1 - t0) * k**2) * np.sin(k * xi[ax])
            ).sum(axis=1)
            prod *= (1.0 / (mq + 1)) * float(row_a @ row_b)
            direct *= 2.0 * float(
                (np.exp(-(t2 - t0) * k**2) * np.sin(k * x[ax]) * np.sin(k * xi[ax])).sum()
            )
        assert prod == pytest.approx(direct, rel=1e-6)


class TestPolicy:
    def test_invariants(self):
        with pytest.raises(ValueError):
            TruncationPolicy(n_kernel=0)
        with pytest.raises(ValueError):
            TruncationPolicy(r_images=0)
        with pytest.raises(ValueError):
            TruncationPolicy(eps_t=0.0)

    def test_guard_applies_to_green_functions(self):
        pol = TruncationPolicy(eps_t=1e-3)
        with pytest.raises(TimeSeparationError):
            eval_G_spectral(CENTER, 1e-4, CENTER, 0.0, UNIT, pol)
        with pytest.raises(TimeSeparationError):
            eval_G_images(CENTER, 1e-4, CENTER, 0.0, UNIT, pol)
