"""Exact trig-family couplings against quadrature oracles."""

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from stokesbox.domain import BoxDomain, SpatialGrid
from stokesbox.modal import (
    TensorField,
    composite_inner,
    gamma_matrix,
    poly_trig_integral,
    trig_integral,
)


def gauss_nodes(length, n=200):
    x, w = leggauss(n)
    return 0.5 * length * (x + 1.0), 0.5 * length * w


class TestGammaMatrix:
    def test_against_gauss_quadrature(self):
        L = 1.3
        x, w = gauss_nodes(L)
        g = gamma_matrix(8, 8)
        for a in range(1, 9):
            for b in range(1, 9):
                sa = np.sqrt(2 / L) * np.sin(a * np.pi * x / L)
                cb = np.sqrt(2 / L) * np.cos(b * np.pi * x / L)
                assert np.sum(w * sa * cb) == pytest.approx(g[a - 1, b - 1], abs=2e-14)

    def test_parity_zeros(self):
        g = gamma_matrix(6, 6)
        for a in range(1, 7):
            for b in range(1, 7):
                if (a + b) % 2 == 0:
                    assert g[a - 1, b - 1] == 0.0


class TestTrigIntegrals:
    def test_sin_cos_closed_form(self):
        assert trig_integral("sin", 3, "cos", 2, 1.0) == pytest.approx(
            2 * 3 / (np.pi * (9 - 4))
        )
        assert trig_integral("cos", 2, "sin", 3, 1.0) == pytest.approx(
            trig_integral("sin", 3, "cos", 2, 1.0)
        )

    def test_against_quadrature(self):
        L = 0.9
        x, w = gauss_nodes(L)
        cases = [("sin", 1), ("sin", 4), ("cos", 0), ("cos", 3)]
        for ka, a in cases:
            for kb, b in cases:
                fa = np.sin(a * np.pi * x / L) if ka == "sin" else np.cos(a * np.pi * x / L)
                fb = np.sin(b * np.pi * x / L) if kb == "sin" else np.cos(b * np.pi * x / L)
                assert np.sum(w * fa * fb) == pytest.approx(
                    trig_integral(ka, a, kb, b, L), abs=1e-13
                )

    def test_poly_against_quadrature(self):
        L = 1.7
        x, w = gauss_nodes(L)
        for p in (0, 1, 2):
            for kind, b in (("sin", 1), ("sin", 4), ("cos", 2), ("cos", 0)):
                fb = np.sin(b * np.pi * x / L) if kind == "sin" else np.cos(b * np.pi * x / L)
                assert np.sum(w * x**p * fb) == pytest.approx(
                    poly_trig_integral(p, kind, b, L), abs=1e-12
                )


class TestTensorField:
    def setup_method(self):
        self.domain = BoxDomain((1.0, 1.3, 0.7), rho=0.8)
        rng = np.random.default_rng(0)
        self.n = 5
        self.a = TensorField(("S", "S", "S"), rng.standard_normal((5, 5, 5)), self.domain)
        self.c = TensorField(("S", "S", "S"), rng.standard_normal((5, 5, 5)), self.domain)

    def test_integration_by_parts_identity(self):
        # <dA/dx_i, C> == -<A, dC/dx_i> through the closed-form couplings
        for ax in range(3):
            lhs = self.a.differentiate(ax).inner(self.c)
            rhs = -self.a.inner(self.c.differentiate(ax))
            assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-13)

    def test_second_derivative_is_minus_k_squared(self):
        d2 = self.a.differentiate(1).differentiate(1)
        k2 = self.domain.wavenumbers(self.n, 1) ** 2
        expect = -self.a.coeffs * k2[None, :, None]
        assert np.abs(d2.coeffs - expect).max() <= 1e-12
        assert d2.kinds == self.a.kinds

    def test_laplacian_diagonal(self):
        lap = self.a.laplacian()
        lam = self.domain.eigenvalues(self.n)
        assert np.abs(lap.coeffs + lam * self.a.coeffs).max() <= 1e-12

    def test_inner_matches_fine_grid_quadrature(self):
        b = self.a.differentiate(0)
        grid = SpatialGrid(self.domain, 255)
        w1 = np.ones(257)
        w1[0] = w1[-1] = 0.5
        weights = np.einsum("i,j,k->ijk", w1, w1, w1) * grid.cell_volume
        ua = self.c.synthesize(grid, closed=True)
        ub = b.synthesize(grid, closed=True)
        quad = float(np.sum(weights * ua * ub))
        exact = float(self.c.inner(b))
        # trapezoid is O(h^2) on the mixed products
        assert quad == pytest.approx(exact, abs=2e-3 * max(1.0, abs(exact)))

    def test_projection_recovers_sine_coefficients(self):
        proj = self.a.project_sine(self.n)
        assert np.abs(proj - self.a.coeffs).max() <= 1e-12

    def test_cos_projection_matches_explicit_gamma(self):
        b = self.a.differentiate(2)  # C along axis 2
        p1 = b.project_sine(self.n)
        # project_sine contracts axis 2 with gamma(S, C)
        g = gamma_matrix(self.n, self.n)
        manual = np.einsum("ck,abk->abc", g, b.coeffs)
        assert np.abs(p1 - manual).max() <= 1e-12

    def test_composite_inner_symmetric_fast_path(self):
        terms = [self.a, self.a.differentiate(0), self.c.differentiate(1)]
        full = 0.0
        for ta in terms:
            for tb in terms:
                full += ta.inner(tb)
        fast = composite_inner(terms, terms)
        assert fast == pytest.approx(full, rel=1e-13)

    def test_leading_axes_broadcast(self):
        hist = np.stack([self.a.coeffs, 2.0 * self.a.coeffs, -self.a.coeffs])
        tf = TensorField(("S", "S", "S"), hist, self.domain)
        out = tf.inner(self.c)
        base = self.a.inner(self.c)
        assert out.shape == (3,)
        assert np.allclose(out, [base, 2 * base, -base], rtol=1e-13)
