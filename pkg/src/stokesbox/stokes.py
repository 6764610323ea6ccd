"""Pressure and velocity pipeline for the linear Stokes system on the box.

Given forcing w with zero initial and boundary data for u, the pipeline
computes, in order:

1. the divergence-weighted heat potential
   ``S(x,t) = int_0^t int_Omega sum_i dG/dx_i(x,t;xi,tau) w_i(xi,tau) dxi dtau``,
   realized per mode: S = sum_n sum_i du_n/dx_i(x) * h_{i,n}(t) with
   h' = w_{i,n} - rho*lambda_n*h, h(0) = 0 (this equals the divergence of the
   componentwise heat potential of w, by term-wise differentiation);
2. its exact time derivative dS/dt from the modal ODE right-hand side;
3. the pressure ``p = -d/dt Lap^{-1} S + rho S`` with the inverse Dirichlet
   Laplacian applied spectrally to dS/dt (the elliptic solve commutes with
   d/dt since t is a parameter);
4. the pressure gradient, term-wise analytic (no grid finite differences);
5. the velocity u_i as the heat potential of (w_i + dp/dx_i), and
   independently by the integrated-by-parts route
   u_i = heat_potential(w_i) - sum_n u_n(x) conv(exp(-rho lambda_n .), q_{i,n})
   with q_{i,n}(tau) = <du_n/dx_i, p(.,tau)>.

Sign convention: the momentum equation is du_i/dt - rho*Lap(u_i) - dp/dx_i
= w_i (the pressure gradient enters with a minus sign on the left), so the
velocity forcing is w_i + dp/dx_i.  Map to the textbook Stokes convention by
p -> -p.

All inner products against the trig families use the exact closed-form
couplings from :mod:`stokesbox.modal`; this is what keeps the two velocity
routes in agreement to roundoff (grid quadrature of the cosine-type factors
would inject O(h) boundary errors).  Projections of *sampled* data (the
forcing) use the fast sine transform.

Everything here is linear in w; stages are pure; mode loops may be chunked
arbitrarily without changing results (fixed reduction order per chunk).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import (
    BoxDomain,
    GridField,
    SpaceTimeField,
    SpatialGrid,
    TimeGrid,
    forward_sine,
)
from .heat import etd_convolve, fd_time_derivative
from .modal import SINE, TensorField, composite_inner, composite_synthesize

__all__ = [
    "SourceDecomposition",
    "PressureResult",
    "VelocityResult",
    "StokesSolver",
]

_SSS = (SINE, SINE, SINE)


def _kind_with_cos(axis: int) -> tuple[str, str, str]:
    kinds = ["S", "S", "S"]
    kinds[axis] = "C"
    return tuple(kinds)


@dataclass
class SourceDecomposition:
    """Per-mode data behind S: forcing coefficients and convolved responses.

    ``w_coeffs`` and ``response`` have layout (K+1, 3, N, N, N); the response
    satisfies h(0) = 0 and the exponential update of the heat integrator.
    """

    w_coeffs: np.ndarray
    response: np.ndarray
    domain: BoxDomain
    times: TimeGrid
    eigenvalues: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.w_coeffs.shape[-1]

    def rate_coeffs(self) -> np.ndarray:
        """Exact modal d/dt of the responses: w - rho*lambda*h."""
        return self.w_coeffs - self.domain.rho * self.eigenvalues * self.response

    def terms(self, which: np.ndarray) -> list[TensorField]:
        """S-style tensor families sum_i d/dx_i (sine synthesis of which[:, i])."""
        return [
            TensorField(_SSS, which[:, i], self.domain).differentiate(i)
            for i in range(3)
        ]


@dataclass
class PressureResult:
    """Pressure in modal form: sine part (from -Lap^{-1} dS/dt) plus rho*S part."""

    sine_coeffs: np.ndarray  # (K+1, N, N, N), coefficients w.r.t. u_n
    source: SourceDecomposition
    domain: BoxDomain
    grid: SpatialGrid
    times: TimeGrid
    diagnostics: dict = field(default_factory=dict)

    def terms(self, k: slice | None = None) -> list[TensorField]:
        """Tensor families of p at all knots (or a knot slice)."""
        sl = slice(None) if k is None else k
        rho = self.domain.rho
        out = [TensorField(_SSS, self.sine_coeffs[sl], self.domain)]
        for i in range(3):
            out.append(
                TensorField(_SSS, rho * self.source.response[sl, i], self.domain)
                .differentiate(i)
            )
        return out

    def gradient_terms(self, axis: int) -> list[TensorField]:
        """Tensor families of dp/dx_axis, term-wise analytic."""
        return [t.differentiate(axis) for t in self.terms()]

    def samples(self, closed: bool = False) -> SpaceTimeField | np.ndarray:
        vals = composite_synthesize(self.terms(), self.grid, closed)
        if closed:
            return vals
        return SpaceTimeField(vals, self.grid, self.times)

    def gradient_samples(self, closed: bool = False) -> SpaceTimeField | np.ndarray:
        comps = [
            composite_synthesize(self.gradient_terms(i), self.grid, closed)
            for i in range(3)
        ]
        vals = np.stack(comps, axis=1)
        if closed:
            return vals
        return SpaceTimeField(vals, self.grid, self.times)


@dataclass
class VelocityResult:
    """Velocity in modal form: u_i = sum_n coeffs[k, i, n] u_n(x)."""

    coeffs: np.ndarray  # (K+1, 3, N, N, N)
    forcing_coeffs: np.ndarray  # modal forcing driving each component
    domain: BoxDomain
    grid: SpatialGrid
    times: TimeGrid
    diagnostics: dict = field(default_factory=dict)

    def component_terms(self, i: int) -> TensorField:
        return TensorField(_SSS, self.coeffs[:, i], self.domain)

    def rate_coeffs(self) -> np.ndarray:
        """Exact modal du/dt from the integrator ODE: g - rho*lambda*u."""
        lam = self.domain.eigenvalues(self.coeffs.shape[-1])
        return self.forcing_coeffs - self.domain.rho * lam * self.coeffs

    def samples(self, closed: bool = False) -> SpaceTimeField | np.ndarray:
        comps = [
            self.component_terms(i).synthesize(self.grid, closed) for i in range(3)
        ]
        vals = np.stack(comps, axis=1)
        if closed:
            return vals
        return SpaceTimeField(vals, self.grid, self.times)


class StokesSolver:
    """The full pipeline at one resolution (N modes, M grid points, K steps)."""

    def __init__(
        self,
        domain: BoxDomain,
        n_modes: int,
        grid: SpatialGrid,
        times: TimeGrid,
    ):
        if grid.n_points < n_modes:
            raise ValueError(
                f"grid must resolve the mode band: M={grid.n_points} < N={n_modes}"
            )
        self.domain = domain
        self.n_modes = n_modes
        self.grid = grid
        self.times = times
        self.eigenvalues = domain.eigenvalues(n_modes)

    # -- forcing ingestion ------------------------------------------------

    def forcing_coeffs(self, w: SpaceTimeField) -> np.ndarray:
        """Sine coefficients (K+1, 3, N, N, N) of a sampled vector forcing."""
        if not w.is_vector:
            raise ValueError("forcing must be a vector space-time field")
        n = self.n_modes
        out = np.empty((self.times.n_knots, 3, n, n, n))
        for k in range(self.times.n_knots):
            for i in range(3):
                out[k, i] = forward_sine(GridField(w.values[k, i], self.grid), n).coeffs
        return out

    # -- source operator ---------------------------------------------------

    def source_decomposition(self, w_coeffs: np.ndarray) -> SourceDecomposition:
        h = etd_convolve(
            w_coeffs, self.eigenvalues, self.domain.rho, self.times.dt
        )
        return SourceDecomposition(
            w_coeffs, h, self.domain, self.times, self.eigenvalues
        )

    def div_heat_potential(self, w: SpaceTimeField | np.ndarray):
        """The field S (grid samples) plus its per-mode decomposition."""
        w_coeffs = w if isinstance(w, np.ndarray) else self.forcing_coeffs(w)
        decomp = self.source_decomposition(w_coeffs)
        vals = composite_synthesize(decomp.terms(decomp.response), self.grid)
        return SpaceTimeField(vals, self.grid, self.times), decomp

    def div_heat_potential_rate(self, decomp: SourceDecomposition) -> SpaceTimeField:
        """dS/dt from the exact modal ODE right-hand side."""
        vals = composite_synthesize(decomp.terms(decomp.rate_coeffs()), self.grid)
        return SpaceTimeField(vals, self.grid, self.times)

    # -- pressure -----------------------------------------------------------

    def pressure(self, w: SpaceTimeField | np.ndarray) -> PressureResult:
        """p = -d/dt Lap^{-1} S + rho S, assembled in modal form."""
        w_coeffs = w if isinstance(w, np.ndarray) else self.forcing_coeffs(w)
        decomp = self.source_decomposition(w_coeffs)
        sine = self.pressure_sine_coeffs(decomp)
        return PressureResult(sine, decomp, self.domain, self.grid, self.times)

    def pressure_sine_coeffs(self, decomp: SourceDecomposition) -> np.ndarray:
        """Coefficients of -Lap^{-1} dS/dt: exact projection of dS/dt over lambda."""
        rate = decomp.rate_coeffs()
        proj = None
        for i in range(3):
            term = TensorField(_SSS, rate[:, i], self.domain).differentiate(i)
            p = term.project_sine(self.n_modes)
            proj = p if proj is None else proj + p
        return proj / self.eigenvalues

    def pressure_gradient(self, result: PressureResult) -> SpaceTimeField:
        """Analytic grad p sampled on the interior grid."""
        return result.gradient_samples()

    # -- velocity -----------------------------------------------------------

    def _grad_p_projection(self, result: PressureResult, axis: int) -> np.ndarray:
        """Exact sine-basis coefficients of dp/dx_axis, shape (K+1, N, N, N)."""
        out = None
        for term in result.gradient_terms(axis):
            p = term.project_sine(self.n_modes)
            out = p if out is None else out + p
        return out

    def velocity(self, w, result: PressureResult) -> VelocityResult:
        """u_i = heat potential of (w_i + dp/dx_i), per-mode exponential update."""
        w_coeffs = w if isinstance(w, np.ndarray) else self.forcing_coeffs(w)
        g = np.empty_like(w_coeffs)
        for i in range(3):
            g[:, i] = w_coeffs[:, i] + self._grad_p_projection(result, i)
        u = etd_convolve(g, self.eigenvalues, self.domain.rho, self.times.dt)
        return VelocityResult(u, g, self.domain, self.grid, self.times)

    def velocity_by_parts(self, w, result: PressureResult) -> VelocityResult:
        """Velocity via the integrated-by-parts representation.

        Per mode, the pressure enters through q_{i,n}(t) = <du_n/dx_i, p(.,t)>
        and is convolved against exp(-rho lambda_n .) separately from the
        forcing potential; the two routes must agree up to roundoff.
        """
        w_coeffs = w if isinstance(w, np.ndarray) else self.forcing_coeffs(w)
        n = self.n_modes
        p_terms = result.terms()
        u = np.empty_like(w_coeffs)
        g_equiv = np.empty_like(w_coeffs)
        for i in range(3):
            k_i = self.domain.wavenumbers(n, i)
            shape = [1, 1, 1]
            shape[i] = n
            q = None
            for term in p_terms:
                v = term.project(_kind_with_cos(i), n)
                q = v if q is None else q + v
            q = q * k_i.reshape(shape)
            u_w = etd_convolve(
                w_coeffs[:, i], self.eigenvalues, self.domain.rho, self.times.dt
            )
            u_q = etd_convolve(q, self.eigenvalues, self.domain.rho, self.times.dt)
            u[:, i] = u_w - u_q
            g_equiv[:, i] = w_coeffs[:, i] - q
        return VelocityResult(u, g_equiv, self.domain, self.grid, self.times)

    # -- diagnostics ----------------------------------------------------------

    def divergence(self, vel: VelocityResult):
        """div u sampled on the grid plus the ratio ||div u|| / ||grad u||.

        Both norms are exact L2(Q_t) values of the modal synthesis (closed-form
        Gram in space, trapezoid in time).
        """
        terms = [
            TensorField(_SSS, vel.coeffs[:, i], self.domain).differentiate(i)
            for i in range(3)
        ]
        vals = composite_synthesize(terms, self.grid)
        div_sq = composite_inner(terms, terms)
        dt = self.times.dt
        div_norm = float(np.sqrt(max(np.trapezoid(div_sq, dx=dt), 0.0)))
        grad_sq = np.sum(
            self.eigenvalues * vel.coeffs**2, axis=(1, 2, 3, 4)
        )
        grad_norm = float(np.sqrt(max(np.trapezoid(grad_sq, dx=dt), 0.0)))
        ratio = div_norm / grad_norm if grad_norm > 0 else 0.0
        return SpaceTimeField(vals, self.grid, self.times), ratio

    def sobolev_norm_221(self, vel: VelocityResult) -> float:
        """Parabolic Sobolev norm: L2 of u, grad u, all second derivatives, du/dt.

        Space derivatives are exact in the modal representation (the second
        derivative block sums to lambda_n^2 per mode); du/dt uses the exact
        integrator rate.  Time integration by composite trapezoid.
        """
        lam = self.eigenvalues
        udot = vel.rate_coeffs()
        weight = 1.0 + lam + lam**2
        per_knot = np.sum(weight * vel.coeffs**2, axis=(1, 2, 3, 4)) + np.sum(
            udot**2, axis=(1, 2, 3, 4)
        )
        return float(np.sqrt(np.trapezoid(per_knot, dx=self.times.dt)))

    def sobolev_norm_221_sampled(self, fld: SpaceTimeField) -> float:
        """Same norm for sampled vector data: DST in space, FD in time."""
        if not fld.is_vector:
            raise ValueError("expected a vector space-time field")
        m = fld.grid.n_points
        lam = self.domain.eigenvalues(m)
        weight = 1.0 + lam + lam**2
        nt = fld.times.n_knots
        coeffs = np.empty((nt, 3, m, m, m))
        for k in range(nt):
            for i in range(3):
                coeffs[k, i] = forward_sine(GridField(fld.values[k, i], fld.grid)).coeffs
        udot = fd_time_derivative(coeffs, fld.times.dt)
        per_knot = np.sum(weight * coeffs**2, axis=(1, 2, 3, 4)) + np.sum(
            udot**2, axis=(1, 2, 3, 4)
        )
        return float(np.sqrt(np.trapezoid(per_knot, dx=fld.times.dt)))
