"""Manufactured solutions with exact analytic derivatives and projections.

A manufactured case fixes a divergence-free velocity that vanishes on the
boundary and at t = 0,

    u* = curl(0, 0, chi),   chi = s(t) * prod_i sin^2(pi x_i / L_i),

together with a smooth pressure p* (its gauge is arbitrary), and derives the
forcing w = du*/dt - rho*Lap(u*) - grad(p*) so that (u*, p*) is the exact
solution of the momentum equation with the pipeline's sign convention.

Everything is represented as sums of separable terms
``c * T(t) * f1(x1) * f2(x2) * f3(x3)`` whose 1D factors are short trig or
monomial combinations.  The representation is closed under differentiation,
and every inner product the harness needs (against another separable field or
against the sine/cosine mode families) reduces to the closed-form 1D
integrals in :mod:`stokesbox.modal`.  No grid quadrature is involved, so the
manufactured comparisons measure pipeline error only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .domain import BoxDomain, SpatialGrid, TimeGrid
from .modal import TensorField, poly_trig_integral, trig_integral

__all__ = [
    "TimeProfile",
    "Factor",
    "SeparableField",
    "ManufacturedCase",
    "make_manufactured",
    "modal_cross_inner",
    "constant_field",
]


TIME_PROFILES = {
    "quadratic": (lambda t: t**2, lambda t: 2.0 * t),
    "sinusoidal": (np.sin, np.cos),
    "affine": (lambda t: 1.0 + t, lambda t: np.ones_like(np.asarray(t, dtype=float))),
    "one": (
        lambda t: np.ones_like(np.asarray(t, dtype=float)),
        lambda t: np.zeros_like(np.asarray(t, dtype=float)),
    ),
}


@dataclass(frozen=True)
class TimeProfile:
    """Named time profile with an analytic derivative."""

    name: str

    def __post_init__(self):
        if self.name not in TIME_PROFILES:
            raise ValueError(f"unknown time profile {self.name!r}")

    def value(self, t):
        return TIME_PROFILES[self.name][0](np.asarray(t, dtype=float))

    def derivative(self, t):
        return TIME_PROFILES[self.name][1](np.asarray(t, dtype=float))


@dataclass(frozen=True)
class Factor:
    """A 1D function: sum of sin/cos/monomial terms (kind, param, coeff)."""

    terms: tuple[tuple[str, int, float], ...]

    def eval(self, x: np.ndarray, length: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for kind, p, c in self.terms:
            if kind == "sin":
                out += c * np.sin(p * np.pi * x / length)
            elif kind == "cos":
                out += c * np.cos(p * np.pi * x / length)
            else:
                out += c * x**p
        return out

    def derivative(self, length: float) -> "Factor":
        new = []
        for kind, p, c in self.terms:
            if kind == "sin":
                new.append(("cos", p, c * p * np.pi / length))
            elif kind == "cos":
                new.append(("sin", p, -c * p * np.pi / length))
            elif p > 0:
                new.append(("poly", p - 1, c * p))
        return Factor(tuple(new))

    def basis_projection(self, kind: str, n_modes: int, length: float) -> np.ndarray:
        """Integrals of the factor against the normalized sine or cosine basis."""
        return _cached_projection(self, kind, n_modes, length)

    def integral_against(self, other: "Factor", length: float) -> float:
        """Closed-form ∫_0^L f * g dx."""
        return _cached_pair_integral(self, other, length)


@lru_cache(maxsize=4096)
def _cached_projection(factor: Factor, kind: str, n_modes: int, length: float) -> np.ndarray:
    basis = "sin" if kind == "S" else "cos"
    out = np.zeros(n_modes)
    scale = np.sqrt(2.0 / length)
    for a in range(1, n_modes + 1):
        acc = 0.0
        for k, p, c in factor.terms:
            if k == "poly":
                acc += c * poly_trig_integral(p, basis, a, length)
            else:
                acc += c * trig_integral(k, p, basis, a, length)
        out[a - 1] = scale * acc
    out.setflags(write=False)
    return out


@lru_cache(maxsize=4096)
def _cached_pair_integral(fa: Factor, fb: Factor, length: float) -> float:
    acc = 0.0
    for ka, pa, ca in fa.terms:
        for kb, pb, cb in fb.terms:
            c = ca * cb
            if ka == "poly" and kb == "poly":
                acc += c * length ** (pa + pb + 1) / (pa + pb + 1)
            elif ka == "poly":
                acc += c * poly_trig_integral(pa, kb, pb, length)
            elif kb == "poly":
                acc += c * poly_trig_integral(pb, ka, pa, length)
            else:
                acc += c * trig_integral(ka, pa, kb, pb, length)
    return acc


@dataclass(frozen=True)
class SeparableField:
    """Sum of separable space-time terms (coeff, profile, 3 factors)."""

    terms: tuple[tuple[float, TimeProfile, tuple[Factor, Factor, Factor]], ...]
    domain: BoxDomain

    def d_dt(self) -> "SeparableField":
        new = []
        for c, prof, f in self.terms:
            name = {"quadratic": None, "sinusoidal": None, "affine": "one"}.get(prof.name)
            if prof.name == "quadratic":
                # d/dt t^2 = 2t: reuse the affine machinery via an explicit profile
                new.append((2.0 * c, TimeProfile("_t"), f))
            elif prof.name == "sinusoidal":
                new.append((c, TimeProfile("_cos"), f))
            elif prof.name == "affine":
                new.append((c, TimeProfile("one"), f))
            # 'one' differentiates to zero: term dropped
        return SeparableField(tuple(new), self.domain)

    def derivative(self, axis: int) -> "SeparableField":
        L = self.domain.lengths[axis]
        new = []
        for c, prof, f in self.terms:
            g = list(f)
            g[axis] = f[axis].derivative(L)
            new.append((c, prof, tuple(g)))
        return SeparableField(tuple(new), self.domain)

    def laplacian(self) -> "SeparableField":
        terms = []
        for ax in range(3):
            terms.extend(self.derivative(ax).derivative(ax).terms)
        return SeparableField(tuple(terms), self.domain)

    def scaled(self, factor: float) -> "SeparableField":
        return SeparableField(
            tuple((c * factor, prof, f) for c, prof, f in self.terms), self.domain
        )

    def __add__(self, other: "SeparableField") -> "SeparableField":
        return SeparableField(self.terms + other.terms, self.domain)

    def eval(self, grid: SpatialGrid, t=None, closed: bool = False) -> np.ndarray:
        """Sample on the grid; with t an array, output has a leading time axis."""
        axes = [grid.axis_nodes(ax, closed) for ax in range(3)]
        static = t is None
        tvals = np.atleast_1d(0.0 if static else t)
        m = len(axes[0])
        out = np.zeros((len(tvals), m, m, m))
        for c, prof, f in self.terms:
            cube = c * np.einsum(
                "i,j,k->ijk",
                f[0].eval(axes[0], self.domain.lengths[0]),
                f[1].eval(axes[1], self.domain.lengths[1]),
                f[2].eval(axes[2], self.domain.lengths[2]),
            )
            if static:
                out[0] += cube
            else:
                out += prof.value(tvals)[:, None, None, None] * cube
        return out[0] if static else out

    def sine_coeffs(self, n_modes: int, t=None) -> np.ndarray:
        """Exact sine-basis projections; leading time axis when t is an array."""
        static = t is None
        tvals = np.atleast_1d(0.0 if static else t)
        out = np.zeros((len(tvals), n_modes, n_modes, n_modes))
        for c, prof, f in self.terms:
            vecs = [
                f[ax].basis_projection("S", n_modes, self.domain.lengths[ax])
                for ax in range(3)
            ]
            cube = c * np.einsum("i,j,k->ijk", *vecs)
            if static:
                out[0] += cube
            else:
                out += prof.value(tvals)[:, None, None, None] * cube
        return out[0] if static else out

    def inner(self, other: "SeparableField", t=None) -> np.ndarray | float:
        """Exact L2(Omega) inner product, per time value."""
        static = t is None
        tvals = np.atleast_1d(0.0 if static else t)
        out = np.zeros(len(tvals))
        for ca, pa, fa in self.terms:
            for cb, pb, fb in other.terms:
                space = ca * cb
                for ax in range(3):
                    space *= fa[ax].integral_against(fb[ax], self.domain.lengths[ax])
                if space == 0.0:
                    continue
                out += space * (
                    np.ones_like(tvals)
                    if static
                    else pa.value(tvals) * pb.value(tvals)
                )
        return float(out[0]) if static else out

    def mean(self, t=None):
        """Volume average over the box, per time value."""
        vol = float(np.prod(self.domain.lengths))
        return self.inner(constant_field(self.domain), t) / vol


# the two derivative profiles used internally by d_dt
TIME_PROFILES["_t"] = (lambda t: t, lambda t: np.ones_like(np.asarray(t, dtype=float)))
TIME_PROFILES["_cos"] = (np.cos, lambda t: -np.sin(np.asarray(t, dtype=float)))


def _sin_sq() -> Factor:
    # sin^2(pi x / L) = 1/2 - cos(2 pi x / L)/2
    return Factor((("cos", 0, 0.5), ("cos", 2, -0.5)))


def _const() -> Factor:
    return Factor((("cos", 0, 1.0),))


def constant_field(domain: BoxDomain) -> SeparableField:
    """The constant-1 field (used for volume means)."""
    return SeparableField(
        ((1.0, TimeProfile("one"), (_const(), _const(), _const())),), domain
    )


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form (u*, p*) and the induced forcing w."""

    domain: BoxDomain
    velocity: tuple[SeparableField, SeparableField, SeparableField]
    pressure: SeparableField
    forcing: tuple[SeparableField, SeparableField, SeparableField]

    @property
    def pressure_gradient(self) -> tuple[SeparableField, ...]:
        return tuple(self.pressure.derivative(i) for i in range(3))

    @property
    def divergence(self) -> SeparableField:
        out = self.velocity[0].derivative(0)
        for i in (1, 2):
            out = out + self.velocity[i].derivative(i)
        return out

    def forcing_sine_coeffs(self, n_modes: int, times: TimeGrid) -> np.ndarray:
        """Exact per-knot projections of w, shape (K+1, 3, N, N, N)."""
        t = times.knots
        return np.stack(
            [self.forcing[i].sine_coeffs(n_modes, t) for i in range(3)], axis=1
        )

    def sample_velocity(self, grid: SpatialGrid, times: TimeGrid) -> np.ndarray:
        t = times.knots
        return np.stack(
            [self.velocity[i].eval(grid, t) for i in range(3)], axis=1
        )

    def sample_forcing(self, grid: SpatialGrid, times: TimeGrid) -> np.ndarray:
        t = times.knots
        return np.stack(
            [self.forcing[i].eval(grid, t) for i in range(3)], axis=1
        )


def make_manufactured(
    domain: BoxDomain,
    time_profile: str = "quadratic",
    pressure_pattern: str = "cosine",
    pressure_profile: str = "affine",
) -> ManufacturedCase:
    """Build the curl-based manufactured case on the given box.

    ``time_profile``: 'quadratic' (t^2) or 'sinusoidal' (sin t) amplitude of
    the stream potential; both vanish at t = 0.
    ``pressure_pattern``: 'cosine' for prod_i cos(pi x_i/L_i), 'quadratic' for
    the polynomial sum_i x_i^2 pattern.
    """
    s = TimeProfile(time_profile)
    sp = TimeProfile(pressure_profile)
    sq = _sin_sq()

    # chi = s(t) prod sin^2; u = (d chi/dx2, -d chi/dx1, 0)
    L = domain.lengths
    dsq = [sq.derivative(L[ax]) for ax in range(3)]
    u1 = SeparableField(((1.0, s, (sq, dsq[1], sq)),), domain)
    u2 = SeparableField(((-1.0, s, (dsq[0], sq, sq)),), domain)
    u3 = SeparableField((), domain)
    velocity = (u1, u2, u3)

    if pressure_pattern == "cosine":
        cosf = [Factor((("cos", 1, 1.0),)) for _ in range(3)]
        pressure = SeparableField(((1.0, sp, tuple(cosf)),), domain)
    elif pressure_pattern == "quadratic":
        terms = []
        for ax in range(3):
            f = [_const(), _const(), _const()]
            f[ax] = Factor((("poly", 2, 1.0),))
            terms.append((1.0, sp, tuple(f)))
        pressure = SeparableField(tuple(terms), domain)
    else:
        raise ValueError(f"unknown pressure pattern {pressure_pattern!r}")

    rho = domain.rho
    forcing = tuple(
        velocity[i].d_dt()
        + velocity[i].laplacian().scaled(-rho)
        + pressure.derivative(i).scaled(-1.0)
        for i in range(3)
    )
    return ManufacturedCase(domain, velocity, pressure, forcing)


def modal_cross_inner(
    tf: TensorField, fld: SeparableField, t=None
) -> np.ndarray | float:
    """Exact <tensor-family field, separable field> per time value.

    With scalar or missing t the result is a float (a static field is
    evaluated with its profiles at t, or ignored when t is None).
    """
    n = tf.n_modes
    static = t is None
    scalar = static or np.ndim(t) == 0
    tvals = np.atleast_1d(0.0 if static else t)
    out = np.zeros(len(tvals))
    for c, prof, f in fld.terms:
        vecs = [
            f[ax].basis_projection(tf.kinds[ax], n[ax], fld.domain.lengths[ax])
            for ax in range(3)
        ]
        coeff_dot = np.einsum("...ijk,i,j,k->...", tf.coeffs, *vecs)
        if static:
            out += c * np.atleast_1d(coeff_dot)
        else:
            out += c * prof.value(tvals) * coeff_dot
    return float(out[0]) if scalar else out
