"""Exact modal calculus: tensor-product trig families and their couplings.

The pipeline represents fields as finite sums

    f(x) = sum_{n in [1,N]^3} c_n * b1_{n1}(x1) * b2_{n2}(x2) * b3_{n3}(x3)

where each 1D factor is either the normalized sine s_a = sqrt(2/L) sin(a pi x/L)
or the normalized cosine c_a = sqrt(2/L) cos(a pi x/L).  The family is closed
under differentiation and the Laplacian, and all L2(Omega) inner products
reduce to the closed-form 1D couplings

    <s_a, s_b> = <c_a, c_b> = delta_ab,
    <s_a, c_b> = 4a / (pi (a^2 - b^2))   if a+b odd, else 0.

Working with these exact couplings (instead of grid quadrature) keeps the
pressure/velocity pipeline free of O(h) boundary-quadrature errors; that is
what makes the two velocity reconstructions agree to roundoff.

Coefficient arrays carry the mode cube in the last three axes; any leading
axes (time knots, vector components) broadcast through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .domain import BoxDomain, SpatialGrid

__all__ = [
    "gamma_matrix",
    "TensorField",
    "composite_inner",
    "composite_project_sine",
    "composite_synthesize",
    "trig_integral",
    "poly_trig_integral",
]

SINE = "S"
COSINE = "C"


@lru_cache(maxsize=64)
def gamma_matrix(n_sin: int, n_cos: int) -> np.ndarray:
    """Coupling <s_a, c_b> for a = 1..n_sin, b = 1..n_cos (length-independent)."""
    a = np.arange(1, n_sin + 1)[:, None].astype(float)
    b = np.arange(1, n_cos + 1)[None, :].astype(float)
    odd = (a + b) % 2 == 1
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(odd, 4.0 * a / (np.pi * (a * a - b * b)), 0.0)
    return g


def _axis_coupling(kind_left: str, kind_right: str, n_left: int, n_right: int) -> np.ndarray | None:
    """1D Gram matrix between two families; None signals the identity (delta)."""
    if kind_left == kind_right:
        if n_left == n_right:
            return None
        return np.eye(n_left, n_right)
    if kind_left == SINE:
        return gamma_matrix(n_left, n_right)
    return gamma_matrix(n_right, n_left).T


def _contract_axis(arr: np.ndarray, mat: np.ndarray, axis_from_last: int) -> np.ndarray:
    """Apply mat (R, N) along one of the trailing three mode axes."""
    axis = arr.ndim - 3 + axis_from_last
    out = np.tensordot(arr, mat, axes=([axis], [1]))
    return np.moveaxis(out, -1, axis)


@dataclass
class TensorField:
    """A trig tensor family with coefficient cube in the trailing three axes."""

    kinds: tuple[str, str, str]
    coeffs: np.ndarray
    domain: BoxDomain

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim < 3:
            raise ValueError("coefficients need at least 3 axes (mode cube)")
        if any(k not in (SINE, COSINE) for k in self.kinds):
            raise ValueError(f"kinds must be 'S' or 'C', got {self.kinds}")

    @property
    def n_modes(self) -> tuple[int, int, int]:
        return self.coeffs.shape[-3:]

    def _wavenumber_cube(self, axis: int) -> np.ndarray:
        k = self.domain.wavenumbers(self.n_modes[axis], axis)
        shape = [1, 1, 1]
        shape[axis] = len(k)
        return k.reshape(shape)

    def differentiate(self, axis: int) -> "TensorField":
        """d/dx_axis: sine -> cosine with factor +k, cosine -> sine with -k."""
        k = self._wavenumber_cube(axis)
        kinds = list(self.kinds)
        if self.kinds[axis] == SINE:
            kinds[axis] = COSINE
            coeffs = self.coeffs * k
        else:
            kinds[axis] = SINE
            coeffs = -self.coeffs * k
        return TensorField(tuple(kinds), coeffs, self.domain)

    def laplacian(self) -> "TensorField":
        lam = sum(self._wavenumber_cube(ax) ** 2 for ax in range(3))
        return TensorField(self.kinds, -self.coeffs * lam, self.domain)

    def inner(self, other: "TensorField") -> np.ndarray:
        """L2(Omega) inner product; leading axes broadcast elementwise."""
        moved = other.coeffs
        for ax in range(3):
            mat = _axis_coupling(
                self.kinds[ax], other.kinds[ax], self.n_modes[ax], other.n_modes[ax]
            )
            if mat is not None:
                moved = _contract_axis(moved, mat, ax)
            elif other.n_modes[ax] != self.n_modes[ax]:
                raise ValueError("mode bands disagree on a delta-coupled axis")
        return np.sum(self.coeffs * moved, axis=(-3, -2, -1))

    def project(self, kinds: tuple[str, str, str], n_target: int | None = None) -> np.ndarray:
        """Exact inner products <prod_i basis^{kinds_i}_{m_i}, field> for m in [1,T]^3."""
        n = self.n_modes
        tgt = n_target or max(n)
        out = self.coeffs
        for ax in range(3):
            mat = _axis_coupling(kinds[ax], self.kinds[ax], tgt, n[ax])
            if mat is None:
                if tgt != n[ax]:
                    mat = np.eye(tgt, n[ax])
                else:
                    continue
            out = _contract_axis(out, mat, ax)
        return out

    def project_sine(self, n_target: int | None = None) -> np.ndarray:
        """Exact coefficients <u_m, field> of the sine-basis projection."""
        return self.project((SINE, SINE, SINE), n_target)

    def synthesize(self, grid: SpatialGrid, closed: bool = False) -> np.ndarray:
        """Evaluate the field on the (interior or closed) grid nodes."""
        out = self.coeffs
        for ax in range(3):
            n = self.n_modes[ax]
            if self.kinds[ax] == SINE:
                table = grid.sine_table(n, ax, closed)
            else:
                table = grid.cosine_table(n, ax, closed)
            out = _contract_axis(out, table, ax)
        return out


def composite_inner(terms_a: list[TensorField], terms_b: list[TensorField]) -> np.ndarray:
    """Inner product of two sums of tensor families.

    When both arguments are the same list object the symmetric pairs are
    computed once and doubled.
    """
    total = None
    if terms_a is terms_b:
        for i, a in enumerate(terms_a):
            for j in range(i, len(terms_a)):
                v = a.inner(terms_a[j])
                if j > i:
                    v = 2.0 * v
                total = v if total is None else total + v
        return total
    for a in terms_a:
        for b in terms_b:
            v = a.inner(b)
            total = v if total is None else total + v
    return total


def composite_project_sine(terms: list[TensorField], n_target: int) -> np.ndarray:
    total = None
    for t in terms:
        v = t.project_sine(n_target)
        total = v if total is None else total + v
    return total


def composite_synthesize(
    terms: list[TensorField], grid: SpatialGrid, closed: bool = False
) -> np.ndarray:
    total = None
    for t in terms:
        v = t.synthesize(grid, closed)
        total = v if total is None else total + v
    return total


def trig_integral(kind_a: str, a: int, kind_b: str, b: int, length: float) -> float:
    """Closed-form ∫_0^L trig(a pi x/L) trig(b pi x/L) dx for unnormalized factors.

    Frequencies may be zero: ('cos', 0) is the constant 1, ('sin', 0) is 0.
    """
    if kind_a == "sin" and a == 0 or kind_b == "sin" and b == 0:
        return 0.0
    if kind_a == "sin" and kind_b == "sin":
        if a == b:
            return length / 2.0
        return 0.0
    if kind_a == "cos" and kind_b == "cos":
        if a == b:
            return length if a == 0 else length / 2.0
        return 0.0
    # mixed: ensure the sine factor comes first
    if kind_a == "cos":
        a, b = b, a
    if b == 0:
        return length * (1.0 - (-1.0) ** a) / (a * np.pi)
    if a == b:
        return 0.0
    if (a + b) % 2 == 0:
        return 0.0
    return length * 2.0 * a / (np.pi * (a * a - b * b))


def poly_trig_integral(power: int, kind: str, b: int, length: float) -> float:
    """Closed-form ∫_0^L x^power trig(b pi x/L) dx for power in {0, 1, 2}."""
    L = float(length)
    if b == 0:
        if kind == "sin":
            return 0.0
        return L ** (power + 1) / (power + 1)
    sgn = (-1.0) ** b
    if kind == "sin":
        if power == 0:
            return L * (1.0 - sgn) / (b * np.pi)
        if power == 1:
            return L * L * (-sgn) / (b * np.pi)
        if power == 2:
            return L**3 * (-sgn / (b * np.pi) + 2.0 * (sgn - 1.0) / (b * np.pi) ** 3)
    else:
        if power == 0:
            return 0.0
        if power == 1:
            return L * L * (sgn - 1.0) / (b * np.pi) ** 2
        if power == 2:
            return L**3 * 2.0 * sgn / (b * np.pi) ** 2
    raise ValueError(f"unsupported monomial power {power}")
