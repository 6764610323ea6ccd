"""Box geometry, Dirichlet sine eigenbasis, grids, and spectral transforms.

The computational domain is a rectangular box ``(0, L1) x (0, L2) x (0, L3)``
with homogeneous Dirichlet boundary conditions.  On that domain the Laplace
eigenpairs are known in closed form,

    u_n(x)   = prod_i sqrt(2/L_i) * sin(n_i pi x_i / L_i),
    lambda_n = sum_i (n_i pi / L_i)**2,        n_i = 1, 2, ...

and the type-I discrete sine transform on the interior grid
``x_j = j L/(M+1)`` realizes exact discrete orthonormality of the sampled
eigenfunctions.  Every other module builds on the types and transforms here.

All functions are pure; domain/grid objects are immutable shared data.
Reductions use fixed (lexicographic mode order, axis-ordered contraction)
summation order so results do not depend on thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft


__all__ = [
    "BoxDomain",
    "Mode",
    "SpatialGrid",
    "TimeGrid",
    "GridField",
    "VectorField",
    "SpaceTimeField",
    "SpectralField",
    "enumerate_modes",
    "eval_eigenfunction",
    "forward_sine",
    "inverse_sine",
    "l2_norm",
    "l2_norm_spacetime",
]


@dataclass(frozen=True)
class BoxDomain:
    """Rectangular box (0,L1)x(0,L2)x(0,L3) with diffusivity rho."""

    lengths: tuple[float, float, float]
    rho: float = 1.0

    def __post_init__(self):
        lengths = tuple(float(L) for L in self.lengths)
        if len(lengths) != 3:
            raise ValueError("lengths must have exactly 3 entries")
        if any(L <= 0 for L in lengths):
            raise ValueError(f"all edge lengths must be positive, got {lengths}")
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "rho", float(self.rho))

    def wavenumbers(self, n_modes: int, axis: int) -> np.ndarray:
        """k_a = a*pi/L for a = 1..n_modes along the given axis."""
        return np.arange(1, n_modes + 1) * np.pi / self.lengths[axis]

    def eigenvalues(self, n_modes: int) -> np.ndarray:
        """(N,N,N) array of lambda_n over the truncation cube, index order (n1,n2,n3)."""
        k1, k2, k3 = (self.wavenumbers(n_modes, ax) for ax in range(3))
        return (
            k1[:, None, None] ** 2 + k2[None, :, None] ** 2 + k3[None, None, :] ** 2
        )

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= 0.0) and np.all(x <= np.asarray(self.lengths)))


@dataclass(frozen=True)
class Mode:
    """One Dirichlet eigenpair: integer index (n1,n2,n3) and eigenvalue."""

    index: tuple[int, int, int]
    eigenvalue: float

    def __post_init__(self):
        if any(int(n) < 1 for n in self.index):
            raise ValueError(f"mode indices must be >= 1, got {self.index}")
        object.__setattr__(self, "index", tuple(int(n) for n in self.index))


def enumerate_modes(domain: BoxDomain, n_modes: int) -> list[Mode]:
    """All N^3 modes with indices in [1,N]^3 in lexicographic order."""
    if n_modes < 1:
        raise ValueError(f"mode count must be >= 1, got {n_modes}")
    lam = domain.eigenvalues(n_modes)
    modes = []
    for n1 in range(1, n_modes + 1):
        for n2 in range(1, n_modes + 1):
            for n3 in range(1, n_modes + 1):
                modes.append(Mode((n1, n2, n3), float(lam[n1 - 1, n2 - 1, n3 - 1])))
    return modes


def eval_eigenfunction(mode: Mode, x, domain: BoxDomain) -> float:
    """Value of the L2-normalized eigenfunction u_n at a point of the closed box."""
    x = np.asarray(x, dtype=float)
    if not domain.contains(x):
        raise ValueError(f"point {x} lies outside the closed box {domain.lengths}")
    value = 1.0
    for i in range(3):
        L = domain.lengths[i]
        value *= np.sqrt(2.0 / L) * np.sin(mode.index[i] * np.pi * x[i] / L)
    return float(value)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform interior grid: M nodes per axis at x_j = j*L/(M+1), j = 1..M."""

    domain: BoxDomain
    n_points: int

    def __post_init__(self):
        if self.n_points < 1:
            raise ValueError(f"grid size must be >= 1, got {self.n_points}")

    @property
    def spacings(self) -> tuple[float, float, float]:
        return tuple(L / (self.n_points + 1) for L in self.domain.lengths)

    @property
    def cell_volume(self) -> float:
        h1, h2, h3 = self.spacings
        return h1 * h2 * h3

    def axis_nodes(self, axis: int, closed: bool = False) -> np.ndarray:
        """Interior nodes along one axis; ``closed`` includes the two boundary nodes."""
        L = self.domain.lengths[axis]
        if closed:
            return np.linspace(0.0, L, self.n_points + 2)
        return np.arange(1, self.n_points + 1) * L / (self.n_points + 1)

    def meshgrid(self, closed: bool = False):
        axes = [self.axis_nodes(i, closed) for i in range(3)]
        return np.meshgrid(*axes, indexing="ij")

    def sine_table(self, n_modes: int, axis: int, closed: bool = False) -> np.ndarray:
        """(M, N) table of sqrt(2/L)*sin(a pi x_j / L) at the axis nodes."""
        L = self.domain.lengths[axis]
        x = self.axis_nodes(axis, closed)
        a = np.arange(1, n_modes + 1)
        return np.sqrt(2.0 / L) * np.sin(np.outer(x, a) * np.pi / L)

    def cosine_table(self, n_modes: int, axis: int, closed: bool = False) -> np.ndarray:
        """(M, N) table of sqrt(2/L)*cos(a pi x_j / L) at the axis nodes."""
        L = self.domain.lengths[axis]
        x = self.axis_nodes(axis, closed)
        a = np.arange(1, n_modes + 1)
        return np.sqrt(2.0 / L) * np.cos(np.outer(x, a) * np.pi / L)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time knots t_k = k*dt, k = 0..K, with dt = t_final/K."""

    t_final: float
    n_steps: int

    def __post_init__(self):
        if self.t_final <= 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.n_steps < 2:
            raise ValueError(f"need at least 2 time steps, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps

    @property
    def knots(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def n_knots(self) -> int:
        return self.n_steps + 1


@dataclass
class GridField:
    """Scalar samples on the interior nodes of a SpatialGrid, shape (M,M,M)."""

    values: np.ndarray
    grid: SpatialGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        m = self.grid.n_points
        if self.values.shape != (m, m, m):
            raise ValueError(
                f"field shape {self.values.shape} inconsistent with grid M={m}"
            )


@dataclass
class VectorField:
    """Three scalar components stacked along the first axis, shape (3,M,M,M)."""

    values: np.ndarray
    grid: SpatialGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        m = self.grid.n_points
        if self.values.shape != (3, m, m, m):
            raise ValueError(
                f"vector field shape {self.values.shape} inconsistent with grid M={m}"
            )


@dataclass
class SpaceTimeField:
    """K+1 time slices of a scalar or vector grid field.

    Scalar layout (K+1, M, M, M); vector layout (K+1, 3, M, M, M).
    """

    values: np.ndarray
    grid: SpatialGrid
    times: TimeGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        m = self.grid.n_points
        nt = self.times.n_knots
        if self.values.shape not in ((nt, m, m, m), (nt, 3, m, m, m)):
            raise ValueError(
                f"space-time shape {self.values.shape} inconsistent with "
                f"M={m}, K+1={nt}"
            )

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 5


@dataclass
class SpectralField:
    """Real sine coefficients over the truncation cube [1,N]^3 w.r.t. u_n."""

    coeffs: np.ndarray
    domain: BoxDomain

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim != 3 or len(set(self.coeffs.shape)) != 1:
            raise ValueError(f"coefficient cube expected, got {self.coeffs.shape}")

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[0]


def _dst_scale(domain: BoxDomain, m: int) -> float:
    # Per-axis factor turning scipy's DST-I into the orthonormal-basis projection
    # with the transform-induced quadrature h * sum over interior nodes.
    return float(np.prod([np.sqrt(L / 2.0) / (m + 1) for L in domain.lengths]))


def forward_sine(fld: GridField, n_modes: int | None = None) -> SpectralField:
    """Project grid samples onto the orthonormal sine basis.

    Returns coefficients c_n = h^3 * sum_j f(x_j) u_n(x_j) for n in [1,N]^3,
    computed with the fast type-I DST.  Exact (to roundoff) for fields that
    are band-limited to the grid, N <= M.
    """
    m = fld.grid.n_points
    if n_modes is None:
        n_modes = m
    if n_modes > m:
        raise ValueError(f"need grid size M >= N, got M={m}, N={n_modes}")
    coeffs = scipy.fft.dstn(fld.values, type=1) * _dst_scale(fld.grid.domain, m)
    return SpectralField(coeffs[:n_modes, :n_modes, :n_modes], fld.grid.domain)


def inverse_sine(spec: SpectralField, grid: SpatialGrid) -> GridField:
    """Synthesize sum_n c_n u_n(x) on the interior grid nodes."""
    m = grid.n_points
    n = spec.n_modes
    if n > m:
        raise ValueError(f"need grid size M >= N, got M={m}, N={n}")
    padded = np.zeros((m, m, m))
    padded[:n, :n, :n] = spec.coeffs
    scale = float(np.prod([np.sqrt(1.0 / (2.0 * L)) for L in grid.domain.lengths]))
    return GridField(scipy.fft.dstn(padded, type=1) * scale, grid)


def l2_norm(fld: GridField | VectorField) -> float:
    """Discrete L2(Omega) norm with the transform-induced quadrature.

    Parseval-consistent: for a scalar field, the squared norm equals the sum
    of squared full-band sine coefficients.
    """
    return float(np.sqrt(fld.grid.cell_volume * np.sum(fld.values**2)))


def l2_norm_spacetime(fld: SpaceTimeField) -> float:
    """Discrete L2(Q_t) norm: transform quadrature in space, trapezoid in time."""
    slice_sq = fld.grid.cell_volume * np.sum(
        fld.values.reshape(fld.times.n_knots, -1) ** 2, axis=1
    )
    return float(np.sqrt(np.trapezoid(slice_sq, dx=fld.times.dt)))
