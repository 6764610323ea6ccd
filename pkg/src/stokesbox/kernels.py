"""Pointwise heat kernels on the box: free space, Dirichlet Green function, corrector.

Three constructions are available:

* ``eval_Z`` -- the free-space heat kernel
  ``Z = (4 pi rho s)^{-3/2} exp(-|x-xi|^2 / (4 rho s))`` with ``s = t - tau``;
* ``eval_G_spectral`` -- the Dirichlet Green function as the eigenfunction sum
  ``sum_n exp(-rho lambda_n s) u_n(x) u_n(xi)`` truncated per axis;
* ``eval_G_images`` -- the same Green function as a method-of-images sum over
  reflected sources, with parity-determined signs, truncated per axis.

Both G constructions factor into per-axis 1D kernels (the box is a product
domain), which is how they are evaluated; the factored sum is algebraically
identical to the triple mode/image sum in a fixed order.  The spectral form
converges fast for large ``rho s / L^2``, the image form for small; ``eval_V``
returns the smooth corrector ``G - Z`` using whichever construction the
truncation policy prefers at the given time separation.

Kernels are never evaluated on the diagonal ``t = tau``: every evaluation is
guarded by the policy's minimum separation ``eps_t``.  All functions are pure
and safe to call from multiple threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import BoxDomain

__all__ = [
    "TruncationPolicy",
    "TimeSeparationError",
    "eval_Z",
    "grad_x_Z",
    "grad_xi_Z",
    "eval_G_spectral",
    "eval_G_images",
    "eval_V",
    "grad_x_G_spectral",
]


class TimeSeparationError(ValueError):
    """Raised when a kernel is evaluated closer to the diagonal than eps_t."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Series cutoffs and the diagonal guard for kernel evaluation.

    ``n_kernel``: modes per axis in the spectral Green function.
    ``r_images``: image shells per axis in the reflected-source sum.
    ``eps_t``: smallest admitted time separation t - tau.
    ``image_crossover``: use images when rho*(t-tau) <= crossover * min(L)^2,
    the spectral sum otherwise.
    """

    n_kernel: int = 24
    r_images: int = 3
    eps_t: float = 5e-5
    image_crossover: float = 0.05

    def __post_init__(self):
        if self.n_kernel < 1:
            raise ValueError(f"n_kernel must be >= 1, got {self.n_kernel}")
        if self.r_images < 1:
            raise ValueError(f"r_images must be >= 1, got {self.r_images}")
        if self.eps_t <= 0:
            raise ValueError(f"eps_t must be positive, got {self.eps_t}")

    def check_separation(self, t: float, tau: float) -> float:
        s = t - tau
        if s < self.eps_t:
            raise TimeSeparationError(
                f"time separation {s} below the diagonal guard {self.eps_t}"
            )
        return s


def eval_Z(x, t: float, xi, tau: float, rho: float, eps_t: float = 5e-5) -> float:
    """Free-space heat kernel with diffusivity rho.

    At rho = 1 this reduces to (8 pi^{3/2} s^{3/2})^{-1} exp(-|x-xi|^2/(4s))
    since (4 pi)^{3/2} = 8 pi^{3/2}.
    """
    s = t - tau
    if s < eps_t:
        raise TimeSeparationError(
            f"time separation {s} below the diagonal guard {eps_t}"
        )
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r2 = float(np.sum((x - xi) ** 2))
    return float((4.0 * np.pi * rho * s) ** -1.5 * np.exp(-r2 / (4.0 * rho * s)))


def grad_x_Z(x, t: float, xi, tau: float, rho: float, eps_t: float = 5e-5) -> np.ndarray:
    """Analytic gradient of Z in x; equals -grad_xi_Z componentwise, exactly."""
    s = t - tau
    if s < eps_t:
        raise TimeSeparationError(
            f"time separation {s} below the diagonal guard {eps_t}"
        )
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    z = eval_Z(x, t, xi, tau, rho, eps_t)
    return -(x - xi) / (2.0 * rho * s) * z


def grad_xi_Z(x, t: float, xi, tau: float, rho: float, eps_t: float = 5e-5) -> np.ndarray:
    """Analytic gradient of Z in xi (the exact negative of grad_x_Z)."""
    return -grad_x_Z(x, t, xi, tau, rho, eps_t)


def _axis_kernel_spectral(
    x: np.ndarray, xi: np.ndarray, s: float, rho: float, length: float, n_modes: int
) -> np.ndarray:
    """1D Dirichlet heat kernel on (0, L) as a truncated sine series."""
    a = np.arange(1, n_modes + 1)
    k = a * np.pi / length
    decay = np.exp(-rho * s * k**2)
    sx = np.sin(np.outer(np.atleast_1d(x), k))
    sxi = np.sin(np.outer(np.atleast_1d(xi), k))
    return (2.0 / length) * (sx * decay) @ sxi.T


def _axis_kernel_images(
    x: np.ndarray, xi: np.ndarray, s: float, rho: float, length: float, r_images: int
) -> np.ndarray:
    """1D Dirichlet heat kernel on (0, L) by reflected sources.

    For each shell m in [-R, R] the source xi is reflected to 2mL + xi
    (positive sign) and 2mL - xi (negative sign).
    """
    x = np.atleast_1d(x)[:, None]
    xi = np.atleast_1d(xi)[None, :]
    pref = (4.0 * np.pi * rho * s) ** -0.5
    acc = np.zeros((x.shape[0], xi.shape[1]))
    for m in range(-r_images, r_images + 1):
        d_plus = x - (xi + 2.0 * m * length)
        d_minus = x - (-xi + 2.0 * m * length)
        acc += np.exp(-(d_plus**2) / (4.0 * rho * s))
        acc -= np.exp(-(d_minus**2) / (4.0 * rho * s))
    return pref * acc


def _check_points(domain: BoxDomain, x, xi):
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if not domain.contains(x) or not domain.contains(xi):
        raise ValueError("kernel arguments must lie in the closed box")
    return x, xi


def eval_G_spectral(
    x, t: float, xi, tau: float, domain: BoxDomain, policy: TruncationPolicy
) -> float:
    """Dirichlet Green function by the truncated eigenfunction sum."""
    s = policy.check_separation(t, tau)
    x, xi = _check_points(domain, x, xi)
    value = 1.0
    for ax in range(3):
        value *= _axis_kernel_spectral(
            x[ax], xi[ax], s, domain.rho, domain.lengths[ax], policy.n_kernel
        )[0, 0]
    return float(value)


def eval_G_images(
    x, t: float, xi, tau: float, domain: BoxDomain, policy: TruncationPolicy
) -> float:
    """Dirichlet Green function by the reflected-source (image) sum."""
    s = policy.check_separation(t, tau)
    x, xi = _check_points(domain, x, xi)
    value = 1.0
    for ax in range(3):
        value *= _axis_kernel_images(
            x[ax], xi[ax], s, domain.rho, domain.lengths[ax], policy.r_images
        )[0, 0]
    return float(value)


def eval_V(
    x, t: float, xi, tau: float, domain: BoxDomain, policy: TruncationPolicy
) -> float:
    """Smooth corrector V = G - Z, choosing the better-conditioned G construction."""
    s = policy.check_separation(t, tau)
    min_l2 = min(domain.lengths) ** 2
    if domain.rho * s <= policy.image_crossover * min_l2:
        g = eval_G_images(x, t, xi, tau, domain, policy)
    else:
        g = eval_G_spectral(x, t, xi, tau, domain, policy)
    return g - eval_Z(x, t, xi, tau, domain.rho, policy.eps_t)


def grad_x_G_spectral(
    x, t: float, xi, tau: float, domain: BoxDomain, policy: TruncationPolicy
) -> np.ndarray:
    """Gradient in x of the spectral Green function (term-wise sine -> cosine)."""
    s = policy.check_separation(t, tau)
    x, xi = _check_points(domain, x, xi)
    rho = domain.rho
    plain = []
    diffed = []
    for ax in range(3):
        L = domain.lengths[ax]
        a = np.arange(1, policy.n_kernel + 1)
        k = a * np.pi / L
        decay = np.exp(-rho * s * k**2)
        terms = decay * np.sin(k * x[ax]) * np.sin(k * xi[ax])
        dterms = decay * k * np.cos(k * x[ax]) * np.sin(k * xi[ax])
        plain.append((2.0 / L) * np.sum(terms))
        diffed.append((2.0 / L) * np.sum(dterms))
    out = np.empty(3)
    for i in range(3):
        out[i] = diffed[i] * np.prod([plain[j] for j in range(3) if j != i])
    return out
