"""Spectral Green-function solver for the linear Stokes system on a 3D box.

The package has three layers:

* ``domain``, ``modal`` -- box geometry, Dirichlet sine eigenbasis, fast
  transforms, and the exact modal calculus (closed-form trig couplings);
* ``kernels``, ``heat`` -- pointwise heat kernels (free-space, spectral and
  image-sum Green functions) and the operator algebra (heat operator, inverse
  Dirichlet Laplacian, Duhamel heat potential);
* ``stokes``, ``manufactured``, ``verify`` -- the pressure/velocity pipeline,
  manufactured solutions, and the numerical verification harness, driven by
  ``config``/``snapshots``/``cli``.
"""

from .domain import (
    BoxDomain,
    GridField,
    Mode,
    SpaceTimeField,
    SpatialGrid,
    SpectralField,
    TimeGrid,
    VectorField,
    enumerate_modes,
    eval_eigenfunction,
    forward_sine,
    inverse_sine,
    l2_norm,
    l2_norm_spacetime,
)

__all__ = [
    "BoxDomain",
    "GridField",
    "Mode",
    "SpaceTimeField",
    "SpatialGrid",
    "SpectralField",
    "TimeGrid",
    "VectorField",
    "enumerate_modes",
    "eval_eigenfunction",
    "forward_sine",
    "inverse_sine",
    "l2_norm",
    "l2_norm_spacetime",
]

__version__ = "0.1.0"
