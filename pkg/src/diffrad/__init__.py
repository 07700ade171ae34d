"""diffrad: neural differential radiance fields with Monte Carlo oracles.

A desk-scale differentiable light-transport engine. Two neural fields
(primal radiance and its per-parameter derivative) are trained by
minimizing Monte Carlo residual norms of the transport equations, then
drive inverse BRDF-parameter recovery. Finite-difference, forward-dual,
and adjoint (RB/PRB) estimators serve as independent gradient oracles.
"""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
