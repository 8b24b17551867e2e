"""Stochastic reduced-order modeling with operator inference and
projection-basis uncertainty quantification.

The package learns polynomially enriched reduced models from PDE snapshot
data, randomizes the projection basis on a constrained Stiefel manifold
through Dirichlet-weighted tangent-space convex combinations of anchor
bases, and propagates the resulting model-form uncertainty by Monte Carlo
to confidence-interval statistics.
"""

__version__ = "0.1.0"

from . import anchors, config, errors, fom, latent, matio, opinf, sampling, stiefel, uq  # noqa: F401,E402
