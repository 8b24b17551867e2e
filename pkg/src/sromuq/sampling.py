"""Stochastic projection-matrix model: tangent-space Gram matrix,
concentration solve, Dirichlet sampling, and retraction of convex
combinations of anchor logarithms.

Each sampled basis is

    exp_{phi*}( sum_i p_i log_{phi*}(phi_i) ),    p ~ Dirichlet(alpha),

with alpha minimizing a^T H a on the simplex, which makes the expected
tangent-space displacement as small as the anchor geometry allows and
centers the samples at the global basis.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleQP, LogNoConvergence
from .stiefel import StiefelPoint, TangentVector, riemann_exp, riemann_log

__all__ = [
    "DirichletModel",
    "StochasticSample",
    "gram_matrix",
    "solve_concentration",
    "sample_dirichlet",
    "sample_stream",
    "sample_projection",
    "select_operator_index",
]


@dataclass(frozen=True, eq=False)
class DirichletModel:
    """Concentration vector, tangent Gram matrix, and anchor logarithms."""

    alpha: np.ndarray
    h: np.ndarray
    anchor_logs: tuple

    def __post_init__(self):
        if np.any(self.alpha <= 0):
            raise ValueError("concentration parameters must be positive")
        if self.h.shape != (self.alpha.size, self.alpha.size):
            raise ValueError("H must be m x m")

    @property
    def m(self):
        return self.alpha.size


@dataclass(frozen=True, eq=False)
class StochasticSample:
    """One realization: simplex weights, sampled basis, selected anchor."""

    p: np.ndarray
    phi: StiefelPoint
    operator_index: int  # 1-based anchor index
    seed: int


def gram_matrix(anchor_points, global_basis, tol=1e-10, max_iter=100):
    """Anchor logarithms at the global basis and their trace Gram matrix.

    H[i, j] = tr( log(phi_i)^T log(phi_j) ); the diagonal holds squared
    log norms. Raises :class:`LogNoConvergence` tagged with the anchor
    index if any logarithm fails.
    """
    logs = []
    for i, anchor in enumerate(anchor_points):
        try:
            logs.append(riemann_log(global_basis, anchor, tol=tol, max_iter=max_iter))
        except LogNoConvergence as err:
            raise LogNoConvergence(err.residual, err.iterations, index=i) from None
    m = len(logs)
    h = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            h[i, j] = h[j, i] = float(np.sum(logs[i].matrix * logs[j].matrix))
    return h, tuple(logs)


def _equality_solve(h, free, fixed_value, n_fixed_total):
    """Minimize a^T H a over the free coordinates with their sum pinned."""
    hf = h[np.ix_(free, free)]
    rhs_coupling = h[np.ix_(free, ~_mask_from(free, h.shape[0]))]
    nf = len(free)
    kkt = np.zeros((nf + 1, nf + 1))
    kkt[:nf, :nf] = 2.0 * hf
    kkt[:nf, nf] = 1.0
    kkt[nf, :nf] = 1.0
    rhs = np.zeros(nf + 1)
    if rhs_coupling.size:
        rhs[:nf] = -2.0 * rhs_coupling.sum(axis=1) * fixed_value
    rhs[nf] = 1.0 - n_fixed_total * fixed_value
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    return sol[:nf], -sol[nf]  # sol[nf] carries the negated equality multiplier


def _mask_from(indices, m):
    mask = np.zeros(m, dtype=bool)
    mask[indices] = True
    return mask


def solve_concentration(h, eps_alpha=1e-6, max_cycles=None):
    """Minimize a^T H a over the simplex with a floor a_i >= eps_alpha.

    Active-set solve: the equality-constrained minimizer is closed-form;
    coordinates that fall below the floor are pinned there and released
    again if their KKT multiplier turns negative. The simplex constraint
    sum(a) = 1 pins the scale that the raw positivity-only program leaves
    free.
    """
    h = np.asarray(h, dtype=np.float64)
    m = h.shape[0]
    if m == 1:
        return np.array([1.0])
    if not np.allclose(h, h.T, atol=1e-10):
        raise ValueError("H must be symmetric")
    if max_cycles is None:
        max_cycles = 4 * m + 8
    active = np.zeros(m, dtype=bool)
    for _ in range(max_cycles):
        free = np.flatnonzero(~active)
        if free.size == 0:
            raise InfeasibleQP("all coordinates pinned at the floor")
        alpha = np.full(m, eps_alpha)
        a_free, nu = _equality_solve(h, free, eps_alpha, int(active.sum()))
        alpha[free] = a_free
        if np.any(alpha[free] < eps_alpha - 1e-12):
            worst = free[np.argmin(alpha[free])]
            active[worst] = True
            continue
        # release pinned coordinates whose bound multiplier is negative
        grad = 2.0 * h @ alpha
        multipliers = grad[active] - nu
        if active.any() and np.any(multipliers < -1e-10):
            release = np.flatnonzero(active)[np.argmin(multipliers)]
            active[release] = False
            continue
        return alpha
    raise InfeasibleQP("active-set iteration did not settle")


def sample_stream(seed, index):
    """Counter-based generator for one sample: independent of draw order."""
    return np.random.Generator(
        np.random.Philox(key=int(seed) % (1 << 64), counter=int(index) << 128)
    )


def sample_dirichlet(alpha, n, seed):
    """n i.i.d. Dirichlet(alpha) draws via normalized Gamma variates.

    Sample j consumes only its own counter block of the Philox stream,
    so results are reproducible per (seed, j) regardless of batching.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if n < 1:
        raise ValueError("need n >= 1 draws")
    out = np.empty((n, alpha.size))
    for j in range(n):
        rng = sample_stream(seed, j)
        g = rng.standard_gamma(alpha)
        total = g.sum()
        while total == 0.0:  # guard against underflow at tiny alpha
            g = rng.standard_gamma(alpha)
            total = g.sum()
        out[j] = g / total
    return out


def sample_projection(p, model, global_basis):
    """Retract the p-weighted combination of anchor logs to the manifold."""
    p = np.asarray(p, dtype=np.float64)
    delta = np.zeros_like(global_basis.matrix)
    for weight, log in zip(p, model.anchor_logs):
        delta += weight * log.matrix
    return riemann_exp(global_basis, TangentVector(delta, global_basis))


def select_operator_index(p):
    """1-based index of the largest weight; ties break to the lowest index."""
    return int(np.argmax(p)) + 1
