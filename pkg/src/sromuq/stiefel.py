"""Riemannian primitives on the Stiefel manifold St(N, n) and its
linearly constrained subset {M : B^T M = 0}.

The exponential uses the canonical-metric closed form (block 2n x 2n
matrix exponential); the logarithm uses the iterative algebraic shooting
scheme that alternates a principal matrix logarithm with an orthogonal
update of the completion block. Both preserve linear constraints of the
form B^T M = 0 exactly (up to roundoff) whenever the basepoint and the
inputs satisfy them.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, logm

from .errors import LogNoConvergence, NotTangent

__all__ = [
    "ConstraintMatrix",
    "StiefelPoint",
    "TangentVector",
    "boundary_constraint",
    "qr_positive",
    "project_tangent",
    "riemann_exp",
    "riemann_log",
    "geodesic_distance",
    "tangent_mean_residual",
]

TOL_ORTH = 1e-8
TOL_TANGENT = 1e-8
TOL_CONSTRAINT = 1e-8


@dataclass(frozen=True, eq=False)
class ConstraintMatrix:
    """Full-column-rank matrix B whose span must be orthogonal to bases."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=np.float64))
        if np.linalg.matrix_rank(self.matrix) < self.matrix.shape[1]:
            raise ValueError("constraint matrix must have full column rank")

    def residual(self, m):
        return float(np.linalg.norm(self.matrix.T @ m))


def boundary_constraint(n_nodes):
    """Constraint selecting the first and last rows (Dirichlet boundaries)."""
    b = np.zeros((n_nodes, 2))
    b[0, 0] = 1.0
    b[-1, 1] = 1.0
    return ConstraintMatrix(b)


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    """Orthonormal N x n matrix, optionally tied to a linear constraint."""

    matrix: np.ndarray
    constraint: ConstraintMatrix = None
    tol_orth: float = TOL_ORTH
    tol_constraint: float = TOL_CONSTRAINT

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        object.__setattr__(self, "matrix", m)
        n = m.shape[1]
        orth = np.linalg.norm(m.T @ m - np.eye(n))
        if orth > self.tol_orth:
            raise ValueError(f"columns not orthonormal: ||M^T M - I||_F = {orth:.3e}")
        if self.constraint is not None:
            res = self.constraint.residual(m)
            if res > self.tol_constraint:
                raise ValueError(f"constraint violated: ||B^T M||_F = {res:.3e}")

    @property
    def shape(self):
        return self.matrix.shape


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Element of the tangent space at ``basepoint``: base^T delta is skew."""

    matrix: np.ndarray
    basepoint: StiefelPoint
    tol_tangent: float = field(default=TOL_TANGENT, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        object.__setattr__(self, "matrix", m)
        a = self.basepoint.matrix.T @ m
        skew = np.linalg.norm(a + a.T)
        if skew > self.tol_tangent * max(1.0, np.linalg.norm(m)):
            raise NotTangent(
                f"base^T delta not skew-symmetric: residual {skew:.3e}"
            )

    @property
    def norm(self):
        return float(np.linalg.norm(self.matrix))


def qr_positive(m):
    """Thin QR with the diagonal of R forced nonnegative (deterministic Q)."""
    q, r = np.linalg.qr(m)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, r * signs[:, None]


def project_tangent(base, ambient):
    """Orthogonal projection of an ambient matrix onto T_base St(N, n)."""
    u = base.matrix
    a = u.T @ ambient
    sym = 0.5 * (a + a.T)
    return TangentVector(ambient - u @ sym, base)


def riemann_exp(base, delta):
    """Canonical-metric exponential: follow the geodesic from ``base``
    with initial velocity ``delta`` for unit time.

    With A = U^T D (skew) and QR = (I - U U^T) D, the geodesic endpoint is

        [U  Q] expm([[A, -R^T], [R, 0]]) [[I], [0]],

    re-orthonormalized by sign-fixed QR to remove roundoff drift. The
    output inherits the basepoint's constraint.
    """
    anchored_here = delta.basepoint is base or delta.basepoint.matrix is base.matrix
    if not anchored_here and not np.array_equal(delta.basepoint.matrix, base.matrix):
        raise ValueError("tangent vector is anchored at a different basepoint")
    u = base.matrix
    d = delta.matrix
    n = u.shape[1]
    a = u.T @ d
    a = 0.5 * (a - a.T)
    k = d - u @ a
    q, r = qr_positive(k - u @ (u.T @ k))
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = a
    block[:n, n:] = -r.T
    block[n:, :n] = r
    e = expm(block)
    geo = u @ e[:n, :n] + q @ e[n:, :n]
    out, _ = qr_positive(geo)
    return StiefelPoint(out, constraint=base.constraint)


def _orthogonal_completion(mn):
    """Complete a 2p x p orthonormal block to an orthogonal 2p x 2p matrix
    with determinant +1 and first p columns equal to the input."""
    two_p, p = mn.shape
    full, _ = np.linalg.qr(mn, mode="complete")
    comp = full[:, p:]
    # make the first block exactly mn (qr may flip column signs)
    v = np.hstack([mn, comp])
    if np.linalg.det(v) < 0:
        v[:, -1] = -v[:, -1]
    return v


def riemann_log(base, target, tol=1e-10, max_iter=100):
    """Canonical-metric logarithm by the iterative algebraic shooting scheme.

    Produces the tangent vector at ``base`` whose exponential reproduces
    ``target``. Each sweep takes the principal log of the current 2p x 2p
    orthogonal representative and rotates its completion block until the
    lower-right subblock vanishes.

    Raises :class:`LogNoConvergence` when the subblock norm is still above
    ``tol`` after ``max_iter`` sweeps (target outside the convergence
    neighborhood of ``base``).
    """
    u = base.matrix
    w = target.matrix
    p = u.shape[1]
    m = u.T @ w
    k = w - u @ m
    q, n0 = qr_positive(k)
    v = _orthogonal_completion(np.vstack([m, n0]))
    # Procrustes alignment of the completion block improves conditioning
    d, _, rt = np.linalg.svd(v[p:, p:])
    rot = rt.T @ d.T
    v[:, p:] = v[:, p:] @ rot
    if np.linalg.det(v) < 0:
        v[:, -1] = -v[:, -1]

    residual = np.inf
    for _ in range(max_iter):
        lv = logm(v)
        if np.iscomplexobj(lv):
            lv = lv.real
        lv = 0.5 * (lv - lv.T)
        c = lv[p:, p:]
        residual = np.linalg.norm(c)
        if residual <= tol:
            a = lv[:p, :p]
            b = lv[p:, :p]
            return TangentVector(u @ a + q @ b, base)
        v[:, p:] = v[:, p:] @ expm(-c)
    raise LogNoConvergence(residual, max_iter)


def geodesic_distance(a, b, tol=1e-10, max_iter=100):
    """Frobenius norm of the connecting tangent vector log_a(b)."""
    return riemann_log(a, b, tol=tol, max_iter=max_iter).norm


def tangent_mean_residual(base, samples, tol=1e-10, max_iter=100):
    """Norm of the tangent-space mean of the samples' logarithms at ``base``.

    A value of zero means ``base`` is the exact Karcher mean of the
    samples to first order.
    """
    if not samples:
        raise ValueError("need at least one sample")
    acc = np.zeros_like(base.matrix)
    for j, s in enumerate(samples):
        try:
            acc += riemann_log(base, s, tol=tol, max_iter=max_iter).matrix
        except LogNoConvergence as err:
            raise LogNoConvergence(err.residual, err.iterations, index=j) from None
    return float(np.linalg.norm(acc / len(samples)))
