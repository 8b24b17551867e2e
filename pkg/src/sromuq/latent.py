"""Polynomially enriched latent representation of snapshot data.

A centered snapshot s - s_ref is approximated as

    V_r s_hat + V_bar Xi g(s_hat),      s_hat = V_r^T (s - s_ref),

where [V_r | V_bar] are the leading r+q left singular vectors of the
centered snapshot matrix and g stacks elementwise powers 2..p of the
reduced state. Xi is fit by ridge least squares with the bases held
fixed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, IllConditioned, RankDeficient, Unreachable

__all__ = [
    "ProjectionBasis",
    "PolyRepresentation",
    "compute_pod",
    "align_basis",
    "energy_error",
    "select_rank",
    "feature_map_g",
    "fit_xi",
    "encode",
    "decode",
    "decode_trajectory",
    "snapshot_energy_captured",
]


@dataclass(frozen=True, eq=False)
class ProjectionBasis:
    """Leading POD vectors split into the linear block and the enrichment block."""

    v_r: np.ndarray
    v_bar: np.ndarray
    singular_values: np.ndarray
    r: int
    q: int

    @property
    def full(self):
        """The stacked N x (r+q) basis [V_r | V_bar]."""
        return np.hstack([self.v_r, self.v_bar])


@dataclass(frozen=True, eq=False)
class PolyRepresentation:
    """Fitted polynomial enrichment: basis, coefficient matrix, and metadata."""

    basis: ProjectionBasis
    xi: np.ndarray
    p: int
    gamma: float
    s_ref: np.ndarray

    def __post_init__(self):
        r, q, p = self.basis.r, self.basis.q, self.p
        if self.xi.shape != (q, (p - 1) * r):
            raise ValueError(
                f"xi shape {self.xi.shape} inconsistent with q={q}, p={p}, r={r}"
            )


def _fix_column_signs(u):
    """Deterministic sign convention: largest-magnitude entry of each
    column is positive (first occurrence wins ties), so bases computed
    from similar datasets land near each other on the manifold."""
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def _procrustes_rotation(block, reference):
    """Orthogonal matrix Q minimizing ||block @ Q - reference||_F."""
    u, _, vt = np.linalg.svd(block.T @ reference)
    return u @ vt


def align_basis(basis, reference):
    """Rotate each basis block onto a reference frame (orthogonal Procrustes).

    POD frames computed from overlapping datasets span nearly identical
    subspaces but differ by in-subspace rotations of near-degenerate
    modes; bases used together on the Stiefel manifold (logarithms,
    operator distances) must share one gauge. The rotation changes
    neither block's span nor the singular values, so representation
    quality is untouched; enrichment coefficients and reduced operators
    must be (re)fit in the aligned coordinates.
    """
    if basis.r != reference.r or basis.q != reference.q:
        raise ValueError("basis and reference split (r, q) must match")
    q_r = _procrustes_rotation(basis.v_r, reference.v_r)
    q_bar = _procrustes_rotation(basis.v_bar, reference.v_bar) if basis.q else np.eye(0)
    return ProjectionBasis(
        v_r=basis.v_r @ q_r,
        v_bar=basis.v_bar @ q_bar,
        singular_values=basis.singular_values,
        r=basis.r,
        q=basis.q,
    )


def compute_pod(snapshots, r, q):
    """Truncated SVD of the centered snapshot matrix.

    ``snapshots`` must be centered; the first r left singular vectors form
    the linear block and the next q the enrichment block. Raises
    :class:`RankDeficient` when r+q exceeds the numerical rank (singular
    value below 1e-12 times the largest).
    """
    if not snapshots.centered:
        raise ValueError("snapshots must be centered before POD")
    u, sigma, _ = np.linalg.svd(snapshots.data, full_matrices=False)
    if r < 1 or q < 0:
        raise ValueError("need r >= 1 and q >= 0")
    if r + q > sigma.size or sigma[r + q - 1] <= 1e-12 * sigma[0]:
        raise RankDeficient(
            f"r+q = {r + q} exceeds numerical rank of the snapshot matrix"
        )
    u = _fix_column_signs(u[:, : r + q])
    return ProjectionBasis(
        v_r=u[:, :r], v_bar=u[:, r : r + q], singular_values=sigma, r=r, q=q
    )


def energy_error(singular_values, r):
    """Fraction of snapshot energy missed by the leading r modes."""
    sigma = np.asarray(singular_values, dtype=np.float64)
    if r > sigma.size:
        raise ValueError(f"r={r} exceeds spectrum length {sigma.size}")
    total = np.sum(sigma**2)
    if total == 0.0:
        return 0.0
    return float(1.0 - np.sum(sigma[:r] ** 2) / total)


def select_rank(spectra, threshold):
    """Smallest r whose energy error is below ``threshold`` for every spectrum."""
    if not spectra:
        raise ValueError("need at least one singular-value spectrum")
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    max_r = min(len(s) for s in spectra)
    for r in range(1, max_r + 1):
        if all(energy_error(s, r) < threshold for s in spectra):
            return r
    raise Unreachable(f"no rank up to {max_r} meets threshold {threshold}")


def feature_map_g(s_hat, p):
    """Stack elementwise powers 2..p of the reduced state.

    Accepts a length-r vector (returns length (p-1)r) or an r x k matrix
    (returns (p-1)r x k).
    """
    if p < 2:
        raise ValueError("polynomial order p must be >= 2")
    s = np.asarray(s_hat, dtype=np.float64)
    return np.concatenate([s**j for j in range(2, p + 1)], axis=0)


def encode(state, rep):
    """Reduced coordinates of a full state: V_r^T (s - s_ref)."""
    return rep.basis.v_r.T @ (state - rep.s_ref)


def decode(s_hat, rep):
    """Reconstruct a full state: s_ref + V_r s_hat + V_bar Xi g(s_hat)."""
    return rep.s_ref + rep.basis.v_r @ s_hat + rep.basis.v_bar @ (
        rep.xi @ feature_map_g(s_hat, rep.p)
    )


def decode_trajectory(s_hat_traj, rep):
    """Columnwise :func:`decode` of an r x k reduced trajectory."""
    lin = rep.basis.v_r @ s_hat_traj
    enr = rep.basis.v_bar @ (rep.xi @ feature_map_g(s_hat_traj, rep.p))
    return rep.s_ref[:, None] + lin + enr


def fit_xi(snapshots, basis, p=2, gamma=0.0, cond_limit=1e14):
    """Ridge least-squares fit of the enrichment coefficient matrix.

    With the reduced snapshots fixed at s_hat_j = V_r^T (s_j - s_ref),
    Xi minimizes

        sum_j || (s_j - s_ref) - V_r s_hat_j - V_bar Xi g(s_hat_j) ||^2
            + gamma ||Xi||_F^2.

    Because V_bar is orthonormal and orthogonal to V_r, this reduces to
    the ridge problem ||W - Xi G||_F^2 + gamma ||Xi||_F^2 with
    W = V_bar^T (S - S_ref) and G the stacked feature columns.
    """
    if not snapshots.centered:
        raise ValueError("snapshots must be centered with a recorded s_ref")
    s_hat = basis.v_r.T @ snapshots.data
    g = feature_map_g(s_hat, p)
    w = basis.v_bar.T @ snapshots.data
    gram = g @ g.T + gamma * np.eye(g.shape[0])
    cond = np.linalg.cond(gram)
    if cond > cond_limit:
        raise IllConditioned(
            f"regularized feature Gram condition {cond:.3e} exceeds {cond_limit:.1e}"
        )
    xi = np.linalg.solve(gram, g @ w.T).T if basis.q > 0 else np.zeros((0, g.shape[0]))
    return PolyRepresentation(
        basis=basis, xi=xi, p=p, gamma=float(gamma), s_ref=snapshots.s_ref
    )


def snapshot_energy_captured(rep, snapshots):
    """Cumulative snapshot energy captured by the enriched representation.

    ||V_r S_hat + V_bar Xi G||_F^2 / ||S - S_ref||_F^2; with Xi = 0 this
    equals the classical POD cumulative energy at rank r.
    """
    if not snapshots.centered:
        raise ValueError("snapshots must be centered")
    s_hat = rep.basis.v_r.T @ snapshots.data
    recon = rep.basis.v_r @ s_hat + rep.basis.v_bar @ (
        rep.xi @ feature_map_g(s_hat, rep.p)
    )
    denom = np.linalg.norm(snapshots.data) ** 2
    if denom < 1e-28:
        raise DegenerateDenominator("centered snapshot energy is numerically zero")
    return float(np.linalg.norm(recon) ** 2 / denom)
