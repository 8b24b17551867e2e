"""Operator inference: learn reduced-order matrix operators from reduced
trajectories by Tikhonov-regularized least squares, and integrate the
resulting polynomial latent dynamics

    ds_hat/dt = c_hat + A_hat s_hat + H_hat (s_hat kron s_hat)
                + P_hat ghat(s_hat).

The quadratic term keeps the full (redundant) Kronecker product; ghat
stacks elementwise monomials of degrees 3..2p by default.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    AllUnstable,
    BlowUp,
    DegenerateDenominator,
    IllConditioned,
    TooFewSamples,
)

__all__ = [
    "FeatureSpecGhat",
    "ReducedOperators",
    "time_derivatives",
    "feature_map_ghat",
    "infer_operators",
    "grid_search_regularization",
    "default_lambda_grid",
    "rom_rhs",
    "integrate_rom",
    "relative_state_error",
]


@dataclass(frozen=True)
class FeatureSpecGhat:
    """Monomial dictionary for the higher-order feature vector ghat.

    Default degrees 3..2p, applied elementwise, giving length
    d(r, p) = r * len(degrees).
    """

    r: int
    p: int = 2
    degrees: tuple = None

    def __post_init__(self):
        if self.degrees is None:
            object.__setattr__(self, "degrees", tuple(range(3, 2 * self.p + 1)))
        else:
            object.__setattr__(self, "degrees", tuple(self.degrees))
        if any(d < 3 or d > 2 * self.p for d in self.degrees):
            raise ValueError(f"degrees must lie in [3, {2 * self.p}]")

    @property
    def length(self):
        return self.r * len(self.degrees)


@dataclass(frozen=True, eq=False)
class ReducedOperators:
    """Learned operator tuple with its regularization record."""

    c_hat: np.ndarray
    a_hat: np.ndarray
    h_hat: np.ndarray
    p_hat: np.ndarray
    spec: FeatureSpecGhat
    lambdas: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        r = self.spec.r
        if self.c_hat.shape != (r,):
            raise ValueError("c_hat must be a length-r vector")
        if self.a_hat.shape != (r, r):
            raise ValueError("a_hat must be r x r")
        if self.h_hat.shape != (r, r * r):
            raise ValueError("h_hat must be r x r^2")
        if self.p_hat.shape != (r, self.spec.length):
            raise ValueError("p_hat must be r x d(r, p)")

    @property
    def r(self):
        return self.spec.r


def time_derivatives(s_hat_traj, dt):
    """Fourth-order finite-difference time derivative of an r x k trajectory.

    Interior columns use the 5-point central stencil; the two columns at
    each end use one-sided 4th-order stencils so the output stays aligned
    with the input. Requires k >= 5.
    """
    y = np.asarray(s_hat_traj, dtype=np.float64)
    k = y.shape[1]
    if k < 5:
        raise TooFewSamples(f"need at least 5 snapshots for the stencil, got {k}")
    d = np.empty_like(y)
    inv12h = 1.0 / (12.0 * dt)
    d[:, 2:-2] = (y[:, :-4] - 8 * y[:, 1:-3] + 8 * y[:, 3:-1] - y[:, 4:]) * inv12h
    d[:, 0] = (-25 * y[:, 0] + 48 * y[:, 1] - 36 * y[:, 2] + 16 * y[:, 3] - 3 * y[:, 4]) * inv12h
    d[:, 1] = (-3 * y[:, 0] - 10 * y[:, 1] + 18 * y[:, 2] - 6 * y[:, 3] + y[:, 4]) * inv12h
    d[:, -2] = (3 * y[:, -1] + 10 * y[:, -2] - 18 * y[:, -3] + 6 * y[:, -4] - y[:, -5]) * inv12h
    d[:, -1] = (25 * y[:, -1] - 48 * y[:, -2] + 36 * y[:, -3] - 16 * y[:, -4] + 3 * y[:, -5]) * inv12h
    return d


def feature_map_ghat(s_hat, spec):
    """Elementwise monomial features for the configured degrees.

    Accepts a length-r vector or an r x k matrix.
    """
    s = np.asarray(s_hat, dtype=np.float64)
    if len(spec.degrees) == 0:
        shape = (0,) if s.ndim == 1 else (0, s.shape[1])
        return np.zeros(shape)
    return np.concatenate([s**d for d in spec.degrees], axis=0)


def _kron_columns(s):
    """Columnwise full Kronecker product s kron s for an r x k matrix."""
    r, k = s.shape
    return (s[:, None, :] * s[None, :, :]).reshape(r * r, k)


def _data_matrix(s_hat_traj, spec):
    k = s_hat_traj.shape[1]
    ones = np.ones((1, k))
    return np.vstack([ones, s_hat_traj, _kron_columns(s_hat_traj), feature_map_ghat(s_hat_traj, spec)])


def infer_operators(s_hat_traj, ds_hat_traj, spec, lambdas=(0.0, 0.0, 0.0), cond_limit=1e14):
    """Solve the blockwise-regularized operator regression.

    Minimizes, over (c, A, H, P),

        sum_j ||c + A s_j + H (s_j kron s_j) + P ghat(s_j) - ds_j||^2
        + (l1/2)(||c||^2 + ||A||_F^2) + (l2/2)||H||_F^2 + (l3/2)||P||_F^2

    via the augmented normal equations, solved once for all rows.
    """
    s = np.asarray(s_hat_traj, dtype=np.float64)
    ds = np.asarray(ds_hat_traj, dtype=np.float64)
    r, k = s.shape
    if ds.shape != s.shape:
        raise ValueError("trajectory and derivative shapes differ")
    n_feat = 1 + r + r * r + spec.length
    if k < n_feat:
        warnings.warn(
            f"only {k} snapshots for {n_feat} regression features; "
            "operators will be rank-deficient without regularization",
            stacklevel=2,
        )
    l1, l2, l3 = lambdas
    d = _data_matrix(s, spec)
    gram = d @ d.T
    ridge = np.concatenate([
        np.full(1 + r, l1 / 2.0),
        np.full(r * r, l2 / 2.0),
        np.full(spec.length, l3 / 2.0),
    ])
    gram[np.diag_indices_from(gram)] += ridge
    cond = np.linalg.cond(gram)
    if cond > cond_limit:
        raise IllConditioned(
            f"augmented Gram condition {cond:.3e} exceeds {cond_limit:.1e}"
        )
    sol = np.linalg.solve(gram, d @ ds.T)  # (n_feat, r)
    ops = sol.T
    return ReducedOperators(
        c_hat=ops[:, 0].copy(),
        a_hat=ops[:, 1 : 1 + r].copy(),
        h_hat=ops[:, 1 + r : 1 + r + r * r].copy(),
        p_hat=ops[:, 1 + r + r * r :].copy(),
        spec=spec,
        lambdas=tuple(float(v) for v in lambdas),
    )


def default_lambda_grid():
    """(l1, l2, l3) candidates with l2 = l3 tied, 25 points."""
    vals = [1e-6, 1e-4, 1e-2, 1.0, 1e2]
    return [(a, b, b) for a in vals for b in vals]


def grid_search_regularization(s_hat_traj, ds_hat_traj, spec, grid, evaluate):
    """Pick the grid point whose operators minimize a training-error functional.

    ``evaluate(ops)`` returns the training relative state error of the
    integrated reduced model (may raise :class:`BlowUp` for divergent
    candidates). Ties break toward the largest l1. Raises
    :class:`AllUnstable` when every candidate diverges.
    """
    if not grid:
        raise ValueError("regularization grid is empty")
    best = None
    for lambdas in grid:
        try:
            ops = infer_operators(s_hat_traj, ds_hat_traj, spec, lambdas)
            err = evaluate(ops)
        except (BlowUp, IllConditioned):
            continue
        if not np.isfinite(err):
            continue
        key = (err, -lambdas[0])
        if best is None or key < best[0]:
            best = (key, lambdas, ops)
    if best is None:
        raise AllUnstable("every regularization candidate produced a divergent model")
    return best[1], best[2]


def rom_rhs(s_hat, ops):
    """Polynomial right-hand side of the latent dynamics."""
    s = np.asarray(s_hat, dtype=np.float64)
    out = ops.c_hat + ops.a_hat @ s + ops.h_hat @ np.kron(s, s)
    if ops.spec.length:
        out = out + ops.p_hat @ feature_map_ghat(s, ops.spec)
    return out


def integrate_rom(ops, s_hat0, t_eval, rtol=1e-6, atol=1e-9):
    """Integrate the latent dynamics with the adaptive Dormand-Prince 5(4)
    pair, sampling the dense output at ``t_eval``.

    Raises :class:`BlowUp` when the state norm exceeds
    1e6 * (1 + ||s_hat0||), which signals unstable learned dynamics.
    """
    s0 = np.asarray(s_hat0, dtype=np.float64)
    if not np.all(np.isfinite(s0)):
        raise ValueError("initial reduced state must be finite")
    t_eval = np.asarray(t_eval, dtype=np.float64)
    bound = 1e6 * (1.0 + np.linalg.norm(s0))

    def rhs(_t, y):
        return rom_rhs(y, ops)

    def blow_up(_t, y):
        return bound - np.linalg.norm(y)

    blow_up.terminal = True
    sol = solve_ivp(
        rhs,
        (t_eval[0], t_eval[-1]),
        s0,
        method="RK45",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
        events=blow_up,
        dense_output=False,
    )
    if sol.status == 1 or not sol.success or sol.y.shape[1] != t_eval.size:
        raise BlowUp(
            f"trajectory norm exceeded {bound:.3e} (integration stopped at t={sol.t[-1]:.4g})"
        )
    return sol.y


def relative_state_error(snapshots, reconstructed):
    """||S - reconstruction||_F / ||S - S_ref||_F over a snapshot set."""
    raw = snapshots.raw()
    if raw.shape != np.shape(reconstructed):
        raise ValueError("snapshot and reconstruction shapes differ")
    centered = raw - snapshots.s_ref[:, None]
    denom = np.linalg.norm(centered)
    if denom < 1e-14:
        raise DegenerateDenominator("||S - S_ref||_F is numerically zero")
    return float(np.linalg.norm(raw - np.asarray(reconstructed)) / denom)
