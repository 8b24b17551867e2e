"""Full-order solver for the parameterized 1D viscous Burgers' equation.

The PDE ds/dt + s ds/dx = (1/Re) d2s/dx2 on [0, 1] with homogeneous
Dirichlet boundaries is semi-discretized with second-order central
differences on a uniform grid and advanced with implicit backward Euler,
each step solved by a damped-free Newton iteration on the tridiagonal
system.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import NewtonDivergence

__all__ = [
    "FomConfig",
    "SnapshotMatrix",
    "assemble_initial_state",
    "burgers_rhs",
    "step_backward_euler",
    "simulate",
    "center_snapshots",
]


@dataclass(frozen=True)
class FomConfig:
    """Burgers full-order model parameters.

    N = n_elements + 1 grid nodes on [0, 1]; ``mu`` scales the
    half-domain sine initial condition.
    """

    n_elements: int = 256
    reynolds: float = 1000.0
    dt: float = 1e-3
    t_final: float = 2.0
    mu: float = 1.0
    newton_tol: float = 1e-10
    newton_max_iter: int = 25

    def __post_init__(self):
        if self.n_elements < 2:
            raise ValueError("n_elements must be >= 2")
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if self.reynolds <= 0:
            raise ValueError("reynolds must be positive")
        if self.newton_tol <= 0 or self.newton_max_iter < 1:
            raise ValueError("invalid Newton settings")

    @property
    def x_grid(self):
        return np.linspace(0.0, 1.0, self.n_elements + 1)


@dataclass
class SnapshotMatrix:
    """State snapshots in columns, with grid/time metadata.

    ``data`` holds raw states when ``centered`` is False; after
    :func:`center_snapshots` it holds deviations from ``s_ref`` and the
    raw states are recoverable as ``data + s_ref[:, None]``.
    """

    data: np.ndarray
    x_grid: np.ndarray
    times: np.ndarray
    s_ref: np.ndarray = field(default=None)
    centered: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.x_grid = np.asarray(self.x_grid, dtype=np.float64)
        self.times = np.asarray(self.times, dtype=np.float64)
        if self.s_ref is None:
            self.s_ref = np.zeros(self.data.shape[0])
        self.s_ref = np.asarray(self.s_ref, dtype=np.float64)
        if self.data.shape[1] != self.times.size:
            raise ValueError("snapshot column count must match times length")
        if self.data.shape[0] != self.x_grid.size:
            raise ValueError("snapshot row count must match grid length")

    @property
    def n_nodes(self):
        return self.data.shape[0]

    @property
    def n_snapshots(self):
        return self.data.shape[1]

    def raw(self):
        """Return uncentered snapshots regardless of centering state."""
        if self.centered:
            return self.data + self.s_ref[:, None]
        return self.data


def assemble_initial_state(mu, x_grid):
    """Half-domain sine initial condition: mu*sin(2*pi*x) on x <= 0.5, else 0."""
    x = np.asarray(x_grid, dtype=np.float64)
    s = np.where(x <= 0.5, mu * np.sin(2.0 * np.pi * x), 0.0)
    s[0] = 0.0
    s[-1] = 0.0
    return s


def burgers_rhs(state, reynolds, h):
    """Semi-discrete right-hand side on interior nodes (boundaries fixed at 0)."""
    s = state
    rhs = np.zeros_like(s)
    conv = s[1:-1] * (s[2:] - s[:-2]) / (2.0 * h)
    diff = (s[2:] - 2.0 * s[1:-1] + s[:-2]) / (h * h)
    rhs[1:-1] = -conv + diff / reynolds
    return rhs


def _newton_step_matrix(u, dt, reynolds, h):
    """Banded Jacobian of the backward-Euler residual (ab-format, lower/upper 1)."""
    n = u.size - 2  # interior unknowns
    inv2h = 1.0 / (2.0 * h)
    invh2 = 1.0 / (h * h)
    ab = np.zeros((3, n))
    # residual R_i(u) = u_i - s_i - dt * f_i(u); rows over interior i = 1..N-2
    ui = u[1:-1]
    up = u[2:]
    um = u[:-2]
    diag = 1.0 - dt * (-(up - um) * inv2h - 2.0 * invh2 / reynolds)
    upper = -dt * (-ui * inv2h + invh2 / reynolds)  # dR_i/du_{i+1}
    lower = -dt * (ui * inv2h + invh2 / reynolds)  # dR_i/du_{i-1}
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return ab


def step_backward_euler(state, cfg, residual_trace=None):
    """Advance one implicit backward-Euler step with a Newton solve.

    Returns the new state; boundary entries stay exactly zero. Raises
    :class:`NewtonDivergence` when the residual max-norm is not below
    ``cfg.newton_tol`` within ``cfg.newton_max_iter`` iterations. Pass a
    list as ``residual_trace`` to record the Newton residual history.
    """
    s = np.asarray(state, dtype=np.float64)
    h = 1.0 / cfg.n_elements
    u = s.copy()
    residual = np.inf
    for _ in range(cfg.newton_max_iter):
        r_full = u - s - cfg.dt * burgers_rhs(u, cfg.reynolds, h)
        r = r_full[1:-1]
        residual = np.max(np.abs(r)) if r.size else 0.0
        if residual_trace is not None:
            residual_trace.append(residual)
        if residual <= cfg.newton_tol:
            u[0] = 0.0
            u[-1] = 0.0
            return u
        ab = _newton_step_matrix(u, cfg.dt, cfg.reynolds, h)
        du = solve_banded((1, 1), ab, r)
        u[1:-1] -= du
    raise NewtonDivergence(residual, cfg.newton_max_iter)


def simulate(cfg):
    """Run the full-order model and collect k = t_final/dt + 1 raw snapshots."""
    n_steps = int(round(cfg.t_final / cfg.dt))
    times = np.arange(n_steps + 1) * cfg.dt
    x = cfg.x_grid
    data = np.empty((x.size, n_steps + 1))
    data[:, 0] = assemble_initial_state(cfg.mu, x)
    u = data[:, 0].copy()
    for n in range(1, n_steps + 1):
        try:
            u = step_backward_euler(u, cfg)
        except NewtonDivergence as err:
            raise NewtonDivergence(err.residual, err.iterations, time_index=n) from None
        data[:, n] = u
    return SnapshotMatrix(data=data, x_grid=x, times=times)


def center_snapshots(snapshots):
    """Subtract the column mean, recording it as the reference state."""
    if snapshots.centered:
        return snapshots
    s_ref = snapshots.data.mean(axis=1)
    return SnapshotMatrix(
        data=snapshots.data - s_ref[:, None],
        x_grid=snapshots.x_grid,
        times=snapshots.times,
        s_ref=s_ref,
        centered=True,
    )
