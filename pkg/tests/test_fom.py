import numpy as np
import pytest

from sromuq.errors import NewtonDivergence
from sromuq.fom import (
    FomConfig,
    assemble_initial_state,
    center_snapshots,
    simulate,
    step_backward_euler,
)


@pytest.fixture(scope="module")
def nominal_run():
    return simulate(FomConfig(mu=1.0, n_elements=128, dt=2e-3, t_final=1.0))


def test_initial_condition_values():
    x = np.linspace(0.0, 1.0, 257)
    s = assemble_initial_state(1.0, x)
    assert s[np.argmin(np.abs(x - 0.25))] == pytest.approx(1.0, abs=1e-12)
    assert s[np.argmin(np.abs(x - 0.75))] == 0.0
    assert s[0] == 0.0 and s[-1] == 0.0


def test_initial_condition_zero_amplitude():
    x = np.linspace(0.0, 1.0, 65)
    assert np.array_equal(assemble_initial_state(0.0, x), np.zeros(65))


def test_zero_state_is_fixed_point():
    cfg = FomConfig(n_elements=64)
    out = step_backward_euler(np.zeros(65), cfg)
    assert np.array_equal(out, np.zeros(65))


def test_one_step_against_fine_substep_oracle():
    # oracle: 100 backward-Euler substeps at dt = 1e-5 over the same window;
    # the gap is the scheme's own O(dt) truncation error, measured at 7.1e-5
    cfg = FomConfig(dt=1e-3)
    s0 = assemble_initial_state(1.0, cfg.x_grid)
    coarse = step_backward_euler(s0, cfg)
    fine_cfg = FomConfig(dt=1e-5)
    ref = s0.copy()
    for _ in range(100):
        ref = step_backward_euler(ref, fine_cfg)
    gap = np.max(np.abs(coarse - ref))
    assert gap < 2e-4
    # first-order consistency: halving dt roughly halves the gap
    half_cfg = FomConfig(dt=5e-4)
    mid = step_backward_euler(step_backward_euler(s0, half_cfg), half_cfg)
    assert np.max(np.abs(mid - ref)) < 0.75 * gap


def test_linearized_regime_matches_pure_diffusion():
    cfg = FomConfig(n_elements=64, dt=1e-3)
    x = cfg.x_grid
    s0 = 1e-4 * np.sin(np.pi * x)
    s0[0] = s0[-1] = 0.0
    stepped = step_backward_euler(s0, cfg)
    # analytic backward-Euler diffusion solve of the tridiagonal system
    n = x.size - 2
    h = 1.0 / cfg.n_elements
    lam = cfg.dt / (cfg.reynolds * h * h)
    a = np.zeros((3, n))
    a[0, 1:] = -lam
    a[1, :] = 1.0 + 2.0 * lam
    a[2, :-1] = -lam
    from scipy.linalg import solve_banded

    interior = solve_banded((1, 1), a, s0[1:-1])
    ref = np.concatenate([[0.0], interior, [0.0]])
    assert np.max(np.abs(stepped - ref)) < 1e-6 * np.max(np.abs(s0))


def test_newton_divergence_on_huge_step():
    cfg = FomConfig(n_elements=64, dt=50.0, newton_max_iter=4)
    s0 = assemble_initial_state(1.0, cfg.x_grid)
    with pytest.raises(NewtonDivergence):
        step_backward_euler(s0, cfg)


def test_newton_residuals_shrink_superlinearly():
    cfg = FomConfig(newton_tol=1e-14, newton_max_iter=30)
    s0 = assemble_initial_state(1.0, cfg.x_grid)
    trace = []
    step_backward_euler(s0, cfg, residual_trace=trace)
    trace = [t for t in trace if t > 0]
    ratios = [trace[i + 1] / trace[i] for i in range(len(trace) - 1)]
    assert len(ratios) >= 2
    # each contraction factor beats the previous one (superlinear tail)
    assert ratios[-1] < ratios[0]
    assert trace[-1] < 1e-10


def test_simulate_shapes_and_boundaries():
    snap = simulate(FomConfig(mu=1.0, t_final=2.0, dt=1e-3))
    assert snap.data.shape == (257, 2001)
    assert snap.times[0] == 0.0
    assert snap.times[-1] == pytest.approx(2.0)
    assert np.abs(snap.data[0]).max() == 0.0
    assert np.abs(snap.data[-1]).max() == 0.0


def test_simulate_zero_mu_all_zero():
    snap = simulate(FomConfig(mu=0.0, n_elements=32, dt=1e-2, t_final=0.1))
    assert np.array_equal(snap.data, np.zeros_like(snap.data))


def test_viscous_decay(nominal_run):
    i_early = np.argmin(np.abs(nominal_run.times - 0.25))
    i_late = np.argmin(np.abs(nominal_run.times - 1.0))
    assert nominal_run.data[:, i_late].max() < nominal_run.data[:, i_early].max()


def test_grid_refinement_converges():
    at_t1 = {}
    for n in (128, 256, 512):
        snap = simulate(FomConfig(mu=1.0, n_elements=n, dt=1e-3, t_final=1.0))
        at_t1[n] = snap.data[:, -1]
    # grids nest, so states compare directly on the shared nodes
    d_128_256 = np.max(np.abs(at_t1[256][::2] - at_t1[128]))
    d_256_512 = np.max(np.abs(at_t1[512][::2] - at_t1[256]))
    assert d_256_512 < d_128_256


def test_centering_roundtrip(nominal_run):
    centered = center_snapshots(nominal_run)
    assert centered.centered
    assert np.allclose(centered.data + centered.s_ref[:, None], nominal_run.data)
    assert np.allclose(centered.data.mean(axis=1), 0.0, atol=1e-13)
