import numpy as np
import pytest

from sromuq.errors import LogNoConvergence, NotTangent
from sromuq.stiefel import (
    StiefelPoint,
    TangentVector,
    boundary_constraint,
    geodesic_distance,
    project_tangent,
    qr_positive,
    riemann_exp,
    riemann_log,
    tangent_mean_residual,
)


def random_point(rng, n_rows, n_cols, constraint=None):
    m = rng.standard_normal((n_rows, n_cols))
    if constraint is not None:
        m[0] = 0.0
        m[-1] = 0.0
    q, _ = qr_positive(m)
    return StiefelPoint(q, constraint=constraint)


def random_tangent(rng, base, norm):
    amb = rng.standard_normal(base.shape)
    if base.constraint is not None:
        amb[0] = 0.0
        amb[-1] = 0.0
    t = project_tangent(base, amb)
    return TangentVector(t.matrix * (norm / np.linalg.norm(t.matrix)), base)


def test_point_rejects_nonorthonormal():
    with pytest.raises(ValueError):
        StiefelPoint(np.ones((5, 2)))


def test_tangent_rejects_nonskew():
    rng = np.random.default_rng(0)
    base = random_point(rng, 8, 3)
    with pytest.raises(NotTangent):
        TangentVector(base.matrix.copy(), base)  # base^T base = I, symmetric


def test_exp_of_zero_is_base():
    rng = np.random.default_rng(1)
    base = random_point(rng, 12, 4)
    out = riemann_exp(base, TangentVector(np.zeros(base.shape), base))
    assert np.linalg.norm(out.matrix - base.matrix) <= 1e-12


def test_exp_orthonormality_over_seeds():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        base = random_point(rng, 20, 4)
        delta = random_tangent(rng, base, 0.3)
        out = riemann_exp(base, delta)
        n = out.matrix.shape[1]
        assert np.linalg.norm(out.matrix.T @ out.matrix - np.eye(n)) <= 1e-10


def test_log_of_base_is_zero():
    rng = np.random.default_rng(2)
    base = random_point(rng, 15, 3)
    out = riemann_log(base, base)
    assert out.norm <= 1e-12


def test_exp_log_roundtrip_100_seeds():
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        base = random_point(rng, 20, 4)
        delta = random_tangent(rng, base, 0.5 * rng.uniform(0.1, 1.0))
        target = riemann_exp(base, delta)
        rec = riemann_log(base, target)
        worst = max(worst, np.linalg.norm(rec.matrix - delta.matrix))
        skew = base.matrix.T @ rec.matrix
        assert np.linalg.norm(skew + skew.T) <= 1e-10
    assert worst <= 1e-8


def test_log_failure_reports_residual():
    rng = np.random.default_rng(3)
    base = random_point(rng, 16, 4)
    target = random_point(rng, 16, 4)  # generically far away
    with pytest.raises(LogNoConvergence) as err:
        riemann_log(base, target, tol=1e-14, max_iter=2)
    assert err.value.residual > 0


def test_distance_symmetry_20_pairs():
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        a = random_point(rng, 18, 4)
        delta = random_tangent(rng, a, rng.uniform(0.05, 0.8))
        b = riemann_exp(a, delta)
        assert geodesic_distance(a, b) == pytest.approx(geodesic_distance(b, a), abs=1e-6)


def test_distance_zero_for_same_point():
    rng = np.random.default_rng(4)
    a = random_point(rng, 10, 3)
    assert geodesic_distance(a, a) <= 1e-12


def test_distance_matches_tangent_norm():
    rng = np.random.default_rng(5)
    a = random_point(rng, 20, 4)
    delta = random_tangent(rng, a, 0.25)
    b = riemann_exp(a, delta)
    assert geodesic_distance(a, b) == pytest.approx(0.25, abs=1e-8)


def test_constraint_preserved_by_exp():
    rng = np.random.default_rng(6)
    constraint = boundary_constraint(20)
    base = random_point(rng, 20, 4, constraint=constraint)
    delta = random_tangent(rng, base, 0.3)
    out = riemann_exp(base, delta)
    assert np.abs(out.matrix[0]).max() <= 1e-12
    assert np.abs(out.matrix[-1]).max() <= 1e-12
    assert out.constraint is constraint


def test_tangent_mean_residual_trivial_cases():
    rng = np.random.default_rng(7)
    base = random_point(rng, 14, 3)
    assert tangent_mean_residual(base, [base]) <= 1e-12
    delta = random_tangent(rng, base, 0.2)
    plus = riemann_exp(base, delta)
    minus = riemann_exp(base, TangentVector(-delta.matrix, base))
    assert tangent_mean_residual(base, [plus, minus]) <= 1e-8


def test_exp_rejects_foreign_basepoint():
    rng = np.random.default_rng(8)
    a = random_point(rng, 12, 3)
    b = random_point(rng, 12, 3)
    delta = random_tangent(rng, a, 0.1)
    with pytest.raises(ValueError):
        riemann_exp(b, delta)
