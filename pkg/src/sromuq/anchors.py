"""Training-scenario construction, operator-distance clustering, anchor
selection, and the global projection basis.

A scenario is one combination of training parameter values: its snapshot
matrices are concatenated, centered, reduced, and fitted with enrichment
coefficients and reduced operators. Scenario bases are clustered (on the
constrained Stiefel subset) so each cluster contributes one anchor: the
member minimizing the summed normalized operator distances within its
cluster. The global basis is the truncated SVD of the concatenated
anchor snapshots and serves as the basepoint of the stochastic model.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCluster, LogNoConvergence, RankDeficient, ShapeMismatch
from .fom import SnapshotMatrix, center_snapshots
from .latent import (
    ProjectionBasis,
    _fix_column_signs,
    align_basis,
    compute_pod,
    decode_trajectory,
    encode,
    fit_xi,
)
from .opinf import (
    FeatureSpecGhat,
    infer_operators,
    integrate_rom,
    relative_state_error,
    time_derivatives,
)
from .stiefel import StiefelPoint, TangentVector, geodesic_distance, riemann_exp, riemann_log

__all__ = [
    "Scenario",
    "AnchorEnsemble",
    "generate_combinations",
    "build_scenario",
    "build_scenarios",
    "scenario_rom_reconstruction",
    "scenario_training_error",
    "operator_distance_matrices",
    "normalize_distance",
    "pairwise_geodesic_matrix",
    "karcher_mean",
    "cluster_bases",
    "silhouette_score",
    "select_anchors",
    "build_global_basis",
    "GlobalBasis",
    "assemble_ensemble",
]

OPERATOR_NAMES = ("c_hat", "a_hat", "h_hat", "p_hat")


@dataclass(frozen=True, eq=False)
class Scenario:
    """One training combination and everything learned from it."""

    id: int
    mu_values: tuple
    snapshots: SnapshotMatrix  # centered concatenation of the member runs
    segments: tuple  # (start, stop) column range per member run
    basis: object
    rep: object
    ops: object

    def stiefel_point(self, constraint=None):
        return StiefelPoint(self.basis.full, constraint=constraint)


@dataclass(frozen=True, eq=False)
class AnchorEnsemble:
    """Selected anchors, their cluster labels, and the global basis."""

    anchors: tuple
    global_basis: StiefelPoint
    s_ref: np.ndarray  # reference state of the global-basis construction
    singular_values: np.ndarray
    cluster_labels: np.ndarray
    anchor_ids: tuple

    @property
    def m(self):
        return len(self.anchors)


def generate_combinations(n_values, sizes, count=None, seed=0, require=()):
    """Index subsets of ``range(n_values)`` with sizes in ``sizes``.

    Enumerates every subset when ``count`` is None, otherwise draws a
    deterministic sample of ``count`` distinct subsets. Indices listed in
    ``require`` appear in every subset.
    """
    from itertools import combinations

    require = tuple(sorted(require))
    pool = [i for i in range(n_values) if i not in require]
    all_subsets = []
    for size in sizes:
        take = size - len(require)
        if take < 0 or take > len(pool):
            continue
        for extra in combinations(pool, take):
            all_subsets.append(tuple(sorted(require + extra)))
    if count is None or count >= len(all_subsets):
        return all_subsets
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(all_subsets), size=count, replace=False)
    return [all_subsets[i] for i in sorted(chosen)]


def build_scenario(scenario_id, mu_values, runs, r, q, p=2, gamma=0.0,
                   lambdas=(0.0, 0.0, 0.0), ghat_degrees=None, gauge=None):
    """Assemble one scenario: concatenate, center, reduce, fit, infer.

    ``runs`` holds one raw SnapshotMatrix per parameter value; reduced
    time derivatives are estimated per run so the stencil never crosses
    the seams between member trajectories. When a ``gauge`` basis is
    given, the scenario basis is Procrustes-aligned to it blockwise
    before the enrichment and operator fits, so all scenarios share one
    frame convention on the manifold.
    """
    data = np.hstack([s.raw() for s in runs])
    times = np.concatenate([s.times for s in runs])
    segments, start = [], 0
    for s in runs:
        segments.append((start, start + s.n_snapshots))
        start += s.n_snapshots
    merged = SnapshotMatrix(
        data=data, x_grid=runs[0].x_grid, times=times, centered=False
    )
    centered = center_snapshots(merged)
    basis = compute_pod(centered, r, q)
    if gauge is not None:
        basis = align_basis(basis, gauge)
    rep = fit_xi(centered, basis, p=p, gamma=gamma)
    s_hat = basis.v_r.T @ centered.data
    ds_hat = np.empty_like(s_hat)
    for (a, b), run in zip(segments, runs):
        dt = float(run.times[1] - run.times[0])
        ds_hat[:, a:b] = time_derivatives(s_hat[:, a:b], dt)
    spec = FeatureSpecGhat(r=r, p=p, degrees=ghat_degrees)
    ops = infer_operators(s_hat, ds_hat, spec, lambdas=lambdas)
    return Scenario(
        id=scenario_id,
        mu_values=tuple(float(m) for m in mu_values),
        snapshots=centered,
        segments=tuple(segments),
        basis=basis,
        rep=rep,
        ops=ops,
    )


def build_scenarios(runs_by_mu, mu_grid, combination_spec, r, q, p=2, gamma=0.0,
                    lambdas=(0.0, 0.0, 0.0), ghat_degrees=None, gauge=None):
    """One scenario per index subset of the parameter grid."""
    scenarios = []
    for sid, subset in enumerate(combination_spec):
        if not subset:
            raise ValueError(f"combination {sid} is empty")
        runs = [runs_by_mu[i] for i in subset]
        mu_values = [mu_grid[i] for i in subset]
        try:
            scenarios.append(
                build_scenario(sid, mu_values, runs, r, q, p=p, gamma=gamma,
                               lambdas=lambdas, ghat_degrees=ghat_degrees,
                               gauge=gauge)
            )
        except Exception as err:
            raise type(err)(f"scenario {sid} (mu={mu_values}): {err}") from err
    return scenarios


def scenario_rom_reconstruction(scenario, rtol=1e-6, atol=1e-9):
    """Integrate the scenario's reduced model from each member run's
    initial condition and decode the stitched trajectory."""
    rep = scenario.rep
    recon = np.empty_like(scenario.snapshots.raw())
    for a, b in scenario.segments:
        t_seg = scenario.snapshots.times[a:b]
        s0 = scenario.snapshots.raw()[:, a]
        s_hat0 = encode(s0, rep)
        s_hat = integrate_rom(scenario.ops, s_hat0, t_seg - t_seg[0], rtol=rtol, atol=atol)
        recon[:, a:b] = decode_trajectory(s_hat, rep)
    return recon


def scenario_training_error(scenario, rtol=1e-6, atol=1e-9):
    """Relative state error of the integrated reduced model on training data."""
    recon = scenario_rom_reconstruction(scenario, rtol=rtol, atol=atol)
    return relative_state_error(scenario.snapshots, recon)


def operator_distance_matrices(scenarios):
    """Pairwise Frobenius distances for each learned operator."""
    n = len(scenarios)
    ref = scenarios[0]
    for s in scenarios[1:]:
        for name in OPERATOR_NAMES:
            if getattr(s.ops, name).shape != getattr(ref.ops, name).shape:
                raise ShapeMismatch(
                    f"scenario {s.id} operator {name} shape differs from scenario {ref.id}"
                )
    out = {}
    for name in OPERATOR_NAMES:
        d = np.zeros((n, n))
        for i in range(n):
            oi = getattr(scenarios[i].ops, name)
            for j in range(i + 1, n):
                d[i, j] = d[j, i] = np.linalg.norm(oi - getattr(scenarios[j].ops, name))
        out[name] = d
    return out


def normalize_distance(d):
    """Scale a distance matrix by its value range; constant matrices map to zero."""
    d = np.asarray(d, dtype=np.float64)
    span = d.max() - d.min()
    if span < 1e-14:
        return np.zeros_like(d)
    return d / span


def pairwise_geodesic_matrix(points, tol=1e-10, max_iter=100):
    """Symmetric geodesic-distance matrix between Stiefel points."""
    n = len(points)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            try:
                d[i, j] = d[j, i] = geodesic_distance(
                    points[i], points[j], tol=tol, max_iter=max_iter
                )
            except LogNoConvergence as err:
                raise LogNoConvergence(err.residual, err.iterations, index=(i, j)) from None
    return d


def karcher_mean(points, weights=None, tol=1e-9, max_iter=50):
    """Fixed-point Karcher mean: repeatedly retract the weighted tangent mean."""
    if weights is None:
        weights = np.full(len(points), 1.0 / len(points))
    center = points[int(np.argmax(weights))]
    for _ in range(max_iter):
        mean_log = np.zeros_like(center.matrix)
        for w, pt in zip(weights, points):
            mean_log += w * riemann_log(center, pt).matrix
        step = np.linalg.norm(mean_log)
        center = riemann_exp(center, TangentVector(mean_log, center))
        if step <= tol:
            break
    return center


def _kmeans_plusplus_init(dist, m, rng):
    """Seeded k-means++ on a precomputed distance matrix; returns indices."""
    n = dist.shape[0]
    centers = [int(rng.integers(n))]
    while len(centers) < m:
        d2 = np.min(dist[:, centers] ** 2, axis=1)
        total = d2.sum()
        if total <= 0:
            remaining = [i for i in range(n) if i not in centers]
            centers.append(remaining[0])
            continue
        centers.append(int(rng.choice(n, p=d2 / total)))
    return centers


def _lloyd(embedding, m, rng, n_iter=300):
    """Plain Lloyd iteration on embedded coordinates, seeded k-means++ init."""
    n = embedding.shape[0]
    diff = embedding[:, None, :] - embedding[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    centers_idx = _kmeans_plusplus_init(dist, m, rng)
    centers = embedding[centers_idx].copy()
    labels = np.zeros(n, dtype=int)
    for it in range(n_iter):
        d2 = ((embedding[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        if it > 0 and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(m):
            members = embedding[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return labels


def _spectral_embedding(dist, dim):
    """Row-normalized eigenvector embedding of the Gaussian affinity."""
    off = dist[~np.eye(dist.shape[0], dtype=bool)]
    sigma = np.median(off[off > 0]) if np.any(off > 0) else 1.0
    w = np.exp(-(dist**2) / (2.0 * sigma**2))
    deg = w.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(deg, 1e-300))
    lap = np.eye(dist.shape[0]) - inv_sqrt[:, None] * w * inv_sqrt[None, :]
    vals, vecs = np.linalg.eigh(lap)
    emb = vecs[:, :dim]
    # deterministic eigenvector signs
    idx = np.argmax(np.abs(emb), axis=0)
    signs = np.sign(emb[idx, np.arange(emb.shape[1])])
    signs[signs == 0] = 1.0
    emb = emb * signs
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    return emb / np.maximum(norms, 1e-300)


def _riemannian_kmeans(points, dist, m, rng, max_rounds=30):
    """Lloyd-style clustering with geodesic assignment and Karcher centroids."""
    centers_idx = _kmeans_plusplus_init(dist, m, rng)
    centroids = [points[i] for i in centers_idx]
    labels = np.full(len(points), -1, dtype=int)
    for _ in range(max_rounds):
        d = np.empty((len(points), m))
        for c, centroid in enumerate(centroids):
            for i, pt in enumerate(points):
                d[i, c] = geodesic_distance(centroid, pt)
        new_labels = np.argmin(d, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(m):
            members = [points[i] for i in np.flatnonzero(labels == c)]
            if members:
                centroids[c] = karcher_mean(members)
    return labels


def cluster_bases(scenarios, m="auto", strategy="spectral-embed-kmeans", seed=0,
                  constraint=None, m_candidates=(3, 4, 5), precomputed_dist=None):
    """Cluster scenario bases; returns (labels, geodesic distance matrix).

    ``strategy`` is ``spectral-embed-kmeans`` (affinity of the pairwise
    geodesic distances, eigenvector embedding, Lloyd) or
    ``riemannian-kmeans`` (geodesic assignment with Karcher centroids).
    With ``m="auto"`` the cluster count maximizes the silhouette score
    over ``m_candidates``. Fixed seeds give identical labels across runs.
    """
    points = [s.stiefel_point(constraint) for s in scenarios]
    dist = precomputed_dist if precomputed_dist is not None else pairwise_geodesic_matrix(points)
    if m == "auto":
        best = None
        for cand in m_candidates:
            if cand >= len(points):
                continue
            labels = _cluster_once(points, dist, cand, strategy, seed)
            score = silhouette_score(dist, labels)
            if best is None or score > best[0]:
                best = (score, labels)
        if best is None:
            raise ValueError("no admissible cluster count among the candidates")
        return best[1] + 1, dist
    m = int(m)
    if len(points) < m:
        raise ValueError(f"cannot form {m} clusters from {len(points)} scenarios")
    return _cluster_once(points, dist, m, strategy, seed) + 1, dist


def _cluster_once(points, dist, m, strategy, seed):
    rng = np.random.default_rng(seed)
    if strategy == "riemannian-kmeans":
        return _riemannian_kmeans(points, dist, m, rng)
    if strategy == "spectral-embed-kmeans":
        emb = _spectral_embedding(dist, m)
        return _lloyd(emb, m, rng)
    raise ValueError(f"unknown clustering strategy: {strategy!r}")


def silhouette_score(dist, labels):
    """Mean silhouette over all points from a precomputed distance matrix."""
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if uniq.size < 2:
        return -1.0
    scores = []
    for i in range(len(labels)):
        same = (labels == labels[i]) & (np.arange(len(labels)) != i)
        a = dist[i, same].mean() if same.any() else 0.0
        b = np.inf
        for other in uniq:
            if other == labels[i]:
                continue
            mask = labels == other
            if mask.any():
                b = min(b, dist[i, mask].mean())
        denom = max(a, b)
        scores.append(0.0 if denom == 0 else (b - a) / denom)
    return float(np.mean(scores))


def select_anchors(scenarios, labels, normalized_distances):
    """Per cluster, the member with the smallest summed operator distance.

    Ties break to the lowest scenario id; returns scenario ids ordered by
    cluster label.
    """
    labels = np.asarray(labels)
    total = sum(normalized_distances[name] for name in OPERATOR_NAMES)
    anchor_ids = []
    for cluster in np.unique(labels):
        members = np.flatnonzero(labels == cluster)
        if members.size == 0:
            raise EmptyCluster(f"cluster {cluster} has no members")
        in_cluster = total[np.ix_(members, members)].sum(axis=1)
        anchor_ids.append(scenarios[members[np.argmin(in_cluster)]].id)
    return anchor_ids


@dataclass(frozen=True, eq=False)
class GlobalBasis:
    point: StiefelPoint
    s_ref: np.ndarray
    singular_values: np.ndarray


def build_global_basis(anchor_scenarios, r, q, constraint=None, gauge=None):
    """Truncated SVD of the concatenated (re-centered) anchor snapshots.

    The same gauge reference used for the scenarios should be passed so
    the global basis shares their frame convention.
    """
    if not anchor_scenarios:
        raise ValueError("need at least one anchor scenario")
    raw = np.hstack([s.snapshots.raw() for s in anchor_scenarios])
    s_ref = raw.mean(axis=1)
    centered = raw - s_ref[:, None]
    u, sigma, _ = np.linalg.svd(centered, full_matrices=False)
    if r + q > sigma.size or sigma[r + q - 1] < 1e-12 * sigma[0]:
        raise RankDeficient("concatenated anchor snapshots rank-deficient for r+q")
    phi = _fix_column_signs(u[:, : r + q])
    if gauge is not None:
        tmp = ProjectionBasis(v_r=phi[:, :r], v_bar=phi[:, r:],
                              singular_values=sigma, r=r, q=q)
        aligned = align_basis(tmp, gauge)
        phi = aligned.full
    return GlobalBasis(
        point=StiefelPoint(phi, constraint=constraint),
        s_ref=s_ref,
        singular_values=sigma,
    )


def assemble_ensemble(scenarios, labels, anchor_ids, r, q, constraint=None, gauge=None):
    """Bundle the selected anchors with the global basis they define."""
    by_id = {s.id: s for s in scenarios}
    anchors = tuple(by_id[i] for i in anchor_ids)
    gb = build_global_basis(anchors, r, q, constraint=constraint, gauge=gauge)
    return AnchorEnsemble(
        anchors=anchors,
        global_basis=gb.point,
        s_ref=gb.s_ref,
        singular_values=gb.singular_values,
        cluster_labels=np.asarray(labels),
        anchor_ids=tuple(anchor_ids),
    )
