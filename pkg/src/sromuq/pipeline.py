"""End-to-end orchestration: simulate, scenarios, anchors, sample,
propagate, report, replay.

Stages run in order, each persisting its artifacts (binary matrices plus
JSON metadata) under the output directory and recording checksums,
timings, and seeds in the run manifest. A failed stage raises
:class:`StageFailure`; completed artifacts stay on disk so the run can
resume from the failed stage by re-invoking it.
"""

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from . import __version__
from .anchors import (
    assemble_ensemble,
    build_scenario,
    cluster_bases,
    generate_combinations,
    normalize_distance,
    operator_distance_matrices,
    select_anchors,
)
from .config import resolve_output_dir
from .errors import BlowUp, SromError, StageFailure, TooFewSamples
from .fom import FomConfig, SnapshotMatrix, assemble_initial_state, center_snapshots, simulate
from .latent import compute_pod, energy_error, fit_xi, select_rank
from .matio import read_matrix, write_matrix
from .opinf import FeatureSpecGhat, grid_search_regularization, infer_operators
from .sampling import (
    DirichletModel,
    StochasticSample,
    gram_matrix,
    sample_dirichlet,
    sample_projection,
    select_operator_index,
    solve_concentration,
)
from .stiefel import StiefelPoint, boundary_constraint
from .uq import ensemble_statistics, propagate_sample

__all__ = ["RunPaths", "run_pipeline", "run_stage", "replay_sampling", "STAGES"]

STAGES = ("simulate", "scenarios", "anchors", "sample", "propagate", "report")


class RunPaths:
    """Directory layout of one pipeline run."""

    def __init__(self, root):
        self.root = Path(root)
        self.manifest = self.root / "manifest.json"
        self.fom = self.root / "fom"
        self.scenarios = self.root / "scenarios"
        self.anchors = self.root / "anchors"
        self.sampling = self.root / "sampling"
        self.propagation = self.root / "propagation"
        self.report = self.root / "report"

    def mkdirs(self):
        for d in (self.root, self.fom, self.scenarios, self.anchors,
                  self.sampling, self.propagation, self.report):
            d.mkdir(parents=True, exist_ok=True)
        return self

    def mu_file(self, mu):
        return self.fom / f"snapshots_mu_{mu:g}.srm"

    def scenario_dir(self, sid):
        d = self.scenarios / f"scenario_{sid:03d}"
        d.mkdir(parents=True, exist_ok=True)
        return d


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_manifest(paths):
    if paths.manifest.exists():
        with open(paths.manifest) as fh:
            return json.load(fh)
    return {"version": __version__, "stages": {}}


def _save_manifest(paths, manifest):
    with open(paths.manifest, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _record_stage(paths, manifest, stage, artifacts, started, extra=None):
    record = {
        "elapsed_s": round(time.time() - started, 3),
        "artifacts": {str(Path(p).relative_to(paths.root)): _sha256(p) for p in artifacts},
    }
    if extra:
        record.update(extra)
    manifest["stages"][stage] = record
    _save_manifest(paths, manifest)
    return record


def _fom_config(cfg, mu):
    f = cfg.fom
    return FomConfig(
        n_elements=f.n_elements, reynolds=f.reynolds, dt=f.dt, t_final=f.t_final,
        mu=mu, newton_tol=f.newton_tol, newton_max_iter=f.newton_max_iter,
    )


def stage_simulate(cfg, paths, manifest):
    """Run the full-order model for every training parameter value."""
    started = time.time()
    artifacts = []
    x_grid = times = None
    for mu in cfg.fom.mu_list:
        snap = simulate(_fom_config(cfg, mu))
        write_matrix(paths.mu_file(mu), snap.data)
        artifacts.append(paths.mu_file(mu))
        x_grid, times = snap.x_grid, snap.times
    write_matrix(paths.fom / "x_grid.srm", x_grid)
    write_matrix(paths.fom / "times.srm", times)
    artifacts += [paths.fom / "x_grid.srm", paths.fom / "times.srm"]
    return _record_stage(paths, manifest, "simulate", artifacts, started,
                         extra={"mu_list": list(cfg.fom.mu_list)})


def _load_runs(cfg, paths):
    x_grid = read_matrix(paths.fom / "x_grid.srm").ravel()
    times = read_matrix(paths.fom / "times.srm").ravel()
    runs = []
    for mu in cfg.fom.mu_list:
        data = read_matrix(paths.mu_file(mu))
        runs.append(SnapshotMatrix(data=data, x_grid=x_grid, times=times))
    return runs


def _combinations(cfg):
    if cfg.scenarios.combinations is not None:
        return [tuple(sub) for sub in cfg.scenarios.combinations]
    n = len(cfg.fom.mu_list)
    require = (0, n - 1) if cfg.scenarios.require_endpoints and n > 1 else ()
    return generate_combinations(
        n,
        sizes=tuple(cfg.scenarios.sizes),
        count=cfg.scenarios.count,
        seed=cfg.scenarios.generator_seed,
        require=require,
    )


def _full_training_set(runs):
    data = np.hstack([r.data for r in runs])
    times = np.concatenate([r.times for r in runs])
    merged = SnapshotMatrix(data=data, x_grid=runs[0].x_grid, times=times)
    return center_snapshots(merged)


def _segment_derivatives(s_hat, segments, dt):
    from .opinf import time_derivatives

    ds = np.empty_like(s_hat)
    for a, b in segments:
        ds[:, a:b] = time_derivatives(s_hat[:, a:b], dt)
    return ds


def _training_error_functional(centered, basis, rep, segments, cfg):
    """Return evaluate(ops) -> integrated training relative state error."""
    from .latent import decode_trajectory
    from .opinf import integrate_rom, relative_state_error

    raw = centered.raw()

    def evaluate(ops):
        recon = np.empty_like(raw)
        for a, b in segments:
            t_seg = centered.times[a:b]
            s_hat0 = basis.v_r.T @ (raw[:, a] - centered.s_ref)
            s_hat = integrate_rom(ops, s_hat0, t_seg - t_seg[0],
                                  rtol=cfg.propagation.rtol, atol=cfg.propagation.atol)
            recon[:, a:b] = decode_trajectory(s_hat, rep)
        return relative_state_error(centered, recon)

    return evaluate


def stage_scenarios(cfg, paths, manifest):
    """Rank selection, regularization search on the full training set,
    and per-combination scenario builds in a common basis gauge."""
    started = time.time()
    runs = _load_runs(cfg, paths)
    combos = _combinations(cfg)
    k_each = runs[0].n_snapshots
    segments_full = [(i * k_each, (i + 1) * k_each) for i in range(len(runs))]

    # per-combination singular spectra for the energy-threshold selection
    spectra = []
    for sub in combos:
        data = np.hstack([runs[i].data for i in sub])
        data = data - data.mean(axis=1)[:, None]
        spectra.append(np.linalg.svd(data, compute_uv=False))
    selected_r = select_rank(spectra, cfg.ranks.energy_threshold)
    r = selected_r if cfg.ranks.r == "auto" else int(cfg.ranks.r)
    q = cfg.ranks.q

    # full-set reduction defines the frame gauge for every later basis
    full = _full_training_set(runs)
    gauge = compute_pod(full, r, q)
    s_hat = gauge.v_r.T @ full.data
    ds_hat = _segment_derivatives(s_hat, segments_full, cfg.fom.dt)
    spec = FeatureSpecGhat(r=r, p=cfg.opinf.p,
                           degrees=cfg.opinf.ghat_degrees)

    gamma0 = min(cfg.opinf.gamma_grid)
    rep0 = fit_xi(full, gauge, p=cfg.opinf.p, gamma=gamma0)
    grid = [(l1, l23, l23) for l1 in cfg.opinf.lambda1_grid for l23 in cfg.opinf.lambda23_grid]
    evaluate = _training_error_functional(full, gauge, rep0, segments_full, cfg)
    lambdas, _ops = grid_search_regularization(s_hat, ds_hat, spec, grid, evaluate)

    # enrichment ridge searched at the chosen operator regularization;
    # the latent dynamics do not depend on gamma, only the decode does
    best_ops = infer_operators(s_hat, ds_hat, spec, lambdas=lambdas)
    best_gamma, best_err, best_rep = None, np.inf, None
    for gamma in cfg.opinf.gamma_grid:
        rep_g = fit_xi(full, gauge, p=cfg.opinf.p, gamma=gamma)
        try:
            err = _training_error_functional(full, gauge, rep_g, segments_full, cfg)(best_ops)
        except BlowUp:
            continue
        if err < best_err - 1e-12 or (abs(err - best_err) <= 1e-12 and best_gamma is not None
                                      and gamma > best_gamma):
            best_gamma, best_err, best_rep = gamma, err, rep_g
    if best_gamma is None:
        raise SromError("no gamma candidate produced a bounded reduced model")

    det_dir = paths.scenarios / "deterministic"
    det_dir.mkdir(parents=True, exist_ok=True)
    artifacts = []
    for name, arr in (("v_r", gauge.v_r), ("v_bar", gauge.v_bar),
                      ("singular_values", gauge.singular_values),
                      ("xi", best_rep.xi), ("s_ref", full.s_ref),
                      ("c_hat", best_ops.c_hat), ("a_hat", best_ops.a_hat),
                      ("h_hat", best_ops.h_hat), ("p_hat", best_ops.p_hat)):
        f = det_dir / f"{name}.srm"
        write_matrix(f, arr)
        artifacts.append(f)

    scenario_meta = []
    for sid, sub in enumerate(combos):
        scenario = build_scenario(
            sid, [cfg.fom.mu_list[i] for i in sub], [runs[i] for i in sub],
            r, q, p=cfg.opinf.p, gamma=best_gamma, lambdas=lambdas,
            ghat_degrees=cfg.opinf.ghat_degrees, gauge=gauge,
        )
        sdir = paths.scenario_dir(sid)
        for name, arr in (("v_r", scenario.basis.v_r), ("v_bar", scenario.basis.v_bar),
                          ("singular_values", scenario.basis.singular_values),
                          ("xi", scenario.rep.xi), ("s_ref", scenario.snapshots.s_ref),
                          ("c_hat", scenario.ops.c_hat), ("a_hat", scenario.ops.a_hat),
                          ("h_hat", scenario.ops.h_hat), ("p_hat", scenario.ops.p_hat)):
            f = sdir / f"{name}.srm"
            write_matrix(f, arr)
            artifacts.append(f)
        scenario_meta.append({
            "id": sid,
            "indices": list(sub),
            "mu_values": [cfg.fom.mu_list[i] for i in sub],
            "min_r_at_threshold": next(
                rr for rr in range(1, len(spectra[sid]) + 1)
                if energy_error(spectra[sid], rr) < cfg.ranks.energy_threshold
            ),
        })

    meta = {
        "combinations": [list(s) for s in combos],
        "selected_r": selected_r,
        "r": r,
        "q": q,
        "p": cfg.opinf.p,
        "energy_threshold": cfg.ranks.energy_threshold,
        "lambdas": list(lambdas),
        "gamma": best_gamma,
        "full_training_error": best_err,
        "full_energy_at_r": 1.0 - energy_error(gauge.singular_values, r),
        "scenarios": scenario_meta,
    }
    meta_file = paths.scenarios / "meta.json"
    with open(meta_file, "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    artifacts.append(meta_file)
    return _record_stage(paths, manifest, "scenarios", artifacts, started, extra={
        "selected_r": selected_r, "r": r, "q": q,
        "lambdas": list(lambdas), "gamma": best_gamma,
        "full_training_error": best_err,
    })


def _load_scenarios(cfg, paths):
    """Rebuild Scenario objects from stage artifacts."""
    from .latent import PolyRepresentation, ProjectionBasis
    from .opinf import ReducedOperators

    runs = _load_runs(cfg, paths)
    with open(paths.scenarios / "meta.json") as fh:
        meta = json.load(fh)
    r, q, p = meta["r"], meta["q"], meta["p"]
    scenarios = []
    from .anchors import Scenario

    for sm in meta["scenarios"]:
        sid = sm["id"]
        sdir = paths.scenario_dir(sid)
        sub = sm["indices"]
        data = np.hstack([runs[i].raw() for i in sub])
        times = np.concatenate([runs[i].times for i in sub])
        k_each = runs[0].n_snapshots
        segments = tuple((j * k_each, (j + 1) * k_each) for j in range(len(sub)))
        s_ref = read_matrix(sdir / "s_ref.srm").ravel()
        snapshots = SnapshotMatrix(data=data - s_ref[:, None], x_grid=runs[0].x_grid,
                                   times=times, s_ref=s_ref, centered=True)
        basis = ProjectionBasis(
            v_r=read_matrix(sdir / "v_r.srm"),
            v_bar=read_matrix(sdir / "v_bar.srm"),
            singular_values=read_matrix(sdir / "singular_values.srm").ravel(),
            r=r, q=q,
        )
        rep = PolyRepresentation(basis=basis, xi=read_matrix(sdir / "xi.srm"),
                                 p=p, gamma=meta["gamma"], s_ref=s_ref)
        spec = FeatureSpecGhat(r=r, p=p, degrees=cfg.opinf.ghat_degrees)
        ops = ReducedOperators(
            c_hat=read_matrix(sdir / "c_hat.srm").ravel(),
            a_hat=read_matrix(sdir / "a_hat.srm"),
            h_hat=read_matrix(sdir / "h_hat.srm"),
            p_hat=read_matrix(sdir / "p_hat.srm"),
            spec=spec, lambdas=tuple(meta["lambdas"]),
        )
        scenarios.append(Scenario(id=sid, mu_values=tuple(sm["mu_values"]),
                                  snapshots=snapshots, segments=segments,
                                  basis=basis, rep=rep, ops=ops))
    return scenarios, meta


def _gauge_from_artifacts(paths, meta):
    from .latent import ProjectionBasis

    det = paths.scenarios / "deterministic"
    return ProjectionBasis(
        v_r=read_matrix(det / "v_r.srm"),
        v_bar=read_matrix(det / "v_bar.srm"),
        singular_values=read_matrix(det / "singular_values.srm").ravel(),
        r=meta["r"], q=meta["q"],
    )


def stage_anchors(cfg, paths, manifest):
    """Operator distances, clustering, anchor selection, global basis."""
    started = time.time()
    scenarios, meta = _load_scenarios(cfg, paths)
    gauge = _gauge_from_artifacts(paths, meta)
    constraint = boundary_constraint(scenarios[0].snapshots.n_nodes)

    distances = operator_distance_matrices(scenarios)
    normalized = {name: normalize_distance(d) for name, d in distances.items()}
    labels, geo = cluster_bases(
        scenarios, m=cfg.clustering.m, strategy=cfg.clustering.strategy,
        seed=cfg.sampling.seed, constraint=constraint,
        m_candidates=tuple(cfg.clustering.m_candidates),
    )
    anchor_ids = select_anchors(scenarios, labels, normalized)
    ensemble = assemble_ensemble(scenarios, labels, anchor_ids, meta["r"], meta["q"],
                                 constraint=constraint, gauge=gauge)

    artifacts = []
    for name, d in distances.items():
        f = paths.anchors / f"dist_{name}.srm"
        write_matrix(f, d)
        artifacts.append(f)
    for name, arr in (("dist_geodesic", geo),
                      ("phi_star", ensemble.global_basis.matrix),
                      ("s_ref_global", ensemble.s_ref),
                      ("sigma_global", ensemble.singular_values)):
        f = paths.anchors / f"{name}.srm"
        write_matrix(f, arr)
        artifacts.append(f)
    meta_anchors = {
        "labels": [int(v) for v in labels],
        "anchor_ids": [int(i) for i in anchor_ids],
        "m": len(anchor_ids),
        "anchor_mu_values": [list(s.mu_values) for s in ensemble.anchors],
        "strategy": cfg.clustering.strategy,
        "energy_error_phi_star_at_r": energy_error(ensemble.singular_values, meta["r"]),
    }
    f = paths.anchors / "meta.json"
    with open(f, "w") as fh:
        json.dump(meta_anchors, fh, indent=2)
        fh.write("\n")
    artifacts.append(f)
    return _record_stage(paths, manifest, "anchors", artifacts, started, extra={
        "anchor_ids": meta_anchors["anchor_ids"], "m": meta_anchors["m"],
        "labels": meta_anchors["labels"],
    })


def _load_ensemble(cfg, paths):
    from .anchors import AnchorEnsemble

    scenarios, meta = _load_scenarios(cfg, paths)
    with open(paths.anchors / "meta.json") as fh:
        ameta = json.load(fh)
    constraint = boundary_constraint(scenarios[0].snapshots.n_nodes)
    by_id = {s.id: s for s in scenarios}
    ensemble = AnchorEnsemble(
        anchors=tuple(by_id[i] for i in ameta["anchor_ids"]),
        global_basis=StiefelPoint(read_matrix(paths.anchors / "phi_star.srm"),
                                  constraint=constraint),
        s_ref=read_matrix(paths.anchors / "s_ref_global.srm").ravel(),
        singular_values=read_matrix(paths.anchors / "sigma_global.srm").ravel(),
        cluster_labels=np.asarray(ameta["labels"]),
        anchor_ids=tuple(ameta["anchor_ids"]),
    )
    return ensemble, scenarios, meta, ameta


def stage_sample(cfg, paths, manifest):
    """Tangent Gram matrix, concentration solve, and Dirichlet draws."""
    started = time.time()
    ensemble, _scenarios, meta, _ameta = _load_ensemble(cfg, paths)
    constraint = ensemble.global_basis.constraint
    points = [a.stiefel_point(constraint) for a in ensemble.anchors]
    h, logs = gram_matrix(points, ensemble.global_basis,
                          tol=cfg.sampling.log_tol, max_iter=cfg.sampling.log_max_iter)
    alpha = solve_concentration(h, eps_alpha=cfg.sampling.eps_alpha)
    p_draws = sample_dirichlet(alpha, cfg.sampling.n_samples, cfg.sampling.seed)
    indices = [select_operator_index(p) for p in p_draws]

    artifacts = []
    for name, arr in (("h", h), ("alpha", alpha), ("p_samples", p_draws)):
        f = paths.sampling / f"{name}.srm"
        write_matrix(f, arr)
        artifacts.append(f)
    sample_manifest = {
        "seed": cfg.sampling.seed,
        "n_samples": cfg.sampling.n_samples,
        "eps_alpha": cfg.sampling.eps_alpha,
        "alpha": [float(a) for a in alpha],
        "samples": [
            {"index": j, "p": [float(v) for v in p_draws[j]], "operator_index": indices[j]}
            for j in range(cfg.sampling.n_samples)
        ],
    }
    f = paths.sampling / "manifest.json"
    with open(f, "w") as fh:
        json.dump(sample_manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    artifacts.append(f)
    return _record_stage(paths, manifest, "sample", artifacts, started, extra={
        "alpha": sample_manifest["alpha"],
        "operator_index_counts": {str(i): indices.count(i) for i in sorted(set(indices))},
    })


def _rebuild_samples(cfg, paths, ensemble):
    """Recreate StochasticSample objects from the sampling manifest."""
    with open(paths.sampling / "manifest.json") as fh:
        sm = json.load(fh)
    h = read_matrix(paths.sampling / "h.srm")
    points = [a.stiefel_point(ensemble.global_basis.constraint) for a in ensemble.anchors]
    _h, logs = gram_matrix(points, ensemble.global_basis,
                           tol=cfg.sampling.log_tol, max_iter=cfg.sampling.log_max_iter)
    model = DirichletModel(alpha=np.asarray(sm["alpha"]), h=h, anchor_logs=logs)
    samples = []
    for entry in sm["samples"]:
        p = np.asarray(entry["p"])
        phi = sample_projection(p, model, ensemble.global_basis)
        samples.append(StochasticSample(p=p, phi=phi,
                                        operator_index=entry["operator_index"],
                                        seed=entry["index"]))
    return samples, model


def stage_propagate(cfg, paths, manifest):
    """Monte Carlo propagation of the sampled bases and ensemble statistics."""
    started = time.time()
    ensemble, _scenarios, _meta, _ameta = _load_ensemble(cfg, paths)
    samples, _model = _rebuild_samples(cfg, paths, ensemble)
    x_grid = read_matrix(paths.fom / "x_grid.srm").ravel()
    s0 = assemble_initial_state(cfg.propagation.test_mu, x_grid)
    t_eval = np.linspace(0.0, cfg.propagation.t_final, cfg.propagation.n_eval)

    n_nodes = x_grid.size
    store = np.lib.format.open_memmap(
        paths.propagation / "trajectories.npy", mode="w+",
        dtype=np.float64, shape=(len(samples), n_nodes, t_eval.size),
    )
    ok = np.zeros(len(samples), dtype=bool)
    failures = []
    for j, sample in enumerate(samples):
        try:
            store[j] = propagate_sample(sample, ensemble, s0, t_eval,
                                        rtol=cfg.propagation.rtol, atol=cfg.propagation.atol)
            ok[j] = True
        except BlowUp as err:
            failures.append({"index": j, "error": str(err)})
    store.flush()
    frac_failed = 1.0 - ok.mean()
    if ok.sum() < 2:
        raise TooFewSamples("fewer than 2 samples propagated successfully")
    stats = ensemble_statistics(store[ok], confidence=cfg.propagation.confidence)

    artifacts = [paths.propagation / "trajectories.npy"]
    for name, arr in (("mean", stats.mean_field), ("cov", stats.cov_field),
                      ("ci_width", stats.ci_width), ("q_low", stats.q_low),
                      ("q_high", stats.q_high), ("t_eval", t_eval)):
        f = paths.propagation / f"{name}.srm"
        # NaN-masked CoV entries are stored as -1 sentinels in the binary format
        out = arr
        if name == "cov":
            out = np.where(np.isnan(arr), -1.0, arr)
        write_matrix(f, out)
        artifacts.append(f)
    meta_prop = {
        "n_samples": len(samples),
        "n_ok": int(ok.sum()),
        "failure_fraction": frac_failed,
        "failures": failures,
        "test_mu": cfg.propagation.test_mu,
        "confidence": cfg.propagation.confidence,
        "successful_indices": [int(i) for i in np.flatnonzero(ok)],
    }
    f = paths.propagation / "meta.json"
    with open(f, "w") as fh:
        json.dump(meta_prop, fh, indent=2)
        fh.write("\n")
    artifacts.append(f)
    record = _record_stage(paths, manifest, "propagate", artifacts, started, extra={
        "n_ok": meta_prop["n_ok"], "failure_fraction": frac_failed,
    })
    if frac_failed > cfg.propagation.max_failure_fraction:
        raise StageFailure(
            "propagate",
            f"{frac_failed:.1%} of samples diverged "
            f"(limit {cfg.propagation.max_failure_fraction:.1%})",
        )
    return record


def stage_report(cfg, paths, manifest):
    """Delimited summaries and figures; see :mod:`sromuq.report`."""
    from .report import build_report

    started = time.time()
    artifacts = build_report(cfg, paths)
    return _record_stage(paths, manifest, "report", artifacts, started)


_STAGE_FUNCS = {
    "simulate": stage_simulate,
    "scenarios": stage_scenarios,
    "anchors": stage_anchors,
    "sample": stage_sample,
    "propagate": stage_propagate,
    "report": stage_report,
}


def run_stage(cfg, stage, root=None):
    """Run a single stage against an existing run directory."""
    paths = RunPaths(root or resolve_output_dir(cfg)).mkdirs()
    manifest = _load_manifest(paths)
    manifest["config"] = cfg.to_dict()
    try:
        record = _STAGE_FUNCS[stage](cfg, paths, manifest)
    except StageFailure:
        raise
    except (SromError, OSError, ValueError) as err:
        _save_manifest(paths, manifest)
        raise StageFailure(stage, err) from err
    return paths, record


def run_pipeline(cfg, root=None, stages=STAGES):
    """Execute the configured stages in order; returns the run directory."""
    paths = RunPaths(root or resolve_output_dir(cfg)).mkdirs()
    manifest = _load_manifest(paths)
    manifest["config"] = cfg.to_dict()
    manifest["started_at"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    for stage in stages:
        try:
            _STAGE_FUNCS[stage](cfg, paths, manifest)
        except StageFailure:
            raise
        except (SromError, OSError, ValueError) as err:
            manifest.setdefault("failures", []).append({"stage": stage, "error": str(err)})
            _save_manifest(paths, manifest)
            raise StageFailure(stage, err) from err
    return paths


def replay_sampling(cfg, root):
    """Regenerate the Dirichlet draws from the stored manifest and verify
    they match bitwise; returns the comparison summary."""
    paths = RunPaths(root)
    with open(paths.sampling / "manifest.json") as fh:
        stored = json.load(fh)
    alpha = np.asarray(stored["alpha"])
    p_new = sample_dirichlet(alpha, stored["n_samples"], stored["seed"])
    p_old = np.asarray([entry["p"] for entry in stored["samples"]])
    indices_new = [select_operator_index(p) for p in p_new]
    indices_old = [entry["operator_index"] for entry in stored["samples"]]
    return {
        "p_identical": bool(np.array_equal(p_new, p_old)),
        "indices_identical": indices_new == indices_old,
        "n_samples": stored["n_samples"],
    }
