"""Run report: delimited summaries plus rendered figures.

Reads the artifacts of the earlier stages and writes, under report/:
CSV tables (energy error curves, concentration, coverage fractions,
statistics extrema) and PNG figures (energy decay per combination, the
confidence envelope of the test solution, the cluster embedding, and the
normalized anchor deviation field).
"""

import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .latent import energy_error
from .matio import read_matrix, write_csv
from .sampling import gram_matrix
from .stiefel import tangent_mean_residual
from .uq import UQEnsembleResult, deviation_from_ci

__all__ = ["build_report", "coverage_fraction"]


def coverage_fraction(delta_ci):
    """Fraction of defined space-time points with |deviation| <= 1."""
    defined = np.isfinite(delta_ci)
    if not defined.any():
        return float("nan")
    return float(np.mean(np.abs(delta_ci[defined]) <= 1.0))


def _energy_table(paths, meta):
    rows = []
    max_r = 0
    spectra = []
    for sm in meta["scenarios"]:
        sdir = paths.scenario_dir(sm["id"])
        sigma = read_matrix(sdir / "singular_values.srm").ravel()
        spectra.append(sigma)
        max_r = max(max_r, min(sigma.size, 24))
    for r in range(1, max_r + 1):
        rows.append([r] + [energy_error(s, min(r, s.size)) for s in spectra])
    header = ["r"] + [f"scenario_{sm['id']}" for sm in meta["scenarios"]]
    return header, rows


def _fig_energy(paths, meta, header, rows, threshold):
    fig, ax = plt.subplots(figsize=(6, 4.2))
    arr = np.asarray(rows)
    for col in range(1, arr.shape[1]):
        ax.semilogy(arr[:, 0], arr[:, col], lw=0.9, alpha=0.8)
    ax.axhline(threshold, color="k", ls="--", lw=1.0, label=f"threshold {threshold:g}")
    ax.axvline(meta["r"], color="r", ls=":", lw=1.0, label=f"r = {meta['r']}")
    ax.set_xlabel("rank r")
    ax.set_ylabel("energy error")
    ax.set_title("Energy error per training combination")
    ax.legend(frameon=False, fontsize=8)
    out = paths.report / "energy_error.png"
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out


def _fig_envelope(paths, x_grid, t_eval, mean, q_low, q_high, anchors_det):
    snap_times = [0.25, 0.75, 1.5]
    fig, axes = plt.subplots(1, len(snap_times), figsize=(11, 3.2), sharey=True)
    for ax, t_want in zip(axes, snap_times):
        j = int(np.argmin(np.abs(t_eval - t_want)))
        ax.fill_between(x_grid, q_low[:, j], q_high[:, j], color="C0", alpha=0.3,
                        label="95% CI")
        ax.plot(x_grid, mean[:, j], "C0-", lw=1.2, label="mean")
        for i, det in enumerate(anchors_det):
            ax.plot(x_grid, det[:, j], lw=0.8, ls="--", label=f"anchor {i + 1}")
        ax.set_title(f"t = {t_eval[j]:.2f}")
        ax.set_xlabel("x")
    axes[0].set_ylabel("state")
    axes[0].legend(frameon=False, fontsize=7)
    out = paths.report / "confidence_envelope.png"
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out


def _fig_embedding(paths, ameta):
    geo = read_matrix(paths.anchors / "dist_geodesic.srm")
    if geo.shape[0] < 2:
        return None
    from .anchors import _spectral_embedding

    labels = np.asarray(ameta["labels"])
    emb = _spectral_embedding(geo, max(2, len(set(labels.tolist()))))
    if emb.shape[1] < 2:
        emb = np.column_stack([emb[:, 0], np.zeros(emb.shape[0])])
    emb = emb[:, :2]
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    for lab in sorted(set(labels.tolist())):
        mask = labels == lab
        ax.scatter(emb[mask, 0], emb[mask, 1], s=36, label=f"cluster {lab}")
    for aid in ameta["anchor_ids"]:
        ax.scatter(emb[aid, 0], emb[aid, 1], marker="*", s=220, ec="k", fc="none",
                   linewidths=1.2)
    ax.set_xlabel("embedding 1")
    ax.set_ylabel("embedding 2")
    ax.set_title("Scenario bases: spectral embedding (anchors starred)")
    ax.legend(frameon=False, fontsize=8)
    out = paths.report / "cluster_embedding.png"
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out


def _fig_deviation(paths, x_grid, t_eval, delta, anchor_no):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    masked = np.ma.masked_invalid(delta)
    pc = ax.pcolormesh(t_eval, x_grid, masked, cmap="RdBu_r", vmin=-2, vmax=2)
    fig.colorbar(pc, ax=ax, label="deviation / half CI width")
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.set_title(f"Anchor {anchor_no} deviation from the ensemble")
    out = paths.report / f"deviation_anchor_{anchor_no}.png"
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out


def build_report(cfg, paths):
    from .fom import assemble_initial_state
    from .pipeline import _load_ensemble, _rebuild_samples
    from .uq import propagate_sample

    with open(paths.scenarios / "meta.json") as fh:
        meta = json.load(fh)
    with open(paths.anchors / "meta.json") as fh:
        ameta = json.load(fh)
    with open(paths.propagation / "meta.json") as fh:
        pmeta = json.load(fh)

    x_grid = read_matrix(paths.fom / "x_grid.srm").ravel()
    t_eval = read_matrix(paths.propagation / "t_eval.srm").ravel()
    mean = read_matrix(paths.propagation / "mean.srm")
    q_low = read_matrix(paths.propagation / "q_low.srm")
    q_high = read_matrix(paths.propagation / "q_high.srm")
    cov = read_matrix(paths.propagation / "cov.srm")
    cov = np.where(cov < 0, np.nan, cov)
    stats = UQEnsembleResult(
        mean_field=mean, cov_field=cov, ci_width=q_high - q_low,
        q_low=q_low, q_high=q_high, confidence=pmeta["confidence"],
        n_samples=pmeta["n_ok"],
    )

    artifacts = []

    header, rows = _energy_table(paths, meta)
    f = paths.report / "energy_error.csv"
    write_csv(f, rows, header=header)
    artifacts.append(f)
    artifacts.append(_fig_energy(paths, meta, header, rows, meta["energy_threshold"]))

    alpha = read_matrix(paths.sampling / "alpha.srm").ravel()
    f = paths.report / "concentration.csv"
    write_csv(f, [list(alpha) + [alpha.sum()]],
              header=[f"alpha_{i + 1}" for i in range(alpha.size)] + ["sum"])
    artifacts.append(f)

    # anchor deterministic trajectories through the stochastic machinery
    ensemble, _scenarios, _meta, _ameta = _load_ensemble(cfg, paths)
    samples, model = _rebuild_samples(cfg, paths, ensemble)
    s0 = assemble_initial_state(cfg.propagation.test_mu, x_grid)
    from .sampling import StochasticSample, sample_projection

    anchors_det, coverages = [], []
    m = len(ensemble.anchors)
    for i in range(m):
        p_onehot = np.zeros(m)
        p_onehot[i] = 1.0
        phi = sample_projection(p_onehot, model, ensemble.global_basis)
        det = propagate_sample(
            StochasticSample(p=p_onehot, phi=phi, operator_index=i + 1, seed=-1),
            ensemble, s0, t_eval,
            rtol=cfg.propagation.rtol, atol=cfg.propagation.atol,
        )
        anchors_det.append(det)
        delta = deviation_from_ci(det, stats)
        coverages.append(coverage_fraction(delta))
        artifacts.append(_fig_deviation(paths, x_grid, t_eval, delta, i + 1))

    f = paths.report / "coverage.csv"
    write_csv(f, [[i + 1, coverages[i]] for i in range(m)],
              header=["anchor", "fraction_within_ci"])
    artifacts.append(f)

    artifacts.append(_fig_envelope(paths, x_grid, t_eval, mean, q_low, q_high, anchors_det))
    embedding_fig = _fig_embedding(paths, ameta)
    if embedding_fig is not None:
        artifacts.append(embedding_fig)

    # first-order check that the global basis sits at the sample mean
    sample_points = [s.phi for s in samples]
    residual = tangent_mean_residual(ensemble.global_basis, sample_points,
                                     tol=cfg.sampling.log_tol,
                                     max_iter=cfg.sampling.log_max_iter)
    points = [a.stiefel_point(ensemble.global_basis.constraint) for a in ensemble.anchors]
    _h, logs = gram_matrix(points, ensemble.global_basis,
                           tol=cfg.sampling.log_tol, max_iter=cfg.sampling.log_max_iter)
    mean_log_norm = float(np.mean([lg.norm for lg in logs]))

    summary = {
        "selected_r": meta["selected_r"],
        "r": meta["r"],
        "q": meta["q"],
        "lambdas": meta["lambdas"],
        "gamma": meta["gamma"],
        "full_training_error": meta["full_training_error"],
        "full_training_error_squared": meta["full_training_error"] ** 2,
        "full_energy_at_r": meta["full_energy_at_r"],
        "anchor_ids": ameta["anchor_ids"],
        "anchor_mu_values": ameta["anchor_mu_values"],
        "alpha": [float(a) for a in alpha],
        "alpha_sum": float(alpha.sum()),
        "n_samples_ok": pmeta["n_ok"],
        "failure_fraction": pmeta["failure_fraction"],
        "anchor_coverage_fractions": coverages,
        "tangent_mean_residual": residual,
        "mean_anchor_log_norm": mean_log_norm,
        "ci_width_max": float(np.max(q_high - q_low)),
        "cov_max_defined": float(np.nanmax(cov)),
    }
    f = paths.report / "summary.json"
    with open(f, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    artifacts.append(f)
    return artifacts
