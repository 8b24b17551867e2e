"""Monte Carlo propagation of sampled projection bases through
anchor-selected reduced operators, and ensemble statistics.

Each stochastic basis sample is split into its linear and enrichment
blocks, the test initial condition is encoded with the sampled linear
block, the latent dynamics are integrated with the operators of the
anchor the sample is closest to (largest Dirichlet weight), and the
trajectory is reconstructed with the sampled basis and that anchor's
enrichment coefficients.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BlowUp, TooFewSamples
from .latent import feature_map_g
from .opinf import integrate_rom

__all__ = [
    "UQEnsembleResult",
    "propagate_sample",
    "ensemble_statistics",
    "deviation_from_ci",
]

MEAN_FLOOR = 1e-12
WIDTH_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class UQEnsembleResult:
    """Pointwise ensemble statistics over N x k space-time fields.

    ``cov_field`` is NaN where |mean| is below the mask floor; quantiles
    use linear interpolation between order statistics.
    """

    mean_field: np.ndarray
    cov_field: np.ndarray
    ci_width: np.ndarray
    q_low: np.ndarray
    q_high: np.ndarray
    confidence: float
    n_samples: int
    trajectories: np.ndarray = None


def propagate_sample(sample, ensemble, s0, t_eval, rtol=1e-6, atol=1e-9):
    """Propagate one stochastic basis sample to a reconstructed trajectory.

    The anchor index recorded in the sample selects the reduced operators
    and enrichment coefficients; encode/decode use that anchor's reference
    state, so a one-hot sample reproduces the anchor's deterministic run
    exactly. :class:`BlowUp` failures are re-raised with the sample's seed
    attached so the caller can record them.
    """
    anchor = ensemble.anchors[sample.operator_index - 1]
    r = anchor.ops.r
    phi = sample.phi.matrix
    v_r = phi[:, :r]
    v_bar = phi[:, r:]
    rep = anchor.rep
    s_ref = rep.s_ref
    s_hat0 = v_r.T @ (np.asarray(s0, dtype=np.float64) - s_ref)
    try:
        s_hat = integrate_rom(anchor.ops, s_hat0, t_eval, rtol=rtol, atol=atol)
    except BlowUp as err:
        raise BlowUp(str(err), seed=sample.seed) from None
    recon = s_ref[:, None] + v_r @ s_hat + v_bar @ (rep.xi @ feature_map_g(s_hat, rep.p))
    return recon


def ensemble_statistics(trajectories, confidence=0.95, keep_trajectories=False):
    """Pointwise mean, coefficient of variation, and percentile CI width.

    ``trajectories`` stacks successful samples along axis 0. CoV entries
    where |mean| <= 1e-12 are NaN (undefined, left to post-processing).
    """
    traj = np.asarray(trajectories)
    if traj.ndim != 3 or traj.shape[0] < 2:
        raise TooFewSamples("need at least 2 sample trajectories")
    lo = 100.0 * (1.0 - confidence) / 2.0
    hi = 100.0 - lo
    # reduce in sorted order so results are bitwise independent of how the
    # samples were ordered or scheduled
    ordered = np.sort(traj, axis=0)
    mean = ordered.mean(axis=0)
    std = ordered.std(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cov = np.where(np.abs(mean) > MEAN_FLOOR, std / np.abs(mean), np.nan)
    q_low = np.percentile(ordered, lo, axis=0)
    q_high = np.percentile(ordered, hi, axis=0)
    return UQEnsembleResult(
        mean_field=mean,
        cov_field=cov,
        ci_width=q_high - q_low,
        q_low=q_low,
        q_high=q_high,
        confidence=float(confidence),
        n_samples=traj.shape[0],
        trajectories=traj if keep_trajectories else None,
    )


def deviation_from_ci(qoi_field, stats):
    """Deviation of a field from the ensemble mean in CI half-widths.

    |value| <= 1 means the field lies inside the central confidence band.
    Entries where the CI width is below the floor are NaN.
    """
    qoi = np.asarray(qoi_field, dtype=np.float64)
    if qoi.shape != stats.mean_field.shape:
        raise ValueError("QoI field shape does not match the ensemble fields")
    half = 0.5 * stats.ci_width
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(half > WIDTH_FLOOR, (qoi - stats.mean_field) / half, np.nan)
