import json

import pytest

from sromuq.config import load_config
from sromuq.pipeline import run_pipeline

SMALL_OVERRIDES = {
    "fom.n_elements": 48,
    "fom.dt": 5e-3,
    "fom.t_final": 0.5,
    "fom.mu_list": [0.4, 0.7, 1.0],
    "scenarios.combinations": [[0, 1], [0, 2], [1, 2]],
    "ranks.r": 3,
    "ranks.q": 2,
    "clustering.m": 3,
    "sampling.n_samples": 40,
    "sampling.seed": 1234,
    "propagation.test_mu": 0.8,
    "propagation.t_final": 0.5,
    "propagation.n_eval": 26,
    "opinf.lambda1_grid": [1e-4, 1e-2],
    "opinf.lambda23_grid": [1e-2, 1.0, 1e2],
    "opinf.gamma_grid": [1e-6, 1e-2],
}


def small_config(output_dir, **extra):
    overrides = dict(SMALL_OVERRIDES)
    overrides["output_dir"] = str(output_dir)
    overrides.update(extra)
    return load_config(overrides=overrides)


@pytest.fixture(scope="session")
def small_run(tmp_path_factory):
    """One fully executed small pipeline run, shared across tests."""
    root = tmp_path_factory.mktemp("small_run")
    cfg = small_config(root)
    paths = run_pipeline(cfg)
    return cfg, paths


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
