"""Pipeline configuration: schema, paper-default values, JSON loading,
and flag overrides.

Every field has a default mirroring the Burgers study setup; a run
manifest echoes the fully resolved configuration so defaulted values are
always recorded.
"""

import json
import os
from dataclasses import asdict, dataclass, field

from .errors import ConfigError

__all__ = ["PipelineConfig", "load_config", "resolve_output_dir", "DEFAULT_MU_GRID"]

DEFAULT_MU_GRID = [round(0.4 + 0.1 * i, 1) for i in range(9)]

# lambda1 x (lambda2 = lambda3); the upper decades keep the quartic
# features damped enough for stable integration on the Burgers data
DEFAULT_LAMBDA1_GRID = [1e-4, 1e-2, 1.0, 1e2]
DEFAULT_LAMBDA23_GRID = [1e2, 1e3, 1e4]
DEFAULT_GAMMA_GRID = [10.0**e for e in range(-6, 3)]


@dataclass
class FomSection:
    n_elements: int = 256
    reynolds: float = 1000.0
    dt: float = 1e-3
    t_final: float = 2.0
    mu_list: list = field(default_factory=lambda: list(DEFAULT_MU_GRID))
    newton_tol: float = 1e-10
    newton_max_iter: int = 25


@dataclass
class ScenarioSection:
    # explicit index subsets of mu_list; None generates them from the knobs
    combinations: list = None
    sizes: list = field(default_factory=lambda: [5, 6])
    count: int = 12
    generator_seed: int = 7
    # every generated subset spans the parameter range (both grid endpoints),
    # keeping each training combination interpolative
    require_endpoints: bool = True


@dataclass
class RankSection:
    r: object = 7  # int, or "auto" to use the energy threshold selection
    q: int = 8
    energy_threshold: float = 5e-2


@dataclass
class OpinfSection:
    p: int = 2
    ghat_degrees: list = None  # None -> degrees 3..2p
    lambda1_grid: list = field(default_factory=lambda: list(DEFAULT_LAMBDA1_GRID))
    lambda23_grid: list = field(default_factory=lambda: list(DEFAULT_LAMBDA23_GRID))
    gamma_grid: list = field(default_factory=lambda: list(DEFAULT_GAMMA_GRID))


@dataclass
class ClusteringSection:
    strategy: str = "spectral-embed-kmeans"
    m: object = "auto"  # int >= 3, or "auto" for silhouette selection
    m_candidates: list = field(default_factory=lambda: [3, 4, 5])


@dataclass
class SamplingSection:
    n_samples: int = 1000
    seed: int = 20240
    eps_alpha: float = 1e-6
    log_tol: float = 1e-10
    log_max_iter: int = 100


@dataclass
class PropagationSection:
    test_mu: float = 1.0
    t_final: float = 2.0
    n_eval: int = 101
    rtol: float = 1e-6
    atol: float = 1e-9
    confidence: float = 0.95
    max_failure_fraction: float = 0.05


@dataclass
class PipelineConfig:
    fom: FomSection = field(default_factory=FomSection)
    scenarios: ScenarioSection = field(default_factory=ScenarioSection)
    ranks: RankSection = field(default_factory=RankSection)
    opinf: OpinfSection = field(default_factory=OpinfSection)
    clustering: ClusteringSection = field(default_factory=ClusteringSection)
    sampling: SamplingSection = field(default_factory=SamplingSection)
    propagation: PropagationSection = field(default_factory=PropagationSection)
    output_dir: str = "srom_run"

    def to_dict(self):
        return asdict(self)

    def validate(self):
        f = self.fom
        if f.n_elements < 2 or f.dt <= 0 or f.t_final <= 0 or f.reynolds <= 0:
            raise ConfigError("fom: n_elements >= 2 and positive reynolds/dt/t_final required")
        if not f.mu_list:
            raise ConfigError("fom.mu_list must be nonempty")
        r = self.ranks.r
        if r != "auto" and (not isinstance(r, int) or r < 1):
            raise ConfigError('ranks.r must be a positive integer or "auto"')
        if self.ranks.q < 0:
            raise ConfigError("ranks.q must be >= 0")
        if not 0.0 < self.ranks.energy_threshold < 1.0:
            raise ConfigError("ranks.energy_threshold must lie in (0, 1)")
        if self.opinf.p < 2:
            raise ConfigError("opinf.p must be >= 2")
        m = self.clustering.m
        if m != "auto" and (not isinstance(m, int) or m < 1):
            raise ConfigError('clustering.m must be a positive integer or "auto"')
        if self.clustering.strategy not in ("spectral-embed-kmeans", "riemannian-kmeans"):
            raise ConfigError(f"unknown clustering strategy {self.clustering.strategy!r}")
        if self.sampling.n_samples < 1:
            raise ConfigError("sampling.n_samples must be >= 1")
        if not 0.0 < self.propagation.confidence < 1.0:
            raise ConfigError("propagation.confidence must lie in (0, 1)")
        if self.scenarios.combinations is not None:
            n = len(self.fom.mu_list)
            for i, sub in enumerate(self.scenarios.combinations):
                if not sub:
                    raise ConfigError(f"scenarios.combinations[{i}] is empty")
                if any(not isinstance(j, int) or j < 0 or j >= n for j in sub):
                    raise ConfigError(
                        f"scenarios.combinations[{i}] has indices outside 0..{n - 1}"
                    )
        return self


_SECTIONS = {
    "fom": FomSection,
    "scenarios": ScenarioSection,
    "ranks": RankSection,
    "opinf": OpinfSection,
    "clustering": ClusteringSection,
    "sampling": SamplingSection,
    "propagation": PropagationSection,
}


def _build_section(cls, values, path):
    known = cls.__dataclass_fields__
    unknown = set(values) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) under '{path}': {sorted(unknown)}")
    return cls(**values)


def load_config(path=None, overrides=None):
    """Build a validated config from an optional JSON file plus overrides.

    ``overrides`` maps dotted keys ("fom.dt") to values; they win over
    the file, which wins over the defaults.
    """
    tree = {}
    if path is not None:
        with open(path) as fh:
            try:
                tree = json.load(fh)
            except json.JSONDecodeError as err:
                raise ConfigError(f"{path}: invalid JSON ({err})") from None
        if not isinstance(tree, dict):
            raise ConfigError(f"{path}: top level must be an object")
    for key, value in (overrides or {}).items():
        parts = key.split(".")
        if len(parts) == 1:
            tree[parts[0]] = value
        elif len(parts) == 2:
            tree.setdefault(parts[0], {})[parts[1]] = value
        else:
            raise ConfigError(f"override key too deep: {key}")
    kwargs = {}
    for name, section in tree.items():
        if name == "output_dir":
            kwargs["output_dir"] = str(section)
            continue
        if name not in _SECTIONS:
            raise ConfigError(f"unknown config section: {name!r}")
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} must be an object")
        kwargs[name] = _build_section(_SECTIONS[name], section, name)
    return PipelineConfig(**kwargs).validate()


def resolve_output_dir(config):
    """Environment variable SROMUQ_OUTPUT_DIR overrides the configured path."""
    return os.environ.get("SROMUQ_OUTPUT_DIR", config.output_dir)
