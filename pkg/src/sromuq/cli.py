"""Command-line entry point.

Subcommands mirror the pipeline stages (simulate, scenarios, anchors,
sample, propagate, report), plus ``run`` for the whole chain and
``replay`` for verifying sampling-stage reproducibility. Flags override
config-file keys; exit codes: 0 success, 2 configuration error,
3 stage failure.
"""

import argparse
import json
import sys

from .config import load_config, resolve_output_dir
from .errors import ConfigError, StageFailure
from .pipeline import STAGES, replay_sampling, run_pipeline, run_stage

_FLAG_KEYS = {
    "n_elements": ("fom.n_elements", int),
    "reynolds": ("fom.reynolds", float),
    "dt": ("fom.dt", float),
    "t_final": ("fom.t_final", float),
    "r": ("ranks.r", lambda v: v if v == "auto" else int(v)),
    "q": ("ranks.q", int),
    "energy_threshold": ("ranks.energy_threshold", float),
    "strategy": ("clustering.strategy", str),
    "m": ("clustering.m", lambda v: v if v == "auto" else int(v)),
    "n_samples": ("sampling.n_samples", int),
    "seed": ("sampling.seed", int),
    "test_mu": ("propagation.test_mu", float),
    "confidence": ("propagation.confidence", float),
}


def _add_common(parser):
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--output-dir", dest="output_dir",
                        help="run directory (env SROMUQ_OUTPUT_DIR overrides)")
    parser.add_argument("--mu-list", dest="mu_list",
                        help="comma-separated training parameter values")
    for flag, (key, _) in _FLAG_KEYS.items():
        parser.add_argument(f"--{flag.replace('_', '-')}", dest=flag)


def _config_from_args(args):
    overrides = {}
    if args.output_dir:
        overrides["output_dir"] = args.output_dir
    if getattr(args, "mu_list", None):
        overrides["fom.mu_list"] = [float(v) for v in args.mu_list.split(",")]
    for flag, (key, conv) in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = conv(value)
    return load_config(args.config, overrides)


def _emit_summary(payload):
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sromuq",
        description="Stochastic reduced-order modeling with basis uncertainty",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + STAGES + ("replay",):
        p = sub.add_parser(name)
        _add_common(p)
    args = parser.parse_args(argv)

    try:
        cfg = _config_from_args(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2

    try:
        if args.command == "run":
            paths = run_pipeline(cfg)
            with open(paths.manifest) as fh:
                manifest = json.load(fh)
            _emit_summary({
                "status": "ok",
                "run_dir": str(paths.root),
                "stages": {k: {kk: vv for kk, vv in v.items() if kk != "artifacts"}
                           for k, v in manifest["stages"].items()},
            })
        elif args.command == "replay":
            result = replay_sampling(cfg, resolve_output_dir(cfg))
            _emit_summary({"status": "ok" if result["p_identical"] else "mismatch",
                           **result})
            return 0 if result["p_identical"] and result["indices_identical"] else 3
        else:
            _paths, record = run_stage(cfg, args.command)
            _emit_summary({"status": "ok", "stage": args.command,
                           **{k: v for k, v in record.items() if k != "artifacts"}})
    except StageFailure as err:
        print(f"stage failure: {err}", file=sys.stderr)
        return 3
    except FileNotFoundError as err:
        print(f"missing artifact (run earlier stages first): {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
