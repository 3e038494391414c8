"""Least-squares oracle inequalities for dependent data: simulation and bound checks."""

import json
import os

from ._ermlab import (
    AssumptionViolation,
    BlockingCondition,
    ConfigError,
    DomainError,
    Error,
    IoError,
    SingularDesign,
    check_names,
    empirical_risk,
    fit_least_squares,
    format_double,
    k_h,
    k_sigma2,
    k_sigma2_prime,
    max_predictor_growth,
    mixing_series,
    predictor_count,
)

__all__ = [
    "AssumptionViolation",
    "BlockingCondition",
    "ConfigError",
    "DomainError",
    "Error",
    "IoError",
    "SingularDesign",
    "bound",
    "check",
    "check_names",
    "empirical_risk",
    "fit_least_squares",
    "format_double",
    "k_h",
    "k_sigma2",
    "k_sigma2_prime",
    "max_predictor_growth",
    "mixing_series",
    "predictor_count",
    "run",
    "run_experiment",
]


def _config_text(config):
    if isinstance(config, dict):
        return json.dumps(config)
    if isinstance(config, (str, os.PathLike)) and os.path.exists(config):
        with open(config, encoding="utf-8") as fh:
            return fh.read()
    if isinstance(config, str):
        return config
    raise TypeError("config must be a dict, a JSON string or a path")


def bound(theorem, constants):
    """Certificate for `theorem` (thm31, thm41, thm51, benchmark) from a dict of constants."""
    from ._ermlab import _bound_json

    text = constants if isinstance(constants, str) else json.dumps(constants)
    return json.loads(_bound_json(theorem, text))


def check(name, draws=None, seed=None, **params):
    """Run one named Monte Carlo falsifier and return its record."""
    from ._ermlab import _check_json

    return json.loads(_check_json(name, draws, seed, {k: float(v) for k, v in params.items()}))


def run_experiment(config, threads=None):
    """Run the replication study in `config` without writing files; returns the report dict."""
    from ._ermlab import _experiment_json

    return json.loads(_experiment_json(_config_text(config), threads))


def run(config, output_dir=None):
    """Full run including requested checks and file output. The env override still applies."""
    from ._ermlab import _run_config

    out = _run_config(_config_text(config), None if output_dir is None else str(output_dir))
    out["report"] = json.loads(out["report"])
    return out
