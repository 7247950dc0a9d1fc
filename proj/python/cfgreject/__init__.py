"""Python bindings for the cfgreject C++ core.

Points are ``(x, y)`` tuples. Configuration dictionaries use the same schema
as the command-line tool's ``--config`` files.
"""

import json as _json

from ._core import (
    ConfigError,
    FilterMode,
    FractalConfig,
    IoError,
    MixtureDistribution,
    Sampler,
    ScoreScaling,
    Solver,
    avg_knn_scores,
    build_fractal_mixture,
    full_asd,
    lof_scores,
    log_density,
    make_schedule,
    partial_asd,
    pearson,
    resolve_threshold,
    sample_data,
    score,
    spearman,
)
from . import _core


def normalize_config(config=None):
    """Fill defaults into a config dict and validate it."""
    return _json.loads(_core.normalize_config(_json.dumps(config or {})))


def run_experiment(config=None):
    """Run the full pipeline and write artifacts to ``config["output_dir"]``."""
    _core.run_experiment(_json.dumps(config or {}))


__all__ = [
    "ConfigError",
    "FilterMode",
    "FractalConfig",
    "IoError",
    "MixtureDistribution",
    "Sampler",
    "ScoreScaling",
    "Solver",
    "avg_knn_scores",
    "build_fractal_mixture",
    "full_asd",
    "lof_scores",
    "log_density",
    "make_schedule",
    "normalize_config",
    "partial_asd",
    "pearson",
    "resolve_threshold",
    "run_experiment",
    "sample_data",
    "score",
    "spearman",
]
