"""Elliptical copula variational inference."""

import json

from ._copvi import (
    DataError,
    NumericError,
    copula_scores,
    corr_from_pairs,
    fit_corr,
    fit_gaussian,
    kl_bench,
    log_q,
    marginal_log_density,
    posterior_spearman,
    sample,
    simulate_gaussian,
    skew_to_alpha,
    spearman_from_omega,
    transform_forward,
    transform_inverse,
)

__all__ = [
    "DataError",
    "NumericError",
    "copula_scores",
    "corr_from_pairs",
    "fit_corr",
    "fit_gaussian",
    "kl_bench",
    "load_artifact",
    "log_q",
    "marginal_log_density",
    "posterior_spearman",
    "sample",
    "simulate_gaussian",
    "skew_to_alpha",
    "spearman_from_omega",
    "transform_forward",
    "transform_inverse",
]


def load_artifact(path):
    """Read an artifact written by ``copvi fit-corr`` as a JSON string."""
    with open(path, encoding="utf-8") as fh:
        return json.dumps(json.load(fh))
