"""Weighted Bayesian bootstrap: Exp(1)-weighted posterior-mode sampling."""

from ._core import (
    __version__,
    bootstrap_lasso,
    bootstrap_trend_filter,
    bootstrap_univariate,
    cli,
    credible_interval,
    exact_posterior_mean,
    fit_trend_filter,
    fit_weighted_lasso,
    fourier_signal,
    lambda_max,
    sample_weights,
    simulate_fourier,
    soft_threshold_wbb,
    summarize,
    wbb_mean_oracle,
    zero_probability,
)

__all__ = [
    "__version__",
    "bootstrap_lasso",
    "bootstrap_trend_filter",
    "bootstrap_univariate",
    "cli",
    "credible_interval",
    "exact_posterior_mean",
    "fit_trend_filter",
    "fit_weighted_lasso",
    "fourier_signal",
    "lambda_max",
    "sample_weights",
    "simulate_fourier",
    "soft_threshold_wbb",
    "summarize",
    "wbb_mean_oracle",
    "zero_probability",
]
