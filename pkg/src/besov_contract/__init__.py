"""Posterior contraction under Besov-Laplace priors in the Gaussian sequence model."""

__version__ = "0.1.0"

from .specfun import DomainError, erfc, erfcx, log_sum_exp
from .seqspace import (BesovIndex, CoefSeq, NoiseModel, besov_norm, sample_observation,
                       sobolev_distance)
from .truths import TruthKind, TruthSpec, materialize
from .posterior import MarginalPosterior, MixtureDecomposition, PriorScale
from .wasserstein import QuantileFn, product_w2_sq, w2_to_dirac, w2_univariate
from .config import ConfigError, ExperimentConfig, load_config
from .lab import (RateFit, SeriesReport, contraction_probability, derivative_rate_experiment,
                  deterministic_series, epsilon_n, lipschitz_ratio_scan, rate_fit,
                  stochastic_series, tail_check, thresholds)

__all__ = [
    "DomainError", "erfc", "erfcx", "log_sum_exp",
    "BesovIndex", "CoefSeq", "NoiseModel", "besov_norm", "sample_observation", "sobolev_distance",
    "TruthKind", "TruthSpec", "materialize",
    "MarginalPosterior", "MixtureDecomposition", "PriorScale",
    "QuantileFn", "product_w2_sq", "w2_to_dirac", "w2_univariate",
    "ConfigError", "ExperimentConfig", "load_config",
    "RateFit", "SeriesReport", "contraction_probability", "derivative_rate_experiment",
    "deterministic_series", "epsilon_n", "lipschitz_ratio_scan", "rate_fit",
    "stochastic_series", "tail_check", "thresholds",
]
