"""Numerical laboratory for a stochastic model of cascading line failures.

Exact blackout-size laws for the affine case, their power-law approximations,
the perturbation machinery behind the exceedance constant, a Monte Carlo
cascade simulator and a threshold-regime classifier.
"""

from .asymptotics import (
    affine_exceedance_approx,
    affine_pmf_approx,
    branching_pmf_approx,
    near_total_pmf_approx,
    pmf_constant_probe,
)
from .exact import (
    QuasiBinomialParams,
    generalized_poisson_pmf,
    quasi_binomial_exceedance,
    quasi_binomial_log_pmf,
    quasi_binomial_pmf,
)
from .model import (
    CapacityDistribution,
    CascadeModel,
    LoadSurgeFunction,
    ModelFamily,
    ThresholdSpec,
    composition,
    limit_c,
    perturbation,
)
from .montecarlo import KERNEL, EstimatorResult, empirical_pmf, estimate_exceedance, sample_cascade
from .numerics import log_binomial, log_gamma, lower_incomplete_gamma
from .perturbation import (
    ConditionsNotVerifiable,
    NumericalInconsistency,
    PerturbationProfile,
    beta_sequence,
    fixed_k_exceedance_limit,
    order_stat_prob,
    v_limit,
    v_m,
)
from .regimes import RegimeReport, classify_threshold, criticality_check

__version__ = "0.1.0"
