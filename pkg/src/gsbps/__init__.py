"""Gibbs sampler for Bayesian P-splines.

Full MCMC for penalized B-spline models by cycling univariate conditional
posteriors: conjugate Gamma draws for the smoothing hyperparameters,
adaptive rejection sampling for the (log-concave) spline-coefficient
conditionals, and Griddy-Gibbs for conditionals without a concavity
guarantee. Ships Poisson histogram smoothing, Binomial regression, and
Negative-Binomial count smoothing.
"""

from .basis import KnotVector, design_matrix, eval_basis, make_knots
from .diagnostics import (
    FittedCurve,
    ParamSummary,
    density_estimate,
    fitted_curve,
    geweke,
    geweke_z,
    posterior_summary,
)
from .gibbs import (
    Chain,
    GsbpsConfig,
    init_state,
    log_posterior,
    run_chains,
    run_gsbps,
    sample_delta,
    sample_lambda,
)
from .penalty import PenaltyModel, conditional_prior_moments, diff_matrix, penalty_matrix
from .rng import RandomSource
from .targets import (
    BinomialData,
    BinomialModel,
    ConditionalTarget,
    CountSeriesData,
    HistogramData,
    ModelState,
    NegBinModel,
    PoissonModel,
    binom_loglik,
    negbin_loglik,
    poisson_loglik,
    rho_conditional,
    theta_conditional,
)

__version__ = "0.1.0"

__all__ = [
    "BinomialData",
    "BinomialModel",
    "Chain",
    "ConditionalTarget",
    "CountSeriesData",
    "FittedCurve",
    "GsbpsConfig",
    "HistogramData",
    "KnotVector",
    "ModelState",
    "NegBinModel",
    "ParamSummary",
    "PenaltyModel",
    "PoissonModel",
    "RandomSource",
    "binom_loglik",
    "conditional_prior_moments",
    "density_estimate",
    "design_matrix",
    "diff_matrix",
    "eval_basis",
    "fitted_curve",
    "geweke",
    "geweke_z",
    "init_state",
    "log_posterior",
    "make_knots",
    "negbin_loglik",
    "penalty_matrix",
    "poisson_loglik",
    "posterior_summary",
    "rho_conditional",
    "run_chains",
    "run_gsbps",
    "sample_delta",
    "sample_lambda",
    "theta_conditional",
]
