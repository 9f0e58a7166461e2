"""Bayesian false-discovery and false-acceptance rates of one-sided tests.

Three routes to the same quantities, cross-validating each other:

* third-order asymptotic series in powers of n^(-1/2) (``expansions``),
* exact quadrature of the power function against the prior (``exact``),
* Monte-Carlo simulation of m simultaneous experiments whose groupwise FDR
  converges to the Bayesian rate (``mtsim``).

``analysis`` adds spiky/flat prior limits, honesty thresholds and
mean-vs-median comparisons; ``cli`` exposes everything as CSV/JSON tables.
"""

from .analysis import SpikyLimits, StatisticGap, n_alpha, spiky_limits, statistic_gap
from .exact import DegenerateDenominator, JointProbabilities, exact_joint, exact_rates
from .expansions import (
    CoefficientSet,
    exp_family_coefficients,
    median_coefficients,
    rate_series,
)
from .models import (
    ExpFamilyModel,
    LocationModel,
    ReissCoefficients,
    TestSetup,
    cauchy_location_model,
    cornish_fisher_critical,
    exponential_rate_model,
    median_cdf_edgeworth,
    median_cdf_exact,
    median_pdf_exact,
    normal_location_model,
    normal_mean_model,
    power_mean_test,
    power_median_test,
    reiss_coefficients,
    ump_critical_value,
)
from .mtsim import SimConfig, SimResult, convergence_sweep, simulate
from .numkernel import (
    IntegralValue,
    QuadratureConfig,
    QuadratureNonConvergence,
    gamma_upper_quantile,
    integrate,
    log_binomial,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)
from .priors import (
    Prior,
    builtin_prior,
    cauchy_prior,
    f_mode1_prior,
    gamma_mode1_prior,
    lambda_alt,
    lambda_null,
    make_prior,
    normal_prior,
    scale_prior,
    student_t_prior,
)
from .results import RatePair, RateResult

__version__ = "0.1.0"
