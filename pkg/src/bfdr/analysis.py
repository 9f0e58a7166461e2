"""Derived studies: spiky/flat prior limits, honesty thresholds, statistic gaps.

The scale family g_tau(theta) = g(theta/tau)/tau concentrates at the null
boundary as tau -> 0 and flattens as tau -> infinity. In the spiky limit the
rates converge to ratios of the one-sided power limits at the boundary; in
the flat limit both rates vanish. The honesty threshold n_alpha(tau) is the
smallest sample size at which the post-experimental rate delta_n drops below
the pre-experimental level alpha under g_tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

from . import numkernel as nk
from .exact import exact_joint, exact_rates
from .expansions import (
    exp_family_coefficients,
    median_coefficients,
    rate_series,
)
from .models import ExpFamilyModel, LocationModel, ModelError, TestSetup
from .numkernel import QuadratureConfig
from .priors import Prior, scale_prior


class AnalysisError(ValueError):
    """Invalid analysis configuration."""


@dataclass(frozen=True)
class SpikyLimits:
    """Limits of the rates along the scale family.

    tau -> 0: ratios of one-sided power limits weighted by the prior masses;
    tau -> infinity: both rates vanish (for tests consistent in the scale
    direction).
    """

    delta_limit_tau0: float
    eps_limit_tau0: float
    delta_limit_tauinf: float = 0.0
    eps_limit_tauinf: float = 0.0


def spiky_limits(p_minus: float, p_plus: float, lambda_null: float) -> SpikyLimits:
    """Spiky-prior limits from the one-sided power limits at the boundary.

    ``p_minus``/``p_plus`` are the left/right limits of the power function at
    theta0; ``lambda_null`` the prior null mass. The false-discovery limit is
    lambda_null p_minus / (lambda_null p_minus + (1 - lambda_null) p_plus);
    the false-acceptance limit is its mirror image in 1 - power.
    """
    if not (0.0 <= p_minus <= 1.0 and 0.0 <= p_plus <= 1.0):
        raise AnalysisError("power limits must lie in [0, 1]")
    if not (0.0 < lambda_null < 1.0):
        raise AnalysisError(f"lambda_null must lie in (0, 1), got {lambda_null}")
    lam = lambda_null
    denom_d = lam * p_minus + (1.0 - lam) * p_plus
    if denom_d <= 0.0:
        raise AnalysisError("power limits at the boundary must not both vanish")
    denom_e = lam * (1.0 - p_minus) + (1.0 - lam) * (1.0 - p_plus)
    if denom_e <= 0.0:
        raise AnalysisError("complementary power limits must not both vanish")
    return SpikyLimits(
        delta_limit_tau0=lam * p_minus / denom_d,
        eps_limit_tau0=(1.0 - lam) * (1.0 - p_plus) / denom_e,
    )


@dataclass(frozen=True)
class SpikyRow:
    tau: float
    fdr: float
    far: float


def empirical_spiky_check(
    model,
    base_prior: Prior,
    setup: TestSetup,
    tau_grid: Sequence[float],
    cfg: Optional[QuadratureConfig] = None,
) -> List[SpikyRow]:
    """Exact rates under g_tau across a grid of scales."""
    if not len(tau_grid):
        raise AnalysisError("tau_grid must be non-empty")
    rows = []
    for tau in tau_grid:
        rates = exact_rates(exact_joint(model, scale_prior(base_prior, float(tau)), setup, cfg))
        rows.append(SpikyRow(tau=float(tau), fdr=rates.fdr.value, far=rates.far.value))
    return rows


def n_alpha(
    model,
    base_prior: Prior,
    tau: float,
    alpha: float,
    method: str = "exact",
    n_max: int = 100,
    theta0: float = 0.0,
    cfg: Optional[QuadratureConfig] = None,
) -> Optional[int]:
    """Smallest n in [1, n_max] with delta_n <= alpha under g_tau, else None.

    The scan is linear in n since delta_n need not be monotone. ``method``
    selects exact quadrature (authoritative) or the third-order series
    (fast preview; parity-aware for the median statistic).
    """
    if n_max < 1:
        raise AnalysisError(f"n_max must be >= 1, got {n_max}")
    if method not in ("exact", "series3"):
        raise AnalysisError(f"unknown method {method!r}")
    prior = scale_prior(base_prior, tau)
    if isinstance(model, ExpFamilyModel):
        statistic = "mean_ump"
    elif isinstance(model, LocationModel):
        statistic = "median"
        theta0 = 0.0
    else:
        raise ModelError(f"unsupported model type {type(model).__name__}")

    if method == "series3":
        if statistic == "mean_ump":
            coeffs = exp_family_coefficients(model, prior, theta0, alpha)
            per_parity = {0: coeffs, 1: coeffs}
        else:
            per_parity = {
                0: median_coefficients(model, prior, alpha, 2),
                1: median_coefficients(model, prior, alpha, 1),
            }
        for n in range(1, n_max + 1):
            if rate_series(per_parity[n % 2], n, 3).fdr.value <= alpha:
                return n
        return None

    for n in range(1, n_max + 1):
        setup = TestSetup(statistic, theta0, alpha, n)
        rates = exact_rates(exact_joint(model, prior, setup, cfg))
        if rates.fdr.value <= alpha:
            return n
    return None


@dataclass(frozen=True)
class StatisticGap:
    """First-order gap and second-order lower bound between median and mean.

    For the normal model with a symmetric prior the median test's c1 exceeds
    the mean test's by g(0) (phi(z) - alpha z) (sqrt(2 pi) - 2), and the c2
    difference is bounded below by g(0)^2 z (phi(z) - alpha z) (2 pi - 4);
    both are positive for alpha < 1/2.
    """

    c1_gap: float
    c2_gap_lower: float


def statistic_gap(g0: float, alpha: float) -> StatisticGap:
    """Closed-form mean-vs-median coefficient gaps for prior density g0 at 0."""
    if not g0 > 0.0:
        raise AnalysisError(f"g0 must be positive, got {g0}")
    if not (0.0 < alpha < 1.0):
        raise AnalysisError(f"alpha must lie in (0, 1), got {alpha}")
    z = nk.upper_quantile_z(alpha)
    core = nk.std_normal_pdf(z) - alpha * z
    return StatisticGap(
        c1_gap=g0 * core * (math.sqrt(2.0 * math.pi) - 2.0),
        c2_gap_lower=g0 * g0 * z * core * (2.0 * math.pi - 4.0),
    )
