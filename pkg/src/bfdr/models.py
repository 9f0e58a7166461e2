"""Statistical models, their one-sided level-alpha tests, and power functions.

Two sampling regimes are covered:

* a continuous one-parameter exponential family tested with the standardized
  sample mean (the UMP test), and
* a location family tested with the sample median ``X_((floor(n/2)+1))``
  against the asymptotic critical value ``z_alpha / (2 f(0))``.

Exponential-family models are expressed in a user-facing parameter; when the
natural parameter is the negative of that (the exponential-rate family),
``natural_direction = -1`` records the flip and the power function is
decreasing rather than increasing in the user parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize as _opt
from scipy import special as _sp

from . import numkernel as nk


class ModelError(ValueError):
    """Invalid model construction or test setup."""


class ExactCdfUnavailable(ModelError):
    """The model has no exact mean-statistic CDF.

    Callers should fall back to :func:`cornish_fisher_critical` and the
    Edgeworth power route, flagging results as approximate.
    """


@dataclass(frozen=True)
class ExpFamilyModel:
    """One-parameter exponential family in a user-facing parameterization.

    ``mu``, ``sigma``, ``rho3``, ``rho4`` are the natural-parameter mean,
    standard deviation and standardized third/fourth cumulant ratios of one
    observation, written as vectorized functions of the user parameter.
    ``mean_statistic_cdf(theta, n, t)`` is the exact CDF of
    sqrt(n)(Xbar - mu(theta))/sigma(theta) when available.
    ``sample_from_uniform(theta, u)`` maps iid uniforms to observations.
    """

    name: str
    theta_lo: float
    theta_hi: float
    mu: Callable
    sigma: Callable
    rho3: Callable
    rho4: Callable
    mean_statistic_cdf: Optional[Callable] = None
    sample_from_uniform: Optional[Callable] = None
    natural_direction: int = 1

    def __post_init__(self):
        if not self.theta_lo < self.theta_hi:
            raise ModelError(f"empty parameter interval ({self.theta_lo}, {self.theta_hi})")
        if self.natural_direction not in (1, -1):
            raise ModelError("natural_direction must be +1 or -1")
        grid = self._interior_grid()
        sig = np.asarray(self.sigma(grid), dtype=float)
        if np.any(sig <= 0.0):
            raise ModelError(f"model {self.name!r}: sigma must be positive")
        mu = np.asarray(self.mu(grid), dtype=float)
        natural_order = mu if self.natural_direction == 1 else mu[::-1]
        if np.any(np.diff(natural_order) < -1e-12):
            raise ModelError(f"model {self.name!r}: mean not non-decreasing in the natural parameter")

    def _interior_grid(self) -> np.ndarray:
        lo = self.theta_lo if math.isfinite(self.theta_lo) else -8.0
        hi = self.theta_hi if math.isfinite(self.theta_hi) else 8.0
        pad = 1e-3 * (hi - lo)
        return np.linspace(lo + pad, hi - pad, 33)


@dataclass(frozen=True)
class LocationModel:
    """Location family f(x - theta) whose standard member has median 0."""

    name: str
    f0: float
    f0p: float
    f0pp: float
    pdf: Callable
    cdf: Callable
    ppf: Optional[Callable] = None

    def __post_init__(self):
        if not self.f0 > 0.0:
            raise ModelError(f"model {self.name!r}: f(0) must be positive")
        if abs(float(self.cdf(0.0)) - 0.5) > 1e-12:
            raise ModelError(f"model {self.name!r}: standard member must have median 0")

    def sample_from_uniform(self, theta, u):
        if self.ppf is None:
            raise ModelError(f"model {self.name!r} has no quantile function for sampling")
        return np.asarray(theta, dtype=float) + np.asarray(self.ppf(u), dtype=float)


@dataclass(frozen=True)
class TestSetup:
    """One-sided testing configuration: statistic, boundary point, level, n."""

    __test__ = False  # not a pytest collectible despite the name

    statistic: str
    theta0: float
    alpha: float
    n: int

    def __post_init__(self):
        if self.statistic not in ("mean_ump", "median"):
            raise ModelError(f"unknown statistic {self.statistic!r}")
        if not (0.0 < self.alpha < 1.0):
            raise ModelError(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.n) != self.n or self.n < 1:
            raise ModelError(f"n must be a positive integer, got {self.n}")


@dataclass(frozen=True)
class ReissCoefficients:
    """Polynomial coefficients of the two-term sample-median CDF expansion.

    The correction polynomials are R1(t) = f11 t^2 + f12 and
    R2(t) = f21 t^5 + f22 t^3 + f23 t; f12 and f23 depend on the parity of n.
    """

    f11: float
    f12: float
    f21: float
    f22: float
    f23: float
    parity: str

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ModelError(f"parity must be 'even' or 'odd', got {self.parity}")
        expected_f12 = -1.0 if self.parity == "even" else 0.0
        if self.f12 != expected_f12:
            raise ModelError(f"f12 must be {expected_f12} for {self.parity} n")

    def r1(self, t):
        t = np.asarray(t, dtype=float)
        return self.f11 * t * t + self.f12

    def r2(self, t):
        t = np.asarray(t, dtype=float)
        return ((self.f21 * t * t + self.f22) * t * t + self.f23) * t


# ---------------------------------------------------------------------------
# Built-in models
# ---------------------------------------------------------------------------


def normal_mean_model() -> ExpFamilyModel:
    """N(theta, 1): the pivot sqrt(n)(Xbar - theta) is exactly standard normal."""

    def _cdf(theta, n, t):
        return nk.std_normal_cdf(t)

    def _sample(theta, u):
        return np.asarray(theta, dtype=float) + _sp.ndtri(np.asarray(u, dtype=float))

    return ExpFamilyModel(
        name="normal-mean",
        theta_lo=-math.inf,
        theta_hi=math.inf,
        mu=lambda th: np.asarray(th, dtype=float),
        sigma=lambda th: np.ones_like(np.asarray(th, dtype=float)),
        rho3=lambda th: np.zeros_like(np.asarray(th, dtype=float)),
        rho4=lambda th: np.zeros_like(np.asarray(th, dtype=float)),
        mean_statistic_cdf=_cdf,
        sample_from_uniform=_sample,
        natural_direction=1,
    )


def exponential_rate_model() -> ExpFamilyModel:
    """Exp(theta) with rate theta > 0; natural parameter is -theta.

    The standardized mean pivot sqrt(n)(theta*Xbar - 1) has the fixed law of a
    standardized Gamma(n, n), so the exact mean-statistic CDF is free of theta.
    """

    def _cdf(theta, n, t):
        t = np.asarray(t, dtype=float)
        x = n + math.sqrt(n) * t
        return _sp.gammainc(n, np.clip(x, 0.0, None))

    def _sample(theta, u):
        u = np.asarray(u, dtype=float)
        return -np.log(u) / np.asarray(theta, dtype=float)

    def _ones(th):
        return np.full_like(np.asarray(th, dtype=float), 1.0, dtype=float)

    return ExpFamilyModel(
        name="exp-rate",
        theta_lo=0.0,
        theta_hi=math.inf,
        mu=lambda th: 1.0 / np.asarray(th, dtype=float),
        sigma=lambda th: 1.0 / np.asarray(th, dtype=float),
        rho3=lambda th: 2.0 * _ones(th),
        rho4=lambda th: 6.0 * _ones(th),
        mean_statistic_cdf=_cdf,
        sample_from_uniform=_sample,
        natural_direction=-1,
    )


def normal_location_model() -> LocationModel:
    return LocationModel(
        name="normal-location",
        f0=1.0 / nk.SQRT_2PI,
        f0p=0.0,
        f0pp=-1.0 / nk.SQRT_2PI,
        pdf=nk.std_normal_pdf,
        cdf=nk.std_normal_cdf,
        ppf=lambda u: _sp.ndtri(np.asarray(u, dtype=float)),
    )


def cauchy_location_model() -> LocationModel:
    def pdf(x):
        x = np.asarray(x, dtype=float)
        return 1.0 / (math.pi * (1.0 + x * x))

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return 0.5 + np.arctan(x) / math.pi

    return LocationModel(
        name="cauchy-location",
        f0=1.0 / math.pi,
        f0p=0.0,
        f0pp=-2.0 / math.pi,
        pdf=pdf,
        cdf=cdf,
        ppf=lambda u: np.tan(math.pi * (np.asarray(u, dtype=float) - 0.5)),
    )


# ---------------------------------------------------------------------------
# Mean-statistic (UMP) test
# ---------------------------------------------------------------------------


def ump_critical_value(model: ExpFamilyModel, setup: TestSetup) -> float:
    """Critical value k with P_theta0(sqrt(n)(Xbar - mu0)/sigma0 > k) = alpha.

    Solved on the model's exact mean-statistic CDF; tends to z_alpha as n
    grows. Raises :class:`ExactCdfUnavailable` when the model lacks the CDF.
    """
    if setup.statistic != "mean_ump":
        raise ModelError("ump_critical_value applies to the mean_ump statistic")
    if model.mean_statistic_cdf is None:
        raise ExactCdfUnavailable(
            f"model {model.name!r} has no exact mean-statistic CDF; "
            "use cornish_fisher_critical instead"
        )
    target = 1.0 - setup.alpha
    cdf = model.mean_statistic_cdf

    def shortfall(k):
        return float(cdf(setup.theta0, setup.n, k)) - target

    lo, hi = -1.0, 1.0
    while shortfall(lo) > 0.0:
        lo *= 2.0
        if lo < -1e6:
            raise ModelError("failed to bracket the critical value from below")
    while shortfall(hi) < 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise ModelError("failed to bracket the critical value from above")
    return float(_opt.brentq(shortfall, lo, hi, xtol=1e-13, rtol=8.9e-16))


def cornish_fisher_critical(rho30: float, rho40: float, alpha: float, n: int) -> float:
    """Two-correction quantile expansion of the UMP critical value."""
    z = nk.upper_quantile_z(alpha)
    term1 = (z * z - 1.0) * rho30 / (6.0 * math.sqrt(n))
    term2 = (
        (z**3 - 3.0 * z) * rho40 / 24.0 - (2.0 * z**3 - 5.0 * z) * rho30**2 / 36.0
    ) / n
    return z + term1 + term2


def power_mean_test(model: ExpFamilyModel, theta, setup: TestSetup):
    """Exact power of the level-alpha UMP mean test at theta; vectorized."""
    if setup.statistic != "mean_ump":
        raise ModelError("power_mean_test applies to the mean_ump statistic")
    if model.mean_statistic_cdf is None:
        raise ExactCdfUnavailable(
            f"model {model.name!r} has no exact mean-statistic CDF"
        )
    k = ump_critical_value(model, setup)
    theta = np.asarray(theta, dtype=float)
    n = setup.n
    mu0 = float(model.mu(np.asarray(setup.theta0, dtype=float)))
    sigma0 = float(model.sigma(np.asarray(setup.theta0, dtype=float)))
    mu = np.asarray(model.mu(theta), dtype=float)
    sigma = np.asarray(model.sigma(theta), dtype=float)
    threshold = (math.sqrt(n) * (mu0 - mu) + k * sigma0) / sigma
    out = 1.0 - np.asarray(model.mean_statistic_cdf(theta, n, threshold), dtype=float)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Median statistic
# ---------------------------------------------------------------------------


def median_order_index(n: int) -> int:
    """1-based order-statistic index of the sample median, floor(n/2) + 1."""
    return n // 2 + 1


def median_cdf_exact(model: LocationModel, n: int, t):
    """Exact CDF of 2 f(0) sqrt(n) (T_n - theta) at t; vectorized in t.

    Regularized incomplete-beta form of the order-statistic CDF of
    ``X_(floor(n/2)+1)``; free of theta by location invariance.
    """
    n = int(n)
    k = median_order_index(n)
    t = np.asarray(t, dtype=float)
    u = np.asarray(model.cdf(t / (2.0 * model.f0 * math.sqrt(n))), dtype=float)
    out = _sp.betainc(k, n - k + 1, np.clip(u, 0.0, 1.0))
    return float(out) if out.ndim == 0 else out


def median_pdf_exact(model: LocationModel, n: int, t):
    """Exact density of 2 f(0) sqrt(n) (T_n - theta) at t; vectorized in t."""
    n = int(n)
    k = median_order_index(n)
    t = np.asarray(t, dtype=float)
    scale = 2.0 * model.f0 * math.sqrt(n)
    u = t / scale
    F = np.asarray(model.cdf(u), dtype=float)
    F = np.clip(F, 0.0, 1.0)
    f = np.asarray(model.pdf(u), dtype=float)
    log_comb = math.log(n) + nk.log_binomial(n - 1, k - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logF = np.where(F > 0.0, np.log(np.where(F > 0.0, F, 1.0)), -np.inf)
        logS = np.where(F < 1.0, np.log1p(-np.where(F < 1.0, F, 0.0)), -np.inf)
    # k = 1 or k = n make the corresponding exponent 0 even at the boundary,
    # so drop the term entirely rather than form 0 * (-inf).
    if n == 1:
        expo = np.zeros_like(F)
    elif k == 1:
        expo = (n - k) * logS
    elif k == n:
        expo = (k - 1) * logF
    else:
        expo = (k - 1) * logF + (n - k) * logS
    dens = np.where(np.isfinite(expo), np.exp(log_comb + expo) * f / scale, 0.0)
    return float(dens) if dens.ndim == 0 else dens


def reiss_coefficients(
    model: LocationModel, n: int, f23_variant: str = "general"
) -> ReissCoefficients:
    """Correction-polynomial coefficients for the sample-median CDF at size n.

    ``f23_variant`` selects between the general formula
    1/4 - (1 - 2{n/2})^2 / 2 (default) and the worked-example variant
    1/4 - (1/2 - {n/2})^2; the two differ for even n.
    """
    n = int(n)
    frac = 0.0 if n % 2 == 0 else 0.5  # fractional part of n/2
    parity = "even" if n % 2 == 0 else "odd"
    f0, f0p, f0pp = model.f0, model.f0p, model.f0pp
    f11 = f0p / (4.0 * f0 * f0)
    f12 = -(1.0 - 2.0 * frac)
    f21 = -((f0p / (f0 * f0)) ** 2) / 32.0
    f22 = 0.25 + (0.5 - frac) * f0p / (2.0 * f0 * f0) + f0pp / (24.0 * f0**3)
    if f23_variant == "general":
        f23 = 0.25 - (1.0 - 2.0 * frac) ** 2 / 2.0
    elif f23_variant == "example":
        f23 = 0.25 - (0.5 - frac) ** 2
    else:
        raise ModelError(f"unknown f23_variant {f23_variant!r}")
    return ReissCoefficients(f11, f12, f21, f22, f23, parity)


def median_cdf_edgeworth(model: LocationModel, n: int, t, f23_variant: str = "general"):
    """Two-term expansion of the standardized sample-median CDF; vectorized."""
    n = int(n)
    rc = reiss_coefficients(model, n, f23_variant)
    t = np.asarray(t, dtype=float)
    phi = nk.std_normal_pdf(t)
    out = (
        nk.std_normal_cdf(t)
        + phi * rc.r1(t) / math.sqrt(n)
        + phi * rc.r2(t) / n
    )
    return float(out) if np.ndim(out) == 0 else out


def power_median_test(model: LocationModel, theta, setup: TestSetup, mode: str = "exact"):
    """Power of the median test (reject when sqrt(n) T_n > z_alpha/(2 f(0))).

    ``mode`` selects the exact incomplete-beta CDF or its two-term expansion.
    Vectorized over theta.
    """
    if setup.statistic != "median":
        raise ModelError("power_median_test applies to the median statistic")
    if setup.theta0 != 0.0:
        raise ModelError("the median test uses the location convention theta0 = 0")
    if mode not in ("exact", "edgeworth"):
        raise ModelError(f"unknown mode {mode!r}")
    n = setup.n
    z = nk.upper_quantile_z(setup.alpha)
    theta = np.asarray(theta, dtype=float)
    # P_theta(2 f0 sqrt(n)(T_n - theta) > z - 2 f0 sqrt(n) theta)
    tcrit = z - 2.0 * model.f0 * math.sqrt(n) * theta
    if mode == "exact":
        out = 1.0 - np.asarray(median_cdf_exact(model, n, tcrit), dtype=float)
    else:
        out = 1.0 - np.asarray(median_cdf_edgeworth(model, n, tcrit), dtype=float)
    return float(out) if out.ndim == 0 else out
