"""Third-order coefficients and series for the Bayesian error rates.

Writing A_n = P(null and reject) and At_n = P(alternative and accept), both
probabilities expand in powers of n^(-1/2):

    A_n  = a1/sqrt(n) + a2/n + a3/n^(3/2) + O(n^-2)
    At_n = at1/sqrt(n) + at2/n + at3/n^(3/2) + O(n^-2)

With lam = P(theta > theta0) the rejection probability is
B_n = A_n + lam - At_n, and formal division produces the rate series

    delta_n = c1/sqrt(n) + c2/n + c3/n^(3/2) + O(n^-2)      (P(null | reject))
    eps_n   = d1/sqrt(n) + d2/n + d3/n^(3/2) + O(n^-2)      (P(alt | accept))

with b_i = at_i - a_i and

    c1 = a1/lam                 d1 = at1/(1-lam)
    c2 = a1 b1/lam^2 + a2/lam   d2 = at2/(1-lam) - at1 b1/(1-lam)^2
    c3 = a3/lam + (a1 b2 + a2 b1)/lam^2 + a1 b1^2/lam^3
    d3 = at3/(1-lam) - (at2 b1 + at1 b2)/(1-lam)^2 + at1 b1^2/(1-lam)^3

The a/at coefficients come from integrating the test's power expansion
against the prior's Taylor expansion around theta0: for the exponential
family the inner expansion is Edgeworth-with-Cornish-Fisher (the g1/g2 and
f1/f2 polynomials below), for the median it is the two-term expansion of the
sample-median CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import numkernel as nk
from .models import (
    ExpFamilyModel,
    LocationModel,
    ModelError,
    reiss_coefficients,
)
from .priors import (
    Prior,
    PriorError,
    lambda_alt as _lambda_alt,
    natural_lambda_alt as _natural_lambda_alt,
)
from .results import RatePair, RateResult


@dataclass(frozen=True)
class CoefficientSet:
    """All series coefficients for one (model, prior, alpha, statistic) setup.

    ``lambda_alt`` is the alternative's prior mass in the *natural*
    parameterization of the test (for the exponential-rate family this is the
    mass of {rate < rate0}). b/c/d are derived from a/at and lambda_alt.
    """

    a1: float
    a2: float
    a3: float
    at1: float
    at2: float
    at3: float
    b1: float
    b2: float
    b3: float
    c1: float
    c2: float
    c3: float
    d1: float
    d2: float
    d3: float
    lambda_alt: float
    statistic: str
    parity: Optional[str] = None


def compose_coefficient_set(
    a: Tuple[float, float, float],
    at: Tuple[float, float, float],
    lam: float,
    statistic: str,
    parity: Optional[str] = None,
) -> CoefficientSet:
    """Build the b/c/d coefficients from the joint-probability coefficients."""
    if not (0.0 < lam < 1.0):
        raise PriorError(f"lambda_alt must lie strictly in (0, 1), got {lam}")
    a1, a2, a3 = a
    at1, at2, at3 = at
    b1, b2, b3 = at1 - a1, at2 - a2, at3 - a3
    lam2, lam3 = lam * lam, lam * lam * lam
    mu = 1.0 - lam
    mu2, mu3 = mu * mu, mu * mu * mu
    c1 = a1 / lam
    c2 = a1 * b1 / lam2 + a2 / lam
    c3 = a3 / lam + (a1 * b2 + a2 * b1) / lam2 + a1 * b1 * b1 / lam3
    d1 = at1 / mu
    d2 = at2 / mu - at1 * b1 / mu2
    d3 = at3 / mu - (at2 * b1 + at1 * b2) / mu2 + at1 * b1 * b1 / mu3
    return CoefficientSet(
        a1, a2, a3, at1, at2, at3, b1, b2, b3, c1, c2, c3, d1, d2, d3,
        lam, statistic, parity,
    )


# ---------------------------------------------------------------------------
# Inner expansion polynomials (exponential family)
# ---------------------------------------------------------------------------


def g1_poly(x, rho30: float, z: float):
    """Order-1/sqrt(n) power-expansion polynomial; vanishes when rho30 = 0."""
    x = np.asarray(x, dtype=float)
    out = rho30 * (x * x / 6.0 + z * x / 2.0 + z * z / 3.0)
    return float(out) if out.ndim == 0 else out


def g2_poly(x, rho30: float, rho40: float, z: float):
    """Order-1/n power-expansion polynomial.

    Assembled by composing the quantile expansion of the critical value with
    the two-term CDF expansion of the standardized mean; it vanishes at
    x = -z because the test has exact size at the boundary, so the local
    power there is alpha up to the neglected order.
    """
    x = np.asarray(x, dtype=float)
    r2 = rho30 * rho30
    c5 = -r2 / 72.0
    c4 = -z * r2 / 12.0
    c3 = rho40 / 24.0 - 13.0 * z * z * r2 / 72.0 - r2 / 72.0
    c2 = z * rho40 / 6.0 - z**3 * r2 / 6.0 - z * r2 / 12.0
    c1 = (
        (z * z / 4.0 - 1.0 / 24.0) * rho40
        - z**4 * r2 / 18.0
        - 13.0 * z * z * r2 / 72.0
        + r2 / 36.0
    )
    c0 = (z**3 / 8.0 - z / 24.0) * rho40 - (z**3 / 9.0 - z / 36.0) * r2
    out = ((((c5 * x + c4) * x + c3) * x + c2) * x + c1) * x + c0
    return float(out) if out.ndim == 0 else out


def f1_poly(x, rho30: float, z: float):
    """Order-1/sqrt(n) polynomial of the local critical-value expansion."""
    x = np.asarray(x, dtype=float)
    f11 = -z * rho30 / 2.0
    f10 = -(2.0 * z * z + 1.0) * rho30 / 6.0
    out = f11 * x + f10
    return float(out) if out.ndim == 0 else out


def f2_poly(x, rho30: float, rho40: float, z: float):
    """Order-1/n polynomial of the local critical-value expansion."""
    x = np.asarray(x, dtype=float)
    r2 = rho30 * rho30
    f23 = rho40 / 12.0 - r2 / 8.0
    f22 = 0.0
    f21 = (7.0 * z * z / 24.0 + 1.0 / 12.0) * r2 - z * z * rho40 / 4.0
    f20 = (z**3 + 2.0 * z) * r2 / 9.0 - (z**3 + z) * rho40 / 8.0
    out = ((f23 * x + f22) * x + f21) * x + f20
    return float(out) if out.ndim == 0 else out


def power_mean_edgeworth(rho30: float, rho40: float, alpha: float, n: int, x):
    """Two-term local expansion of the UMP test's power at the scaled point x.

    Approximates the power at theta = theta0 + (x + z)/(sigma0 sqrt(n)) by
    Phi(x) + phi(x) g1(x)/sqrt(n) + phi(x) g2(x)/n.
    """
    z = nk.upper_quantile_z(alpha)
    x = np.asarray(x, dtype=float)
    phi = nk.std_normal_pdf(x)
    out = (
        nk.std_normal_cdf(x)
        + phi * g1_poly(x, rho30, z) / math.sqrt(n)
        + phi * g2_poly(x, rho30, rho40, z) / n
    )
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Coefficient builders
# ---------------------------------------------------------------------------


def _natural_prior_view(
    model: ExpFamilyModel, prior: Prior, theta0: float
) -> Tuple[float, float, float, float]:
    """Prior density values and alternative mass in natural coordinates.

    For ``natural_direction = -1`` the natural parameter is the negative of
    the user parameter, so odd derivatives flip sign and the alternative
    {natural > natural0} is the *lower* tail {theta < theta0} of the
    user-facing prior.
    """
    th = np.asarray(theta0, dtype=float)
    g0 = float(prior.g(th))
    g1 = float(prior.g1(th))
    g2 = float(prior.g2(th))
    if model.natural_direction == -1:
        g1 = -g1
    lam = _natural_lambda_alt(prior, theta0, model.natural_direction)
    return g0, g1, g2, lam


def exp_family_coefficients(
    model: ExpFamilyModel, prior: Prior, theta0: float, alpha: float
) -> CoefficientSet:
    """Series coefficients for the UMP mean test in an exponential family."""
    if not (0.0 < alpha < 1.0):
        raise ModelError(f"alpha must lie in (0, 1), got {alpha}")
    th = np.asarray(theta0, dtype=float)
    sigma0 = float(model.sigma(th))
    if not sigma0 > 0.0:
        raise ModelError(f"sigma(theta0) must be positive, got {sigma0}")
    rho30 = float(model.rho3(th))
    rho40 = float(model.rho4(th))
    g0, g1, g2, lam = _natural_prior_view(model, prior, theta0)

    z = nk.upper_quantile_z(alpha)
    phi = nk.std_normal_pdf(z)
    z2, z3 = z * z, z**3
    r2 = rho30 * rho30

    a1 = (g0 / sigma0) * (phi - alpha * z)
    a2 = (rho30 * g0 / (6.0 * sigma0)) * (alpha + 2.0 * alpha * z2 - 2.0 * z * phi) - (
        g1 / (2.0 * sigma0**2)
    ) * (alpha * (z2 + 1.0) - z * phi)

    h11 = z2 + 2.0
    h12 = -(z3 + 3.0 * z)
    h21 = -(rho30 / 3.0) * (z2 + 1.0)
    h22 = (rho30 / 3.0) * (z3 + 2.0 * z)
    # phi(z)-weighted moments of g2_poly over the null side; the alpha-weighted
    # part h32 involves only the even g2 coefficients.
    h31 = r2 * (5.0 * z2 / 18.0 + 1.0 / 9.0) - rho40 * (z2 / 8.0 + 1.0 / 24.0)
    h32 = -5.0 * z3 * r2 / 18.0 - 11.0 * z * r2 / 36.0 + z3 * rho40 / 8.0 + z * rho40 / 8.0
    a3 = (
        (h11 * phi + alpha * h12) * g2 / (6.0 * sigma0**3)
        + (h21 * phi + alpha * h22) * g1 / sigma0**2
        + (h31 * phi + alpha * h32) * g0 / sigma0
    )

    beta = 1.0 - alpha
    at1 = (g0 / sigma0) * (phi + beta * z)
    at2 = (g1 / (2.0 * sigma0**2)) * (beta * (z2 + 1.0) + z * phi) - (
        rho30 * g0 / (6.0 * sigma0)
    ) * (beta * (1.0 + 2.0 * z2) + 2.0 * z * phi)
    at3 = (
        (h11 * phi - beta * h12) * g2 / (6.0 * sigma0**3)
        - (-h21 * phi + beta * h22) * g1 / sigma0**2
        - (-h31 * phi + beta * h32) * g0 / sigma0
    )

    return compose_coefficient_set(
        (a1, a2, a3), (at1, at2, at3), lam, statistic="mean_ump"
    )


def median_coefficients(
    model: LocationModel,
    prior: Prior,
    alpha: float,
    n: int,
    f23_variant: str = "general",
) -> CoefficientSet:
    """Series coefficients for the median test; n enters only through parity."""
    if not (0.0 < alpha < 1.0):
        raise ModelError(f"alpha must lie in (0, 1), got {alpha}")
    rc = reiss_coefficients(model, n, f23_variant)
    f0 = model.f0
    g0 = float(prior.g(np.asarray(0.0)))
    g1 = float(prior.g1(np.asarray(0.0)))
    g2 = float(prior.g2(np.asarray(0.0)))
    lam = _lambda_alt(prior, 0.0)

    z = nk.upper_quantile_z(alpha)
    phi = nk.std_normal_pdf(z)
    z2, z3, z4 = z * z, z**3, z**4
    beta = 1.0 - alpha
    two_f0 = 2.0 * f0

    a1 = (g0 / two_f0) * (phi - alpha * z)
    a2 = (g1 / (8.0 * f0 * f0)) * (z * phi - alpha * (z2 + 1.0)) - (g0 / two_f0) * (
        rc.f11 * (z * phi + alpha) + rc.f12 * alpha
    )
    r2_quint = rc.f21 * (z4 + 4.0 * z2 + 8.0) + rc.f22 * (z2 + 2.0) + rc.f23
    a3 = (
        (g2 / (48.0 * f0**3)) * ((z2 + 2.0) * phi - alpha * (z3 + 3.0 * z))
        - (g1 / (4.0 * f0 * f0))
        * (rc.f11 * (alpha * z - 2.0 * phi) + rc.f12 * (alpha * z - phi))
        - (g0 / two_f0) * r2_quint * phi
    )

    at1 = (g0 / two_f0) * (beta * z + phi)
    at2 = (g1 / (8.0 * f0 * f0)) * (beta * (z2 + 1.0) + z * phi) + (g0 / two_f0) * (
        rc.f11 * (beta - z * phi) + rc.f12 * beta
    )
    at3 = (
        (g2 / (48.0 * f0**3)) * ((z2 + 2.0) * phi + beta * (z3 + 3.0 * z))
        + (g1 / (4.0 * f0 * f0))
        * (rc.f11 * (beta * z + 2.0 * phi) + rc.f12 * (beta * z + phi))
        - (g0 / two_f0) * r2_quint * phi
    )

    return compose_coefficient_set(
        (a1, a2, a3), (at1, at2, at3), lam, statistic="median", parity=rc.parity
    )


def rate_series(coeffs: CoefficientSet, n: int, order: int = 3) -> RatePair:
    """Evaluate the truncated rate series at sample size n.

    Values are clamped to [0, 1] with an explicit flag; the reported
    error_estimate is the magnitude of the last retained term.
    """
    if order not in (1, 2, 3):
        raise ModelError(f"order must be 1, 2 or 3, got {order}")
    if n < 1:
        raise ModelError(f"n must be >= 1, got {n}")
    rn = math.sqrt(n)
    c_terms = [coeffs.c1 / rn, coeffs.c2 / n, coeffs.c3 / (n * rn)]
    d_terms = [coeffs.d1 / rn, coeffs.d2 / n, coeffs.d3 / (n * rn)]
    delta = sum(c_terms[:order])
    eps = sum(d_terms[:order])
    method = f"series{order}"

    def pack(value: float, last_term: float) -> RateResult:
        clamped = not (0.0 <= value <= 1.0)
        return RateResult(
            value=min(1.0, max(0.0, value)),
            method=method,
            error_estimate=abs(last_term),
            clamped=clamped,
        )

    return RatePair(
        fdr=pack(delta, c_terms[order - 1]), far=pack(eps, d_terms[order - 1])
    )
