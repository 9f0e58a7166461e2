"""Ground-truth error rates by quadrature of power against the prior.

The joint probabilities

    A  = integral over the null of  power(theta) g(theta) dtheta
    At = integral over the alternative of  (1 - power(theta)) g(theta) dtheta

determine the rejection probability B = A + lambda_alt - At and the rates
delta = A / B and eps = At / (1 - B). Unbounded domains are truncated where
the product of a monotone power bound and the prior tail mass drops below a
tenth of the quadrature tolerance; fat-tailed priors get a logarithmic
change of variables on the far piece so the uniform-grid scheme stays
effective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from . import numkernel as nk
from .models import (
    ExpFamilyModel,
    LocationModel,
    ModelError,
    TestSetup,
    median_cdf_exact,
    ump_critical_value,
)
from .numkernel import IntegralValue, QuadratureConfig, QuadratureNonConvergence
from .priors import Prior, natural_lambda_alt
from .results import RatePair, RateResult


class DegenerateDenominator(ArithmeticError):
    """The conditioning event (rejection or acceptance) has no probability."""


@dataclass(frozen=True)
class JointProbabilities:
    """Joint null/alternative probabilities and the derived marginals.

    ``B_tilde`` is 1 - B by construction. ``A.value`` is bounded by the null
    mass and ``A_tilde.value`` by the alternative mass, up to quadrature
    error.
    """

    A: IntegralValue
    A_tilde: IntegralValue
    lambda_alt: float
    B: float
    B_tilde: float


# Width of the directly-gridded core around theta0; beyond it the integrand
# tail is handled through a log substitution.
_CORE_WIDTH = 8.0


def _make_power(model, setup: TestSetup) -> Tuple[Callable, int]:
    """Vectorized exact power function and the natural direction of the test."""
    n = setup.n
    if setup.statistic == "mean_ump":
        if not isinstance(model, ExpFamilyModel):
            raise ModelError("mean_ump requires an ExpFamilyModel")
        k = ump_critical_value(model, setup)
        mu0 = float(model.mu(np.asarray(setup.theta0, dtype=float)))
        sigma0 = float(model.sigma(np.asarray(setup.theta0, dtype=float)))
        cdf = model.mean_statistic_cdf
        rootn = math.sqrt(n)

        def power(th):
            th = np.asarray(th, dtype=float)
            mu = np.asarray(model.mu(th), dtype=float)
            sigma = np.asarray(model.sigma(th), dtype=float)
            threshold = (rootn * (mu0 - mu) + k * sigma0) / sigma
            return 1.0 - np.asarray(cdf(th, n, threshold), dtype=float)

        return power, model.natural_direction

    if not isinstance(model, LocationModel):
        raise ModelError("median requires a LocationModel")
    if setup.theta0 != 0.0:
        raise ModelError("the median test uses the location convention theta0 = 0")
    z = nk.upper_quantile_z(setup.alpha)
    scale = 2.0 * model.f0 * math.sqrt(n)

    def power(th):
        th = np.asarray(th, dtype=float)
        return 1.0 - np.asarray(median_cdf_exact(model, n, z - scale * th), dtype=float)

    return power, 1


def _support_interval(model, prior: Prior) -> Tuple[float, float]:
    if isinstance(model, ExpFamilyModel):
        lo = max(model.theta_lo, prior.support_lo)
        hi = min(model.theta_hi, prior.support_hi)
    else:
        lo, hi = prior.support
    if not lo < hi:
        raise ModelError("model parameter interval and prior support do not overlap")
    return lo, hi


def _find_cut(
    h: Callable[[float], float],
    theta0: float,
    away: float,
    limit: float,
    tol: float,
) -> float:
    """March away from theta0 until the monotone tail bound h drops below tol.

    ``away`` is -1 or +1 (the direction of the tail), ``limit`` the domain
    endpoint in that direction. Finite limits are open boundaries, so the
    returned cut stays strictly inside; the sliver left out is far below the
    tolerance the caller budgets for truncation. After the doubling march a
    short bisection pulls the cut back toward theta0 to keep grid panels
    where the integrand lives.
    """
    if math.isfinite(limit):
        smax = abs(limit - theta0) * (1.0 - 1e-9)
    else:
        smax = 1e13
    s = min(1e-3, smax)
    while h(theta0 + away * s) > tol:
        if s >= smax:
            return theta0 + away * smax
        s = min(2.0 * s, smax)
    lo_s = 0.0 if s <= 1e-3 else s / 2.0
    hi_s = s
    for _ in range(30):
        mid = 0.5 * (lo_s + hi_s)
        if h(theta0 + away * mid) > tol:
            lo_s = mid
        else:
            hi_s = mid
    return theta0 + away * hi_s


def _integrate_with_tail(
    f: Callable,
    near: float,
    far: float,
    cfg: QuadratureConfig,
) -> IntegralValue:
    """Integrate f between ``far`` and ``near`` where ``near`` anchors the core.

    The first _CORE_WIDTH of the interval next to ``near`` is gridded
    directly; any remainder toward ``far`` is mapped through theta =
    split -+ (e^v - 1), which compresses polynomially decaying tails.
    Non-convergent pieces propagate their best estimates.
    """
    away = -1.0 if far < near else 1.0
    span = abs(near - far)
    split = near + away * min(span, _CORE_WIDTH)
    pieces = []
    failed = False

    def run(fun, a, b):
        nonlocal failed
        try:
            pieces.append(nk.integrate(fun, a, b, cfg))
        except QuadratureNonConvergence as exc:
            failed = True
            pieces.append(exc.result)

    lo, hi = (split, near) if away < 0 else (near, split)
    run(f, lo, hi)
    if span > _CORE_WIDTH:
        vmax = math.log1p(span - _CORE_WIDTH)

        def mapped(v):
            v = np.asarray(v, dtype=float)
            ev = np.exp(v)
            theta = split + away * (ev - 1.0)
            return np.asarray(f(theta), dtype=float) * ev

        run(mapped, 0.0, vmax)
    value = float(sum(p.value for p in pieces))
    err = float(sum(p.error_bound for p in pieces))
    panels = int(sum(p.panels for p in pieces))
    result = IntegralValue(value, err, panels=panels, converged=not failed,
                           truncation_radius=abs(far - near))
    if failed:
        raise QuadratureNonConvergence(result)
    return result


def exact_joint(
    model,
    prior: Prior,
    setup: TestSetup,
    cfg: Optional[QuadratureConfig] = None,
    domain: str = "theta",
) -> JointProbabilities:
    """Joint probabilities P(null, reject) and P(alt, accept) by quadrature.

    ``domain`` selects integration in the parameter itself ("theta") or, for
    the mean statistic, in the locally rescaled coordinate
    x = sigma0 sqrt(n) (natural - natural0) - z_alpha ("transformed"); the two
    agree within their error bounds and the transformed route exists as an
    independent check.

    Quadrature non-convergence is propagated as
    :class:`~bfdr.numkernel.QuadratureNonConvergence` carrying the partial
    result.
    """
    cfg = cfg or nk.DEFAULT_QUADRATURE
    if domain not in ("theta", "transformed"):
        raise ModelError(f"unknown domain {domain!r}")
    power, direction = _make_power(model, setup)
    theta0 = float(setup.theta0)
    lo, hi = _support_interval(model, prior)
    if not (lo < theta0 < hi):
        raise ModelError(f"theta0={theta0} must be interior to ({lo}, {hi})")
    lam = natural_lambda_alt(prior, theta0, direction)
    cut_tol = cfg.abs_tol / 10.0

    cdf = prior.cdf

    def null_tail_bound(th: float) -> float:
        p = float(np.clip(power(np.asarray([th]))[0], 0.0, 1.0))
        if cdf is None:
            return p
        mass = float(cdf(th)) if direction == 1 else 1.0 - float(cdf(th))
        return p * mass

    def alt_tail_bound(th: float) -> float:
        p = 1.0 - float(np.clip(power(np.asarray([th]))[0], 0.0, 1.0))
        if cdf is None:
            return p
        mass = 1.0 - float(cdf(th)) if direction == 1 else float(cdf(th))
        return p * mass

    # Null region runs from theta0 away against the power direction; the
    # alternative runs with it.
    null_limit = lo if direction == 1 else hi
    alt_limit = hi if direction == 1 else lo
    null_cut = _find_cut(null_tail_bound, theta0, -direction, null_limit, cut_tol)
    alt_cut = _find_cut(alt_tail_bound, theta0, direction, alt_limit, cut_tol)

    g = prior.g

    def integrand_null(th):
        th = np.asarray(th, dtype=float)
        return np.asarray(power(th), dtype=float) * np.asarray(g(th), dtype=float)

    def integrand_alt(th):
        th = np.asarray(th, dtype=float)
        return (1.0 - np.asarray(power(th), dtype=float)) * np.asarray(g(th), dtype=float)

    if domain == "theta":
        A = _integrate_with_tail(integrand_null, theta0, null_cut, cfg)
        At = _integrate_with_tail(integrand_alt, theta0, alt_cut, cfg)
    else:
        if setup.statistic != "mean_ump":
            raise ModelError("the transformed domain applies to the mean statistic")
        n = setup.n
        sigma0 = float(model.sigma(np.asarray(theta0, dtype=float)))
        z = nk.upper_quantile_z(setup.alpha)
        scale = sigma0 * math.sqrt(n)

        def to_x(th: float) -> float:
            return scale * direction * (th - theta0) - z

        def from_x(x):
            return theta0 + direction * (np.asarray(x, dtype=float) + z) / scale

        def integrand_null_x(x):
            return integrand_null(from_x(x)) / scale

        def integrand_alt_x(x):
            return integrand_alt(from_x(x)) / scale

        A = _integrate_with_tail(integrand_null_x, -z, to_x(null_cut), cfg)
        At = _integrate_with_tail(integrand_alt_x, -z, to_x(alt_cut), cfg)

    A = A.with_extra_error(cut_tol)
    At = At.with_extra_error(cut_tol)
    B = A.value + lam - At.value
    return JointProbabilities(A=A, A_tilde=At, lambda_alt=lam, B=B, B_tilde=1.0 - B)


def exact_rates(joint: JointProbabilities) -> RatePair:
    """Rates delta = A/B and eps = At/(1-B) with propagated error bounds."""
    err_B = joint.A.error_bound + joint.A_tilde.error_bound
    if joint.B <= 0.0:
        raise DegenerateDenominator(
            f"rejection probability B={joint.B} is not positive"
        )
    if joint.B_tilde <= 0.0:
        raise DegenerateDenominator(
            f"acceptance probability 1-B={joint.B_tilde} is not positive"
        )
    delta = joint.A.value / joint.B
    eps = joint.A_tilde.value / joint.B_tilde
    delta_err = (joint.A.error_bound + abs(delta) * err_B) / joint.B
    eps_err = (joint.A_tilde.error_bound + abs(eps) * err_B) / joint.B_tilde
    return RatePair(
        fdr=RateResult(delta, "quadrature", delta_err),
        far=RateResult(eps, "quadrature", eps_err),
    )
