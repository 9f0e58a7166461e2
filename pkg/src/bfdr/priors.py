"""Proper prior densities with two derivatives, tail masses, and scaling.

A :class:`Prior` bundles a density ``g`` with its first two derivatives, its
support, and (when available in closed form) its CDF and quantile function.
The CDF drives mass-aware domain truncation in the quadrature layer and the
quantile function drives inverse-CDF sampling in the simulator.

Built-in families: centered normal and Student-t/Cauchy scale families for
location problems, and Gamma/F priors with mode pinned at 1 for the
exponential-rate problem. The rate-vs-natural-parameter sign flip for the
latter is *not* performed here; the expansion layer owns it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import special as _sp
from scipy import stats as _stats

from . import numkernel as nk


class PriorError(ValueError):
    """Invalid prior specification or a failed construction-time check."""


@dataclass(frozen=True)
class Prior:
    """Density g with derivatives g', g'' and optional CDF/quantile.

    All callables are vectorized over numpy arrays. ``support`` is an open
    interval; the density is zero outside it.
    """

    name: str
    g: Callable
    g1: Callable
    g2: Callable
    support: Tuple[float, float]
    cdf: Optional[Callable] = None
    ppf: Optional[Callable] = None

    @property
    def support_lo(self) -> float:
        return self.support[0]

    @property
    def support_hi(self) -> float:
        return self.support[1]

    def tail_bounds(self, mass: float) -> Tuple[float, float]:
        """Interval (L, U) with at most ``mass`` prior mass outside each end.

        Requires a CDF; used to truncate unbounded integration domains.
        """
        if self.cdf is None:
            raise PriorError(f"prior {self.name!r} has no CDF for tail bounds")
        lo, hi = self.support
        L = lo if math.isfinite(lo) else _invert_monotone(self.cdf, mass, lo, hi)
        U = (
            hi
            if math.isfinite(hi)
            else _invert_monotone(self.cdf, 1.0 - mass, lo, hi)
        )
        return L, U


def _invert_monotone(cdf: Callable, target: float, lo: float, hi: float) -> float:
    """Bisection solve of cdf(x) = target over (lo, hi), endpoints may be inf."""
    # Expand a finite bracket first.
    left = lo if math.isfinite(lo) else -1.0
    right = hi if math.isfinite(hi) else 1.0
    if not math.isfinite(lo):
        while float(cdf(left)) > target:
            left *= 4.0
            if left < -1e300:
                return -1e300
    if not math.isfinite(hi):
        while float(cdf(right)) < target:
            right *= 4.0
            if right > 1e300:
                return 1e300
    if math.isfinite(lo):
        left = max(left, lo)
    if math.isfinite(hi):
        right = min(right, hi)
    for _ in range(200):
        mid = 0.5 * (left + right)
        if float(cdf(mid)) < target:
            left = mid
        else:
            right = mid
        if right - left <= 1e-12 * max(1.0, abs(left), abs(right)):
            break
    return 0.5 * (left + right)


def _validation_grid(prior: Prior) -> np.ndarray:
    lo, hi = prior.support
    if prior.cdf is not None:
        L, U = prior.tail_bounds(0.02)
    else:
        L = lo if math.isfinite(lo) else -8.0
        U = hi if math.isfinite(hi) else 8.0
    pad = 1e-3 * (U - L)
    return np.linspace(L + pad, U - pad, 41)


def validate_prior(prior: Prior, norm_tol: float = 1e-6, deriv_tol: float = 1e-5):
    """Construction-time checks: unit mass and derivative consistency.

    Raises :class:`PriorError` on failure. Derivatives are compared against
    central finite differences of ``g`` on a support-spanning grid.
    """
    lo, hi = prior.support
    if not lo < hi:
        raise PriorError(f"empty support {prior.support!r}")
    if prior.cdf is not None:
        # Truncate where the CDF puts negligible mass; this simultaneously
        # checks that g integrates to 1 and that g matches its own CDF.
        cut = norm_tol / 10.0
        L, U = prior.tail_bounds(cut)
        anchor = _invert_monotone(prior.cdf, 0.5, lo, hi)
        res = nk.integrate_split(prior.g, L, U, anchor, nk.QuadratureConfig(abs_tol=cut))
        total = res.value + float(prior.cdf(L)) + (1.0 - float(prior.cdf(U)))
    else:
        res = nk.integrate(prior.g, lo, hi, nk.QuadratureConfig(abs_tol=norm_tol / 10.0))
        total = res.value
    if abs(total - 1.0) > norm_tol + res.error_bound:
        raise PriorError(f"prior {prior.name!r} mass {total:.8f} != 1")
    grid = _validation_grid(prior)
    g = prior.g
    h1 = 1e-6 * (1.0 + np.abs(grid))
    fd1 = (np.asarray(g(grid + h1)) - np.asarray(g(grid - h1))) / (2.0 * h1)
    if np.max(np.abs(fd1 - np.asarray(prior.g1(grid)))) > deriv_tol:
        raise PriorError(f"prior {prior.name!r}: g1 disagrees with finite differences")
    h2 = 1e-4 * (1.0 + np.abs(grid))
    fd2 = (
        np.asarray(g(grid + h2)) - 2.0 * np.asarray(g(grid)) + np.asarray(g(grid - h2))
    ) / (h2 * h2)
    if np.max(np.abs(fd2 - np.asarray(prior.g2(grid)))) > deriv_tol * 10.0:
        raise PriorError(f"prior {prior.name!r}: g2 disagrees with finite differences")


def make_prior(
    g: Callable,
    g1: Callable,
    g2: Callable,
    support: Tuple[float, float],
    cdf: Optional[Callable] = None,
    ppf: Optional[Callable] = None,
    name: str = "custom",
    validate: bool = True,
) -> Prior:
    """Assemble a prior from callables; set ``validate=False`` to skip checks."""
    prior = Prior(name, g, g1, g2, (float(support[0]), float(support[1])), cdf, ppf)
    if validate:
        validate_prior(prior)
    return prior


def lambda_alt(prior: Prior, theta0: float) -> float:
    """Prior mass of the alternative {theta > theta0}.

    Uses the closed-form CDF when present, quadrature otherwise. Degenerate
    masses (0 or 1) are rejected since the rate expansions divide by both
    tails.
    """
    lo, hi = prior.support
    if not (lo <= theta0 <= hi):
        raise PriorError(f"theta0={theta0} outside support closure {prior.support}")
    if theta0 <= lo:
        lam = 1.0
    elif theta0 >= hi:
        lam = 0.0
    elif prior.cdf is not None:
        lam = 1.0 - float(prior.cdf(theta0))
    else:
        res = nk.integrate(prior.g, lo, theta0, nk.QuadratureConfig(abs_tol=1e-10))
        lam = 1.0 - res.value
    if not (0.0 < lam < 1.0):
        raise PriorError(
            f"degenerate alternative mass {lam} at theta0={theta0}; "
            "the null and alternative both need positive prior mass"
        )
    return lam


def lambda_null(prior: Prior, theta0: float) -> float:
    """Prior mass of the null {theta <= theta0}."""
    return 1.0 - lambda_alt(prior, theta0)


def natural_lambda_alt(prior: Prior, theta0: float, direction: int) -> float:
    """Alternative mass in the test's natural direction.

    ``direction = +1`` tests H1: theta > theta0 on the user scale;
    ``direction = -1`` (a negated natural parameter) flips the alternative to
    {theta < theta0}.
    """
    lam = lambda_alt(prior, theta0)
    return lam if direction == 1 else 1.0 - lam


def scale_prior(base: Prior, tau: float) -> Prior:
    """Scale family g_tau(theta) = g(theta/tau)/tau with chain-rule derivatives."""
    if not tau > 0.0:
        raise PriorError(f"tau must be positive, got {tau}")
    tau = float(tau)
    lo, hi = base.support
    g, g1, g2 = base.g, base.g1, base.g2
    cdf, ppf = base.cdf, base.ppf
    new = Prior(
        name=f"{base.name}*tau={tau:g}",
        g=lambda th: g(np.asarray(th, dtype=float) / tau) / tau,
        g1=lambda th: g1(np.asarray(th, dtype=float) / tau) / tau**2,
        g2=lambda th: g2(np.asarray(th, dtype=float) / tau) / tau**3,
        support=(lo * tau if math.isfinite(lo) else lo, hi * tau if math.isfinite(hi) else hi),
        cdf=(None if cdf is None else (lambda th: cdf(np.asarray(th, dtype=float) / tau))),
        ppf=(None if ppf is None else (lambda u: tau * np.asarray(ppf(u), dtype=float))),
    )
    return new


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------


def normal_prior(tau: float = 1.0) -> Prior:
    """theta ~ N(0, tau^2)."""
    if not tau > 0.0:
        raise PriorError(f"tau must be positive, got {tau}")
    tau = float(tau)

    def g(th):
        th = np.asarray(th, dtype=float)
        return np.exp(-0.5 * (th / tau) ** 2) / (nk.SQRT_2PI * tau)

    def g1(th):
        th = np.asarray(th, dtype=float)
        return -(th / tau**2) * g(th)

    def g2(th):
        th = np.asarray(th, dtype=float)
        return ((th / tau**2) ** 2 - 1.0 / tau**2) * g(th)

    return Prior(
        name=f"normal:{tau:g}",
        g=g,
        g1=g1,
        g2=g2,
        support=(-math.inf, math.inf),
        cdf=lambda th: _sp.ndtr(np.asarray(th, dtype=float) / tau),
        ppf=lambda u: tau * _sp.ndtri(np.asarray(u, dtype=float)),
    )


def student_t_prior(m: float, tau: float = 1.0) -> Prior:
    """theta/tau ~ t_m; m = 1 recovers the Cauchy prior."""
    if not (m > 0.0 and tau > 0.0):
        raise PriorError(f"need m > 0 and tau > 0, got m={m}, tau={tau}")
    m = float(m)
    tau = float(tau)
    c = math.exp(math.lgamma((m + 1.0) / 2.0) - math.lgamma(m / 2.0)) / math.sqrt(
        m * math.pi
    )

    def h(y):  # standard t_m density
        y = np.asarray(y, dtype=float)
        return c * (1.0 + y * y / m) ** (-(m + 1.0) / 2.0)

    def h1(y):
        y = np.asarray(y, dtype=float)
        return -c * (m + 1.0) * (y / m) * (1.0 + y * y / m) ** (-(m + 3.0) / 2.0)

    def h2(y):
        y = np.asarray(y, dtype=float)
        q = 1.0 + y * y / m
        return (
            -c
            * (m + 1.0)
            / m
            * (q ** (-(m + 3.0) / 2.0) - (m + 3.0) * (y * y / m) * q ** (-(m + 5.0) / 2.0))
        )

    return Prior(
        name=f"t:{m:g}:{tau:g}",
        g=lambda th: h(np.asarray(th, dtype=float) / tau) / tau,
        g1=lambda th: h1(np.asarray(th, dtype=float) / tau) / tau**2,
        g2=lambda th: h2(np.asarray(th, dtype=float) / tau) / tau**3,
        support=(-math.inf, math.inf),
        cdf=lambda th: _stats.t.cdf(np.asarray(th, dtype=float) / tau, df=m),
        ppf=lambda u: tau * _stats.t.ppf(np.asarray(u, dtype=float), df=m),
    )


def cauchy_prior(tau: float = 1.0) -> Prior:
    """Cauchy scale-tau prior; closed forms rather than t_1 special-casing."""
    if not tau > 0.0:
        raise PriorError(f"tau must be positive, got {tau}")
    tau = float(tau)

    def g(th):
        th = np.asarray(th, dtype=float)
        return tau / (math.pi * (tau * tau + th * th))

    def g1(th):
        th = np.asarray(th, dtype=float)
        return -2.0 * tau * th / (math.pi * (tau * tau + th * th) ** 2)

    def g2(th):
        th = np.asarray(th, dtype=float)
        q = tau * tau + th * th
        return (2.0 * tau / math.pi) * (4.0 * th * th / q**3 - 1.0 / q**2)

    return Prior(
        name=f"cauchy:{tau:g}",
        g=g,
        g1=g1,
        g2=g2,
        support=(-math.inf, math.inf),
        cdf=lambda th: 0.5 + np.arctan(np.asarray(th, dtype=float) / tau) / math.pi,
        ppf=lambda u: tau * np.tan(math.pi * (np.asarray(u, dtype=float) - 0.5)),
    )


def gamma_mode1_prior(r: float) -> Prior:
    """Gamma prior with shape r and mode pinned at 1 (rate s = r - 1, r > 1).

    Expressed in the data model's rate parameterization on (0, inf).
    """
    if not r > 1.0:
        raise PriorError(f"gamma-mode1 needs r > 1, got {r}")
    r = float(r)
    s = r - 1.0
    log_norm = r * math.log(s) - math.lgamma(r)

    def g(th):
        th = np.asarray(th, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        out = np.zeros_like(th)
        pos = th > 0.0
        out[pos] = np.exp(log_norm + (r - 1.0) * np.log(th[pos]) - s * th[pos])
        return float(out[0]) if scalar else out

    def g1(th):
        th = np.asarray(th, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        gv = np.asarray(g(th), dtype=float)
        out = np.zeros_like(th)
        pos = th > 0.0
        out[pos] = gv[pos] * ((r - 1.0) / th[pos] - s)
        return float(out[0]) if scalar else out

    def g2(th):
        th = np.asarray(th, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        gv = np.asarray(g(th), dtype=float)
        out = np.zeros_like(th)
        pos = th > 0.0
        tp = th[pos]
        out[pos] = gv[pos] * (((r - 1.0) / tp - s) ** 2 - (r - 1.0) / tp**2)
        return float(out[0]) if scalar else out

    return Prior(
        name=f"gamma-mode1:{r:g}",
        g=g,
        g1=g1,
        g2=g2,
        support=(0.0, math.inf),
        cdf=lambda th: _sp.gammainc(r, s * np.clip(np.asarray(th, dtype=float), 0.0, None)),
        ppf=lambda u: _sp.gammaincinv(r, np.asarray(u, dtype=float)) / s,
    )


def f_mode1_prior(r: float, s: float) -> Prior:
    """theta/tau ~ F(2r, 2s) with tau chosen so the prior mode sits at 1.

    Requires r > 1 (so the F density has an interior mode); tau is then
    r(s+1)/[s(r-1)].
    """
    if not (r > 1.0 and s > 0.0):
        raise PriorError(f"f-mode1 needs r > 1 and s > 0, got r={r}, s={s}")
    r = float(r)
    s = float(s)
    tau = r * (s + 1.0) / (s * (r - 1.0))
    log_norm = (
        math.lgamma(r + s) - math.lgamma(r) - math.lgamma(s) + r * (math.log(r) - math.log(s * tau))
    )

    def g(th):
        th = np.asarray(th, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        out = np.zeros_like(th)
        pos = th > 0.0
        u = r * th[pos] / (s * tau)
        out[pos] = np.exp(
            log_norm + (r - 1.0) * np.log(th[pos]) - (r + s) * np.log1p(u)
        )
        return float(out[0]) if scalar else out

    def _logderiv(th):
        # d/dth log g = (r-1)/th - (r+s) * (r/(s tau)) / (1 + r th/(s tau))
        b = r / (s * tau)
        return (r - 1.0) / th - (r + s) * b / (1.0 + b * th)

    def g1(th):
        th = np.asarray(th, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        gv = np.asarray(g(th), dtype=float)
        out = np.zeros_like(th)
        pos = th > 0.0
        out[pos] = gv[pos] * _logderiv(th[pos])
        return float(out[0]) if scalar else out

    def g2(th):
        th = np.asarray(th, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        gv = np.asarray(g(th), dtype=float)
        out = np.zeros_like(th)
        pos = th > 0.0
        b = r / (s * tau)
        tp = th[pos]
        ld = _logderiv(tp)
        ld1 = -(r - 1.0) / tp**2 + (r + s) * b * b / (1.0 + b * tp) ** 2
        out[pos] = gv[pos] * (ld * ld + ld1)
        return float(out[0]) if scalar else out

    return Prior(
        name=f"f-mode1:{r:g}:{s:g}",
        g=g,
        g1=g1,
        g2=g2,
        support=(0.0, math.inf),
        cdf=lambda th: _stats.f.cdf(np.asarray(th, dtype=float) / tau, 2.0 * r, 2.0 * s),
        ppf=lambda u: tau * _stats.f.ppf(np.asarray(u, dtype=float), 2.0 * r, 2.0 * s),
    )


_BUILTIN_FACTORIES = {
    "normal": (normal_prior, 1),
    "t": (student_t_prior, 2),
    "cauchy": (cauchy_prior, 1),
    "gamma-mode1": (gamma_mode1_prior, 1),
    "f-mode1": (f_mode1_prior, 2),
}


def builtin_prior(kind: str, *params: float) -> Prior:
    """Construct a built-in prior by kind name and positional parameters."""
    if kind not in _BUILTIN_FACTORIES:
        raise PriorError(
            f"unknown prior kind {kind!r}; known: {sorted(_BUILTIN_FACTORIES)}"
        )
    factory, nargs = _BUILTIN_FACTORIES[kind]
    if len(params) != nargs:
        raise PriorError(f"prior kind {kind!r} takes {nargs} parameter(s), got {len(params)}")
    return factory(*params)


def parse_prior_spec(spec: str) -> Prior:
    """Parse compact prior specs like ``normal:1``, ``t:3:2``, ``gamma-mode1:2``."""
    parts = spec.split(":")
    kind = parts[0]
    try:
        params = tuple(float(p) for p in parts[1:])
    except ValueError as exc:
        raise PriorError(f"bad numeric parameter in prior spec {spec!r}") from exc
    return builtin_prior(kind, *params)
