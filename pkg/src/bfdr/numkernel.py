"""Special functions and deterministic quadrature used by every other module.

All functions are pure and accept either scalars or numpy arrays where noted.
The quadrature is deliberately simple and fully deterministic: the
``riemann_avg`` scheme refines a uniform grid by panel doubling, taking the
average of the lower and upper Riemann sums (equivalently, the trapezoid
rule) until two successive refinements agree to the requested tolerance.
An adaptive Simpson scheme is available when the integrand has localized
structure on a wide interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special as _sp

SQRT_2PI = math.sqrt(2.0 * math.pi)

#: Largest |x| treated as a usable abscissa after an infinite-limit change of
#: variables; beyond it the mapped integrand is taken to be zero.
_TAN_MAP_CUTOFF = 1e15


class NumKernelError(Exception):
    """Base error for numerical-kernel failures."""


class DomainError(NumKernelError, ValueError):
    """An argument lies outside the documented domain."""


class QuadratureNonConvergence(NumKernelError):
    """Refinement budget exhausted before the tolerance was met.

    Carries the best available estimate in ``result`` so callers can decide
    whether to propagate it.
    """

    def __init__(self, result: "IntegralValue", message: str = ""):
        self.result = result
        super().__init__(
            message
            or f"quadrature did not converge: value={result.value!r} "
            f"error_bound={result.error_bound!r} panels={result.panels}"
        )


def std_normal_pdf(x):
    """Standard normal density exp(-x^2/2)/sqrt(2*pi); vectorized."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / SQRT_2PI
    return float(out) if out.ndim == 0 else out


def std_normal_cdf(x):
    """Standard normal CDF; vectorized, absolute error below 1e-14."""
    x = np.asarray(x, dtype=float)
    out = _sp.ndtr(x)
    return float(out) if out.ndim == 0 else out


def std_normal_quantile(p):
    """Inverse standard normal CDF for p in (0, 1)."""
    p_arr = np.asarray(p, dtype=float)
    if not np.all((p_arr > 0.0) & (p_arr < 1.0)):
        raise DomainError(f"quantile level must lie in (0, 1), got {p!r}")
    out = _sp.ndtri(p_arr)
    return float(out) if out.ndim == 0 else out


def upper_quantile_z(alpha: float) -> float:
    """z_alpha, the upper-alpha point of the standard normal distribution."""
    return std_normal_quantile(1.0 - float(alpha))


def gamma_upper_quantile(shape: float, rate: float, alpha: float) -> float:
    """Value q with P(Gamma(shape, rate) > q) = alpha.

    ``shape``/``rate`` use the density rate^shape x^(shape-1) e^(-rate x)/Γ(shape).
    """
    if not (shape > 0.0 and rate > 0.0):
        raise DomainError(f"shape and rate must be positive, got {shape}, {rate}")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return float(_sp.gammainccinv(shape, alpha)) / rate


def log_binomial(n: int, k: int) -> float:
    """log of the binomial coefficient C(n, k)."""
    if k < 0 or n < 0 or k > n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    if k == 0 or k == n:
        return 0.0
    return (
        math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)
    )


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerance and refinement budget for :func:`integrate`.

    ``max_refinements`` bounds the panel-doubling depth of ``riemann_avg``
    (2**max_refinements panels at most) and the recursion depth of the
    adaptive scheme.
    """

    abs_tol: float = 1e-8
    max_refinements: int = 20
    scheme: str = "riemann_avg"

    def __post_init__(self):
        if not self.abs_tol > 0.0:
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_refinements < 1:
            raise DomainError(
                f"max_refinements must be >= 1, got {self.max_refinements}"
            )
        if self.scheme not in ("riemann_avg", "adaptive"):
            raise DomainError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class IntegralValue:
    """A quadrature result with an a-posteriori error bound.

    ``error_bound`` is the half-gap between the last two refinements for
    ``riemann_avg`` (the spread of the bracketing Riemann sums at
    convergence), or the accumulated local estimate for ``adaptive``.
    ``truncation_radius`` records where an unbounded domain was cut, when a
    caller did so.
    """

    value: float
    error_bound: float
    panels: int = 0
    converged: bool = True
    truncation_radius: Optional[float] = None

    def __post_init__(self):
        if self.error_bound < 0.0:
            raise DomainError("error_bound must be nonnegative")

    def with_extra_error(self, extra: float, truncation_radius=None) -> "IntegralValue":
        return IntegralValue(
            self.value,
            self.error_bound + extra,
            self.panels,
            self.converged,
            truncation_radius if truncation_radius is not None else self.truncation_radius,
        )


DEFAULT_QUADRATURE = QuadratureConfig()


def _map_infinite(f: Callable, a: float, b: float):
    """Rewrite an integral with infinite endpoint(s) onto a finite interval.

    Uses the tangent change of variables; the mapped integrand is defined to
    vanish once |x| exceeds a cutoff, which is valid for integrands decaying
    faster than 1/x^2 and introduces an error the refinement estimate picks
    up otherwise.
    """
    a_inf = math.isinf(a)
    b_inf = math.isinf(b)

    if a_inf and b_inf:
        lo, hi = -0.5 * math.pi, 0.5 * math.pi

        def w(u):
            u = np.asarray(u, dtype=float)
            t = np.tan(u)
            ok = np.isfinite(t) & (np.abs(t) < _TAN_MAP_CUTOFF)
            out = np.zeros_like(u)
            if np.any(ok):
                ts = t[ok]
                out[ok] = np.asarray(f(ts), dtype=float) * (1.0 + ts * ts)
            return out

        return w, lo, hi

    if b_inf:
        lo, hi = 0.0, 0.5 * math.pi
        base = a

        def w(u):
            u = np.asarray(u, dtype=float)
            t = np.tan(u)
            ok = np.isfinite(t) & (np.abs(t) < _TAN_MAP_CUTOFF)
            out = np.zeros_like(u)
            if np.any(ok):
                ts = t[ok]
                out[ok] = np.asarray(f(base + ts), dtype=float) * (1.0 + ts * ts)
            return out

        return w, lo, hi

    # a infinite, b finite: integrate f(b - t), t in (0, inf), reversed.
    lo, hi = 0.0, 0.5 * math.pi
    base = b

    def w(u):
        u = np.asarray(u, dtype=float)
        t = np.tan(u)
        ok = np.isfinite(t) & (np.abs(t) < _TAN_MAP_CUTOFF)
        out = np.zeros_like(u)
        if np.any(ok):
            ts = t[ok]
            out[ok] = np.asarray(f(base - ts), dtype=float) * (1.0 + ts * ts)
        return out

    return w, lo, hi


def _riemann_avg(w, lo: float, hi: float, cfg: QuadratureConfig) -> IntegralValue:
    """Average of lower/upper Riemann sums on a doubling uniform grid.

    For piecewise-monotone integrands this average is the trapezoid value and
    the half-gap between the bracketing sums contracts with the grid; we stop
    when two successive refinements agree within ``abs_tol``.
    """
    span = hi - lo
    if span == 0.0:
        return IntegralValue(0.0, 0.0, panels=0)
    ends = np.asarray(w(np.array([lo, hi])), dtype=float)
    weight_sum = 0.5 * (ends[0] + ends[1])
    total = weight_sum * span
    prev = math.inf
    err = math.inf
    panels = 1
    min_levels = 4
    for level in range(1, cfg.max_refinements + 1):
        new = lo + span * (np.arange(2 ** (level - 1)) + 0.5) / 2 ** (level - 1)
        weight_sum += float(np.sum(np.asarray(w(new), dtype=float)))
        prev = total
        panels = 2**level
        total = weight_sum * span / panels
        err = abs(total - prev)
        if level >= min_levels and err <= cfg.abs_tol:
            return IntegralValue(total, err, panels=panels)
    raise QuadratureNonConvergence(
        IntegralValue(total, err, panels=panels, converged=False)
    )


def _adaptive(w, lo: float, hi: float, cfg: QuadratureConfig) -> IntegralValue:
    """Adaptive Simpson with the usual |S2-S1|/15 local error estimate.

    The interval is pre-split into a coarse fixed grid first so features
    narrower than the initial Simpson stencil cannot be skipped outright.
    """

    def simpson(a, b, fa, fm, fb):
        return (b - a) * (fa + 4.0 * fm + fb) / 6.0

    evals = [0]

    def ev(x):
        evals[0] += 1
        return float(w(np.array([x]))[0])

    failed = [False]

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = ev(lm), ev(rm)
        left = simpson(a, m, fa, flm, fm)
        right = simpson(m, b, fm, frm, fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol or depth >= cfg.max_refinements:
            if abs(delta) > 15.0 * tol:
                failed[0] = True
            return left + right + delta / 15.0, abs(delta) / 15.0
        lv, le = recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        rv, re = recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
        return lv + rv, le + re

    if hi == lo:
        return IntegralValue(0.0, 0.0, panels=0)
    presplit = 16
    edges = np.linspace(lo, hi, presplit + 1)
    fvals = [ev(e) for e in edges]
    value = 0.0
    err = 0.0
    for i in range(presplit):
        a, b = float(edges[i]), float(edges[i + 1])
        fa, fb = fvals[i], fvals[i + 1]
        fm = ev(0.5 * (a + b))
        whole = simpson(a, b, fa, fm, fb)
        v, e = recurse(a, b, fa, fm, fb, whole, cfg.abs_tol / presplit, 0)
        value += v
        err += e
    result = IntegralValue(value, err, panels=evals[0], converged=not failed[0])
    if failed[0]:
        raise QuadratureNonConvergence(result)
    return result


def integrate_split(
    f: Callable,
    a: float,
    b: float,
    anchor: float,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
    core_width: float = 8.0,
) -> IntegralValue:
    """Integrate over a possibly very wide finite interval containing ``anchor``.

    A core of +-``core_width`` around the anchor is gridded directly; the
    remaining tails are compressed through theta = edge +- (e^v - 1), which
    turns polynomial decay into exponential decay in v. Piece tolerances sum
    to ``cfg.abs_tol``.
    """
    if not a <= anchor <= b:
        raise DomainError(f"anchor {anchor} outside [{a}, {b}]")
    lo_core = max(a, anchor - core_width)
    hi_core = min(b, anchor + core_width)
    pieces = []
    failed = False
    sub_cfg = QuadratureConfig(cfg.abs_tol / 3.0, cfg.max_refinements, cfg.scheme)

    def run(fun, lo, hi):
        nonlocal failed
        if hi <= lo:
            return
        try:
            pieces.append(integrate(fun, lo, hi, sub_cfg))
        except QuadratureNonConvergence as exc:
            failed = True
            pieces.append(exc.result)

    run(f, lo_core, hi_core)
    if a < lo_core:

        def left_tail(v):
            v = np.asarray(v, dtype=float)
            ev = np.exp(v)
            return np.asarray(f(lo_core - (ev - 1.0)), dtype=float) * ev

        run(left_tail, 0.0, math.log1p(lo_core - a))
    if b > hi_core:

        def right_tail(v):
            v = np.asarray(v, dtype=float)
            ev = np.exp(v)
            return np.asarray(f(hi_core + (ev - 1.0)), dtype=float) * ev

        run(right_tail, 0.0, math.log1p(b - hi_core))
    value = float(sum(p.value for p in pieces))
    err = float(sum(p.error_bound for p in pieces))
    panels = int(sum(p.panels for p in pieces))
    result = IntegralValue(value, err, panels=panels, converged=not failed)
    if failed:
        raise QuadratureNonConvergence(result)
    return result


def integrate(
    f: Callable,
    a: float,
    b: float,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
) -> IntegralValue:
    """Integrate ``f`` over (a, b); endpoints may be +-inf.

    ``f`` must accept a numpy array of abscissas and return an array of the
    same shape. Raises :class:`QuadratureNonConvergence` (carrying the best
    estimate) when the refinement budget is exhausted.
    """
    a = float(a)
    b = float(b)
    if math.isnan(a) or math.isnan(b):
        raise DomainError("integration limits must not be NaN")
    if b < a:
        res = integrate(f, b, a, cfg)
        return IntegralValue(
            -res.value, res.error_bound, res.panels, res.converged, res.truncation_radius
        )
    if math.isinf(a) or math.isinf(b):
        w, lo, hi = _map_infinite(f, a, b)
    else:
        w, lo, hi = (lambda x: np.asarray(f(np.asarray(x, dtype=float)), dtype=float)), a, b
    if cfg.scheme == "adaptive":
        return _adaptive(w, lo, hi, cfg)
    return _riemann_avg(w, lo, hi, cfg)
