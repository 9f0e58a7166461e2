"""Result containers shared by the expansion, quadrature, and simulation routes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class RateResult:
    """A false-discovery or false-acceptance rate value tagged by method.

    ``method`` identifies the route ("series1".."series3", "quadrature",
    "simulation"); ``error_estimate`` is a propagated bound for quadrature, a
    standard error for simulation, and the magnitude of the last retained
    series term (a heuristic scale, not a bound) for expansions. ``clamped``
    marks series values pulled back into [0, 1].
    """

    value: float
    method: str
    error_estimate: Optional[float] = None
    clamped: bool = False


@dataclass(frozen=True)
class RatePair:
    """False-discovery and false-acceptance rates from one method."""

    fdr: RateResult
    far: RateResult
