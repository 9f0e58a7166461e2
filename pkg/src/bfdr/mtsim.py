"""Monte-Carlo simulator of m simultaneous experiments.

Each experiment i of replication r draws its parameter from the prior and an
iid sample from the model, applies the level-alpha test, and contributes to
the groupwise tallies

    V = #{rejections with a true null}      R = #{rejections}
    W = #{acceptances with a true alternative}

The replication-level false discovery proportion is V/(R v 1); its mean over
replications estimates the groupwise FDR, which converges to the Bayesian
rate delta_n as m grows. The pooled ratios sum(V)/sum(R) and
sum(W)/sum(m - R) estimate delta_n and eps_n directly.

Randomness is counter-based: every uniform variate is a pure function of
(seed, replication, experiment, draw index) through a vectorized
Philox-2x64-10 block cipher, so partitioning experiments across workers can
never change any value and equal seeds reproduce results bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import numkernel as nk
from .models import (
    ExpFamilyModel,
    LocationModel,
    ModelError,
    TestSetup,
    median_order_index,
    ump_critical_value,
)
from .priors import Prior, PriorError

_PHILOX_MULT = np.uint64(0xD2B74407B1CE6E93)
_PHILOX_WEYL = np.uint64(0x9E3779B97F4A7C15)
_KEY_STRIDE = np.uint64(0xC2B2AE3D27D4EB4F)
_LO32 = np.uint64(0xFFFFFFFF)
_ROUNDS = 10

# Experiments are processed in fixed-size chunks; the chunk size is a stream
# constant, not a tuning knob, so worker counts cannot influence results.
_CHUNK = 8192


def _mulhilo(a: np.ndarray, b: np.uint64) -> Tuple[np.ndarray, np.ndarray]:
    """Full 64x64 -> 128 bit product via 32-bit limbs (numpy has no u128)."""
    a_hi = a >> np.uint64(32)
    a_lo = a & _LO32
    b_hi = b >> np.uint64(32)
    b_lo = b & _LO32
    hh = a_hi * b_hi
    hl = a_hi * b_lo
    lh = a_lo * b_hi
    ll = a_lo * b_lo
    mid = (ll >> np.uint64(32)) + (hl & _LO32) + (lh & _LO32)
    hi = hh + (hl >> np.uint64(32)) + (lh >> np.uint64(32)) + (mid >> np.uint64(32))
    lo = a * b
    return hi, lo


def _philox2x64(c0: np.ndarray, c1: np.ndarray, key: np.uint64) -> Tuple[np.ndarray, np.ndarray]:
    """Ten rounds of the Philox-2x64 bijection on counter words (c0, c1)."""
    x0 = c0.astype(np.uint64, copy=True)
    x1 = c1.astype(np.uint64, copy=True)
    k = key
    with np.errstate(over="ignore"):
        for _ in range(_ROUNDS):
            hi, lo = _mulhilo(x0, _PHILOX_MULT)
            x0 = hi ^ k ^ x1
            x1 = lo
            k = k + _PHILOX_WEYL
    return x0, x1


def _splitmix64(x: int) -> np.uint64:
    x = np.uint64(x & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        z = x
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def _stream_key(seed: int, replication: int) -> np.uint64:
    with np.errstate(over="ignore"):
        return _splitmix64(seed) + np.uint64(replication) * _KEY_STRIDE


def uniform_block(
    seed: int, replication: int, start: int, stop: int, cols: int
) -> np.ndarray:
    """Uniforms in (0, 1) for experiments [start, stop), ``cols`` per row.

    Entry (i, j) depends only on (seed, replication, start + i, j); callers
    may therefore split the experiment range arbitrarily.
    """
    rows = stop - start
    nblk = (cols + 1) // 2
    key = _stream_key(seed, replication)
    c0 = np.repeat(np.arange(start, stop, dtype=np.uint64), nblk)
    c1 = np.tile(np.arange(nblk, dtype=np.uint64), rows)
    x0, x1 = _philox2x64(c0, c1, key)
    out = np.empty((rows * nblk, 2), dtype=np.float64)
    out[:, 0] = ((x0 >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    out[:, 1] = ((x1 >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return out.reshape(rows, 2 * nblk)[:, :cols]


@dataclass(frozen=True)
class SimConfig:
    """A multiple-testing simulation: m experiments per replication."""

    model: object
    prior: Prior
    setup: TestSetup
    m: int
    seed: int
    replications: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ModelError(f"m must be >= 1, got {self.m}")
        if self.replications < 1:
            raise ModelError(f"replications must be >= 1, got {self.replications}")
        if self.workers < 1:
            raise ModelError(f"workers must be >= 1, got {self.workers}")
        if self.prior.ppf is None:
            raise PriorError(
                f"prior {self.prior.name!r} has no quantile function; "
                "simulation draws parameters by inverse CDF"
            )


@dataclass(frozen=True)
class SimResult:
    """Groupwise tallies and the derived rate estimators.

    ``fdr_hat`` is the mean over replications of V/(R v 1) (the groupwise
    FDR); ``delta_hat`` and ``eps_hat`` are the pooled conditional
    frequencies across all replications. Per-replication tallies are kept so
    callers can serialize them.
    """

    m: int
    replications: int
    seed: int
    V: np.ndarray
    S: np.ndarray
    R: np.ndarray
    fdr: np.ndarray
    fdr_hat: float
    se_fdr: float
    delta_hat: float
    eps_hat: float
    se_delta: float
    rejections: int

    def per_replication_se(self) -> np.ndarray:
        """Binomial-approximation standard error of each replication's FDR."""
        R = np.maximum(self.R, 1)
        f = self.fdr
        return np.sqrt(np.clip(f * (1.0 - f), 0.0, None) / R)


def _test_machinery(model, setup: TestSetup):
    """Pre-resolve the rejection rule and the null-region indicator."""
    n = setup.n
    if setup.statistic == "mean_ump":
        if not isinstance(model, ExpFamilyModel):
            raise ModelError("mean_ump requires an ExpFamilyModel")
        if model.sample_from_uniform is None:
            raise ModelError(f"model {model.name!r} has no sampler")
        k = ump_critical_value(model, setup)
        mu0 = float(model.mu(np.asarray(setup.theta0, dtype=float)))
        sigma0 = float(model.sigma(np.asarray(setup.theta0, dtype=float)))
        threshold = mu0 + k * sigma0 / math.sqrt(n)

        def rejects(theta, sample):
            return sample.mean(axis=1) > threshold

        if model.natural_direction == 1:
            null = lambda theta: theta <= setup.theta0
        else:
            null = lambda theta: theta >= setup.theta0
        sampler = model.sample_from_uniform
        return rejects, null, sampler

    if not isinstance(model, LocationModel):
        raise ModelError("median requires a LocationModel")
    if setup.theta0 != 0.0:
        raise ModelError("the median test uses the location convention theta0 = 0")
    z = nk.upper_quantile_z(setup.alpha)
    threshold = z / (2.0 * model.f0 * math.sqrt(n))
    k_idx = median_order_index(n) - 1  # 0-based

    def rejects(theta, sample):
        med = np.partition(sample, k_idx, axis=1)[:, k_idx]
        return med > threshold

    null = lambda theta: theta <= 0.0
    return rejects, null, model.sample_from_uniform


def _chunk_tallies(config: SimConfig, replication: int, start: int, stop: int, machinery):
    rejects, null, sampler = machinery
    n = config.setup.n
    u = uniform_block(config.seed, replication, start, stop, 1 + n)
    theta = np.asarray(config.prior.ppf(u[:, 0]), dtype=float)
    sample = np.asarray(sampler(theta[:, None], u[:, 1:]), dtype=float)
    rej = rejects(theta, sample)
    is_null = null(theta)
    v = int(np.sum(rej & is_null))
    r = int(np.sum(rej))
    w = int(np.sum(~rej & ~is_null))
    return v, r, w


def simulate(config: SimConfig) -> SimResult:
    """Run the simulation; identical seeds give bit-identical results."""
    machinery = _test_machinery(config.model, config.setup)
    m, reps = config.m, config.replications
    chunks = [(s, min(s + _CHUNK, m)) for s in range(0, m, _CHUNK)]
    V = np.zeros(reps, dtype=np.int64)
    R = np.zeros(reps, dtype=np.int64)
    W = np.zeros(reps, dtype=np.int64)

    def run_rep(r):
        v = rr = w = 0
        for s, e in chunks:
            cv, cr, cw = _chunk_tallies(config, r, s, e, machinery)
            v += cv
            rr += cr
            w += cw
        return r, v, rr, w

    if config.workers == 1:
        results = [run_rep(r) for r in range(reps)]
    else:
        jobs = [(r, s, e) for r in range(reps) for s, e in chunks]

        def run_job(job):
            r, s, e = job
            return (r,) + _chunk_tallies(config, r, s, e, machinery)

        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            partials = list(pool.map(run_job, jobs))
        acc = {}
        for r, v, rr, w in partials:
            pv, pr, pw = acc.get(r, (0, 0, 0))
            acc[r] = (pv + v, pr + rr, pw + w)
        results = [(r,) + acc[r] for r in range(reps)]

    for r, v, rr, w in results:
        V[r], R[r], W[r] = v, rr, w

    S = R - V
    fdr = V / np.maximum(R, 1)
    fdr_hat = float(fdr.mean())
    total_R = int(R.sum())
    total_acc = m * reps - total_R
    delta_hat = float(V.sum() / total_R) if total_R > 0 else 0.0
    eps_hat = float(W.sum() / total_acc) if total_acc > 0 else 0.0
    if reps > 1:
        se_fdr = float(fdr.std(ddof=1) / math.sqrt(reps))
    else:
        se_fdr = float(
            math.sqrt(max(fdr_hat * (1.0 - fdr_hat), 0.0) / max(total_R, 1))
        )
    se_delta = (
        float(math.sqrt(max(delta_hat * (1.0 - delta_hat), 0.0) / total_R))
        if total_R > 0
        else 0.0
    )
    return SimResult(
        m=m,
        replications=reps,
        seed=config.seed,
        V=V,
        S=S,
        R=R,
        fdr=fdr,
        fdr_hat=fdr_hat,
        se_fdr=se_fdr,
        delta_hat=delta_hat,
        eps_hat=eps_hat,
        se_delta=se_delta,
        rejections=total_R,
    )


@dataclass(frozen=True)
class SweepRow:
    m: int
    fdr_hat: float
    se_fdr: float
    gap: Optional[float]


def convergence_sweep(
    config: SimConfig,
    m_grid: Sequence[int],
    delta_ref: Optional[float] = None,
) -> list:
    """One simulation per m with a shared stream prefix, so rows are comparable.

    Experiment i draws the same data in every row that includes it; growing m
    extends the experiment set rather than reshuffling it. ``gap`` reports
    |fdr_hat - delta_ref| when a reference is supplied.
    """
    if not m_grid:
        raise ModelError("m_grid must be non-empty")
    rows = []
    for m in m_grid:
        res = simulate(
            SimConfig(
                model=config.model,
                prior=config.prior,
                setup=config.setup,
                m=int(m),
                seed=config.seed,
                replications=config.replications,
                workers=config.workers,
            )
        )
        gap = None if delta_ref is None else abs(res.fdr_hat - delta_ref)
        rows.append(SweepRow(m=int(m), fdr_hat=res.fdr_hat, se_fdr=res.se_fdr, gap=gap))
    return rows
