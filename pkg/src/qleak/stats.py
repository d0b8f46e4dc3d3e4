"""Two-sample timing statistics: Welch t, difference-of-means curves,
Gaussian overlap, and sample-size planning with a Monte-Carlo oracle.

All quantities are in seconds (means) and seconds squared (variances).
Sample-size results are continuous per-group counts, not rounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special
from scipy import stats as sps


class DegenerateSamplesError(ValueError):
    """Both samples have zero variance and equal means: no test is defined."""


@dataclass(frozen=True)
class SampleSummary:
    """Sufficient statistics of one duration sample (unbiased variance)."""

    n: int
    mean: float
    variance: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one observation, got n={self.n}")
        if self.variance < 0:
            raise ValueError(f"negative variance {self.variance}")
        if self.n == 1 and self.variance != 0.0:
            raise ValueError("variance is undefined for a single observation")

    @property
    def degenerate(self) -> bool:
        """True when the variance carries no information (n < 2)."""
        return self.n < 2

    @classmethod
    def from_samples(cls, xs: Sequence[float]) -> "SampleSummary":
        xs = np.asarray(xs, dtype=float)
        if xs.size < 1:
            raise ValueError("empty sample")
        var = float(xs.var(ddof=1)) if xs.size > 1 else 0.0
        return cls(n=int(xs.size), mean=float(xs.mean()), variance=var)


@dataclass(frozen=True)
class TimingDistribution:
    """Gaussian latency model for one circuit on one backend."""

    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance}")
        if not self.mean > 0:
            raise ValueError(f"latency mean must be positive, got {self.mean}")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def pdf(self, x):
        return sps.norm.pdf(x, self.mean, self.sd)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.normal(self.mean, self.sd, size)


@dataclass(frozen=True)
class PowerSpec:
    """Two-sided significance level and target power for planning."""

    alpha: float = 0.05
    power: float = 0.80

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if not 0 < self.power < 1:
            raise ValueError(f"power must be in (0,1), got {self.power}")


@dataclass(frozen=True)
class DomPoint:
    """One prefix of a difference-of-means curve with its null band."""

    n: int
    dom: float
    band: float


def normal_cdf(x: float) -> float:
    return float(special.ndtr(x))


def normal_quantile(p: float) -> float:
    if not 0 < p < 1:
        raise ValueError(f"quantile argument must be in (0,1), got {p}")
    return float(special.ndtri(p))


def welch_t(a: SampleSummary, b: SampleSummary) -> float:
    """Welch t-score (a.mean - b.mean) / sqrt(va/na + vb/nb)."""
    if a.n < 2 or b.n < 2:
        raise ValueError("welch_t needs at least two observations per sample")
    se2 = a.variance / a.n + b.variance / b.n
    diff = a.mean - b.mean
    if se2 == 0.0:
        if diff == 0.0:
            raise DegenerateSamplesError(
                "zero variance on both sides with equal means"
            )
        return math.copysign(math.inf, diff)
    return diff / math.sqrt(se2)


def welch_satterthwaite_df(a: SampleSummary, b: SampleSummary) -> float:
    ra, rb = a.variance / a.n, b.variance / b.n
    num = (ra + rb) ** 2
    den = ra**2 / (a.n - 1) + rb**2 / (b.n - 1)
    if den == 0.0:
        return float(a.n + b.n - 2)
    return num / den


def dom_curves(
    a: np.ndarray, b: np.ndarray, confidence: float = 0.95
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Array form of :func:`dom_series`.

    Returns (n, dom, band) for prefix lengths n = 2..min(len(a), len(b)),
    with bands from running unbiased variances and the normal quantile of
    (1 + confidence) / 2.
    """
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must be in (0,1), got {confidence}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = min(a.size, b.size)
    if m < 2:
        raise ValueError("need at least two observations per set")
    a, b = a[:m], b[:m]
    n = np.arange(1, m + 1, dtype=float)
    ma = np.cumsum(a) / n
    mb = np.cumsum(b) / n
    ssa = np.cumsum(a * a) - n * ma * ma
    ssb = np.cumsum(b * b) - n * mb * mb
    with np.errstate(invalid="ignore", divide="ignore"):
        va = ssa / (n - 1)
        vb = ssb / (n - 1)
    # rounding can push the centered sum of squares slightly negative
    va = np.maximum(va, 0.0)
    vb = np.maximum(vb, 0.0)
    z = normal_quantile((1 + confidence) / 2)
    dom = (ma - mb)[1:]
    band = z * np.sqrt((va + vb)[1:] / n[1:])
    return n[1:].astype(int), dom, band


def dom_series(
    a: Sequence[float], b: Sequence[float], confidence: float = 0.95
) -> list[DomPoint]:
    """Difference-of-means curve over growing prefixes of two ordered sets.

    A prefix is "distinguished" when |dom| exceeds the band, the half-width
    of the equal-population confidence band at the requested level.
    """
    ns, dom, band = dom_curves(np.asarray(a), np.asarray(b), confidence)
    return [
        DomPoint(int(n), float(d), float(w)) for n, d, w in zip(ns, dom, band)
    ]


def ovl(p: TimingDistribution, q: TimingDistribution) -> float:
    """Overlapping coefficient: integral of min(pdf_p, pdf_q) over the line."""
    if p.mean == q.mean and p.variance == q.variance:
        return 1.0
    if p.variance == q.variance:
        # densities cross once, midway between the means
        return 2.0 * normal_cdf(-abs(p.mean - q.mean) / (2.0 * p.sd))
    # unequal variances: the log-density difference is a quadratic with two
    # real roots; accumulate the smaller cdf mass on each segment
    lo, hi = (p, q) if p.variance < q.variance else (q, p)
    a = 1.0 / (2 * lo.variance) - 1.0 / (2 * hi.variance)
    b = hi.mean / hi.variance - lo.mean / lo.variance
    c = (
        lo.mean**2 / (2 * lo.variance)
        - hi.mean**2 / (2 * hi.variance)
        - math.log(hi.sd / lo.sd)
    )
    r1, r2 = sorted(np.roots([a, b, c]).real)
    cuts = [-math.inf, r1, r2, math.inf]
    total = 0.0
    for left, right in zip(cuts[:-1], cuts[1:]):
        mid = r1 - 1.0 if left == -math.inf else (
            r2 + 1.0 if right == math.inf else 0.5 * (left + right)
        )
        d = lo if lo.pdf(mid) < hi.pdf(mid) else hi
        lcdf = 0.0 if left == -math.inf else sps.norm.cdf(left, d.mean, d.sd)
        rcdf = 1.0 if right == math.inf else sps.norm.cdf(right, d.mean, d.sd)
        total += rcdf - lcdf
    return float(min(total, 1.0))


def ovl_numeric(p: TimingDistribution, q: TimingDistribution) -> float:
    """Adaptive-quadrature cross-check for :func:`ovl`."""
    lo = min(p.mean - 10 * p.sd, q.mean - 10 * q.sd)
    hi = max(p.mean + 10 * p.sd, q.mean + 10 * q.sd)
    val, _ = integrate.quad(
        lambda x: min(p.pdf(x), q.pdf(x)), lo, hi, limit=200
    )
    return float(val)


def noncentral_t_sf(t: float, df: float, ncp: float) -> float:
    """P(T' > t) for a noncentral t variable with `df` and noncentrality `ncp`."""
    if not (math.isfinite(t) and math.isfinite(df) and math.isfinite(ncp)):
        raise ValueError("non-finite argument")
    if df <= 0:
        raise ValueError(f"df must be positive, got {df}")
    val = float(sps.nct.sf(t, df, ncp))
    if math.isnan(val):
        # scipy's nct loses it for extreme noncentrality; Satterthwaite-style
        # normal approximation is ample there
        val = normal_cdf((ncp - t) / math.sqrt(1.0 + t * t / (2.0 * df)))
    return val


def pooled_t_power(n: float, d: float, alpha: float = 0.05) -> float:
    """Power of the two-sided pooled two-sample t-test at per-group size n."""
    df = 2.0 * n - 2.0
    if df <= 0:
        raise ValueError("per-group n must exceed 1")
    ncp = d * math.sqrt(n / 2.0)
    tcrit = float(sps.t.ppf(1.0 - alpha / 2.0, df))
    p = noncentral_t_sf(tcrit, df, ncp)
    if ncp < 4.0:
        # the opposite-tail term; below 1e-8 beyond this point (and scipy's
        # nct.cdf goes NaN there)
        p += float(sps.nct.cdf(-tcrit, df, ncp))
    return min(p, 1.0)


def normal_approx_sample_size(d: float, spec: PowerSpec = PowerSpec()) -> float:
    """Large-sample shortcut n = 2 ((z_{1-a/2} + z_power) / d)^2."""
    if d <= 0:
        return math.inf
    z = normal_quantile(1 - spec.alpha / 2) + normal_quantile(spec.power)
    return 2.0 * (z / d) ** 2


def lehr_sample_size(d: float) -> float:
    """Lehr's rule of thumb, n = 16 / d^2 per group."""
    if d <= 0:
        raise ValueError(f"effect size must be positive, got {d}")
    return 16.0 / (d * d)


@lru_cache(maxsize=4096)
def _solve_sample_size(d: float, alpha: float, power: float) -> float:
    f = lambda n: pooled_t_power(n, d, alpha) - power
    hi = max(4.0 * normal_approx_sample_size(d, PowerSpec(alpha, power)), 16.0)
    # power is not monotone near n = 1 (vanishing df fattens the tails), so
    # locate the rightmost crossing by scanning down from the upper bracket
    lo = None
    for g in np.logspace(math.log10(1.5), math.log10(hi), 400)[::-1]:
        if f(g) < 0:
            lo = float(g)
            break
    if lo is None:
        return 1.0
    n = optimize.brentq(f, lo, hi, xtol=1e-12, rtol=8.9e-16)
    # a pooled test needs two observations per group; solutions below that
    # mean a single measurement already settles the question
    return 1.0 if n < 2.0 else float(n)


def required_sample_size(d: float, spec: PowerSpec = PowerSpec()) -> float:
    """Continuous per-group n for the pooled t-test to reach `spec.power`.

    Solves P(|T'_{2n-2, d sqrt(n/2)}| > t_crit) = power by bracketing and
    bisection. Returns inf for non-positive effect sizes; results below
    two observations per group report as 1.0.
    """
    if d <= 0:
        return math.inf
    return _solve_sample_size(float(d), spec.alpha, spec.power)


def mc_power_oracle(
    p: TimingDistribution,
    q: TimingDistribution,
    n: int,
    spec: PowerSpec = PowerSpec(),
    trials: int = 10_000,
    seed: int = 0,
) -> float:
    """Brute-force power estimate: fraction of trials in which a Welch test
    on n fresh draws per group rejects at level alpha.

    Independent of the planning path: draws samples and runs the test.
    """
    if n < 2:
        raise ValueError("per-group n must be at least 2")
    if trials < 1000:
        raise ValueError("use at least 1000 trials")
    rng = np.random.default_rng(seed)
    rejected = 0
    left = trials
    batch = max(1, 4_000_000 // (2 * n))
    while left:
        m = min(batch, left)
        left -= m
        a = rng.normal(p.mean, p.sd, (m, n))
        b = rng.normal(q.mean, q.sd, (m, n))
        ma, mb = a.mean(axis=1), b.mean(axis=1)
        va, vb = a.var(axis=1, ddof=1), b.var(axis=1, ddof=1)
        se2 = va / n + vb / n
        t = (ma - mb) / np.sqrt(se2)
        df = se2**2 / ((va / n) ** 2 / (n - 1) + (vb / n) ** 2 / (n - 1))
        tcrit = sps.t.ppf(1.0 - spec.alpha / 2.0, df)
        rejected += int(np.count_nonzero(np.abs(t) > tcrit))
    return rejected / trials
