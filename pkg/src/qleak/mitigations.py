"""Timing-channel countermeasures and their cost/benefit evaluation.

Four knobs, all modelled as transforms on per-circuit timing
distributions or on scheduler behavior:

- timer noise: the service adds zero-mean jitter of a fixed variance to
  every reported duration, inflating every pairwise requirement by the
  common factor (sigma^2 + v) / sigma^2;
- compile randomness: each submission is compiled to one of several
  layouts drawn uniformly, turning a point latency into a mixture;
- circuit padding: idle gates shift a circuit's mean toward a decoy's,
  shrinking the gap the attacker must resolve;
- scheduler batching: victims run in larger bursts between probes, so
  each probe interval averages more executions and per-execution
  variance shrinks by the batch factor, while the attacker's interval
  budget drops by the same factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .baseline import BaselineTable
from .cloudsim import Scenario
from .stats import PowerSpec, TimingDistribution, ovl, required_sample_size

TIMER_NOISE = "timer-noise"
COMPILE_RANDOMNESS = "compile-randomness"
CIRCUIT_PADDING = "circuit-padding"
SCHEDULER_BATCHING = "scheduler-batching"

KINDS = (TIMER_NOISE, COMPILE_RANDOMNESS, CIRCUIT_PADDING, SCHEDULER_BATCHING)


@dataclass(frozen=True)
class MixtureTiming:
    """Uniform mixture over component timing distributions; quacks like
    TimingDistribution for mean/variance/sampling."""

    components: tuple[TimingDistribution, ...]

    def __post_init__(self):
        if len(self.components) < 1:
            raise ValueError("mixture needs at least one component")

    @property
    def mean(self) -> float:
        return sum(c.mean for c in self.components) / len(self.components)

    @property
    def variance(self) -> float:
        # law of total variance over the uniform component choice
        mu = self.mean
        k = len(self.components)
        within = sum(c.variance for c in self.components) / k
        between = sum((c.mean - mu) ** 2 for c in self.components) / k
        return within + between

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        picks = rng.integers(0, len(self.components), size=size)
        out = np.empty(size, dtype=float)
        for i, comp in enumerate(self.components):
            mask = picks == i
            if mask.any():
                out[mask] = comp.sample(rng, int(mask.sum()))
        return out


@dataclass(frozen=True)
class Mitigation:
    """One configured countermeasure.

    kind-specific parameters:
      timer-noise: added_variance > 0
      compile-randomness: layout_spread > 0, layouts >= 2 (evenly spaced
        mean offsets spanning +/- layout_spread / 2)
      circuit-padding: pad_toward (decoy circuit name), pad_fraction in
        [0, 1] (how much of the mean gap the padding closes)
      scheduler-batching: batch_factor >= 1 (multiplies probe_every)
    """

    kind: str
    added_variance: float = 0.0
    layout_spread: float = 0.0
    layouts: int = 2
    pad_toward: str = ""
    pad_fraction: float = 1.0
    batch_factor: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown mitigation kind {self.kind!r}")
        if self.kind == TIMER_NOISE and not self.added_variance > 0:
            raise ValueError("timer-noise needs added_variance > 0")
        if self.kind == COMPILE_RANDOMNESS:
            if not self.layout_spread > 0:
                raise ValueError("compile-randomness needs layout_spread > 0")
            if self.layouts < 2:
                raise ValueError("compile-randomness needs layouts >= 2")
        if self.kind == CIRCUIT_PADDING:
            if not self.pad_toward:
                raise ValueError("circuit-padding needs pad_toward")
            if not 0.0 <= self.pad_fraction <= 1.0:
                raise ValueError("pad_fraction must lie in [0, 1]")
        if self.kind == SCHEDULER_BATCHING and self.batch_factor < 1:
            raise ValueError("batch_factor must be >= 1")

    # -- distribution transforms ------------------------------------------

    def apply(
        self,
        timing: TimingDistribution,
        table: Optional[BaselineTable] = None,
        backend: Optional[str] = None,
    ) -> TimingDistribution | MixtureTiming:
        """Transform one circuit's timing distribution.

        circuit-padding needs the baseline table and backend to locate
        the decoy's mean; the other kinds ignore them. scheduler-batching
        leaves distributions untouched (it acts on the scheduler).
        """
        if self.kind == TIMER_NOISE:
            return TimingDistribution(
                timing.mean, timing.variance + self.added_variance
            )
        if self.kind == COMPILE_RANDOMNESS:
            offsets = np.linspace(
                -self.layout_spread / 2, self.layout_spread / 2, self.layouts
            )
            comps = tuple(
                TimingDistribution(timing.mean + float(o), timing.variance)
                for o in offsets
            )
            return MixtureTiming(comps)
        if self.kind == CIRCUIT_PADDING:
            if table is None or backend is None:
                raise ValueError("circuit-padding needs table and backend")
            decoy = table.entry(self.pad_toward).latency(backend)
            # padding only lengthens circuits: shift the shorter of the
            # pair toward the longer one
            if timing.mean >= decoy:
                return timing
            mean = timing.mean + self.pad_fraction * (decoy - timing.mean)
            return TimingDistribution(mean, timing.variance)
        return timing

    def apply_to_table(self, table: BaselineTable, backend: str) -> list:
        """Per-entry transformed timing models, in table order."""
        return [
            self.apply(table.timing(e.name, backend), table, backend)
            for e in table.entries
        ]

    def apply_to_scenario(self, scenario: Scenario) -> Scenario:
        """Scheduler-level rewrite: batching multiplies probe_every,
        distribution-level kinds rewrite the device's circuit models."""
        if self.kind == SCHEDULER_BATCHING:
            return replace(
                scenario, probe_every=scenario.probe_every * self.batch_factor
            )
        if self.kind == TIMER_NOISE:
            timings = {
                name: TimingDistribution(t.mean, t.variance + self.added_variance)
                for name, t in scenario.device.circuit_timings.items()
            }
            return replace(
                scenario, device=replace(scenario.device, circuit_timings=timings)
            )
        return scenario


@dataclass(frozen=True)
class MitigationReport:
    """Cost/benefit summary for one mitigation against one victim pair."""

    kind: str
    baseline_required_n: float
    mitigated_required_n: float
    inflation: float
    overlap_before: float
    overlap_after: float
    mean_overhead: float
    variance_overhead: float

    def csv_row(self) -> list:
        return [
            self.kind,
            f"{self.baseline_required_n:.9g}",
            f"{self.mitigated_required_n:.9g}",
            f"{self.inflation:.9g}",
            f"{self.overlap_before:.9g}",
            f"{self.overlap_after:.9g}",
            f"{self.mean_overhead:.9g}",
            f"{self.variance_overhead:.9g}",
        ]


REPORT_CSV_HEADER = [
    "kind", "baseline_required_n", "mitigated_required_n", "inflation",
    "overlap_before", "overlap_after", "mean_overhead", "variance_overhead",
]


def _pair_requirement(
    a_mean: float, a_var: float, b_mean: float, b_var: float, spec: PowerSpec
) -> float:
    sd = math.sqrt((a_var + b_var) / 2)
    if sd == 0:
        return math.inf if a_mean == b_mean else 1.0
    return required_sample_size(abs(a_mean - b_mean) / sd, spec)


def evaluate(
    mitigation: Mitigation,
    table: BaselineTable,
    backend: str,
    victim: str,
    reference: str,
    spec: PowerSpec = PowerSpec(),
) -> MitigationReport:
    """How much harder does the mitigation make telling victim from
    reference on this backend, and at what cost to the victim?

    Benefit is the required-measurement inflation factor for the pooled
    two-sample design; cost is the added mean latency and variance the
    victim's own jobs incur. scheduler-batching reshapes the attacker's
    sampling (k intervals of k-averaged executions), which cancels in
    per-interval effect size but divides the attacker's interval budget
    per wall-clock unit by batch_factor, reported as inflation.
    """
    a, b = table.timing(victim, backend), table.timing(reference, backend)
    before = _pair_requirement(a.mean, a.variance, b.mean, b.variance, spec)
    ovl_before = ovl(a, b)

    if mitigation.kind == SCHEDULER_BATCHING:
        # averaging k executions per interval divides both the variance
        # and the intervals per unit time by k; requirement in intervals
        # falls by k but wall-clock cost rises back by k, and the victim
        # pays nothing
        am, bm = a, b
        after = before
        inflation = float(mitigation.batch_factor)
        ovl_after = ovl_before
    else:
        am = mitigation.apply(a, table, backend)
        bm = mitigation.apply(b, table, backend)
        after = _pair_requirement(am.mean, am.variance, bm.mean, bm.variance, spec)
        inflation = after / before if math.isfinite(before) else math.inf
        # mixtures are summarized by their first two moments for overlap
        ovl_after = ovl(
            TimingDistribution(am.mean, am.variance),
            TimingDistribution(bm.mean, bm.variance),
        )

    return MitigationReport(
        kind=mitigation.kind,
        baseline_required_n=before,
        mitigated_required_n=after,
        inflation=inflation,
        overlap_before=ovl_before,
        overlap_after=ovl_after,
        mean_overhead=am.mean - a.mean,
        variance_overhead=am.variance - a.variance,
    )


def timer_noise_inflation(base_variance: float, added_variance: float) -> float:
    """Closed-form requirement inflation when jitter of the given variance
    is added service-wide: (sigma^2 + v) / sigma^2."""
    if base_variance <= 0:
        raise ValueError("base_variance must be positive")
    if added_variance < 0:
        raise ValueError("added_variance must be non-negative")
    return (base_variance + added_variance) / base_variance
