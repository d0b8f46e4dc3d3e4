"""Seeded simulation of a serial cloud quantum job queue.

One device executes victim and attacker jobs back to back on an abstract
monotonic clock; durations are Gaussian draws per circuit, truncated at a
1 microsecond floor (truncations are counted, never silent).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from .stats import TimingDistribution

VICTIM = "victim"
ATTACKER = "attacker"

DURATION_FLOOR = 1e-6


class ScenarioError(ValueError):
    """Invalid scenario: unknown circuit, bad counts, malformed config."""


@dataclass(frozen=True)
class DeviceProfile:
    """A backend with per-circuit latency models and a fixed gap between
    consecutive jobs."""

    name: str
    circuit_timings: Mapping[str, TimingDistribution]
    inter_job_gap: float = 0.0

    def __post_init__(self):
        if self.inter_job_gap < 0:
            raise ValueError("inter_job_gap must not be negative")
        if not self.circuit_timings:
            raise ValueError("device needs at least one circuit timing")

    def timing(self, circuit: str) -> TimingDistribution:
        try:
            return self.circuit_timings[circuit]
        except KeyError:
            raise ScenarioError(
                f"circuit {circuit!r} unknown on device {self.name!r}"
            ) from None


@dataclass(frozen=True)
class Scenario:
    device: DeviceProfile
    victim_circuit: str
    victim_repetitions: int
    attacker_probe_circuit: str
    probe_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.victim_repetitions < 1:
            raise ScenarioError("victim_repetitions must be at least 1")
        if self.probe_every < 1:
            raise ScenarioError("probe_every must be at least 1")
        self.device.timing(self.victim_circuit)
        self.device.timing(self.attacker_probe_circuit)


@dataclass(frozen=True)
class JobRecord:
    job_id: int
    owner: str
    circuit: str
    queued_at: float
    started_at: float
    ended_at: float

    @property
    def duration(self) -> float:
        return self.ended_at - self.started_at


@dataclass
class JobLog:
    records: list[JobRecord] = field(default_factory=list)
    truncations: int = 0

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def by_owner(self, owner: str) -> list[JobRecord]:
        return [r for r in self.records if r.owner == owner]


def run_simulation(scenario: Scenario) -> JobLog:
    """Execute the scenario serially, probes bracketing every k-th victim
    batch. Identical scenarios (including seed) give bit-identical logs."""
    rng = np.random.default_rng(scenario.seed)
    device = scenario.device
    log = JobLog()
    clock = 0.0

    def submit(owner: str, circuit: str) -> None:
        nonlocal clock
        queued = clock
        started = queued if not log.records else queued + device.inter_job_gap
        model = device.timing(circuit)
        duration = float(model.sample(rng))
        if duration < DURATION_FLOOR:
            duration = DURATION_FLOOR
            log.truncations += 1
        record = JobRecord(
            job_id=len(log.records),
            owner=owner,
            circuit=circuit,
            queued_at=queued,
            started_at=started,
            ended_at=started + duration,
        )
        log.records.append(record)
        clock = record.ended_at

    submit(ATTACKER, scenario.attacker_probe_circuit)
    done = 0
    while done < scenario.victim_repetitions:
        batch = min(scenario.probe_every, scenario.victim_repetitions - done)
        for _ in range(batch):
            submit(VICTIM, scenario.victim_circuit)
        done += batch
        submit(ATTACKER, scenario.attacker_probe_circuit)
    return log


def ground_truth_durations(log: JobLog, owner: str = VICTIM) -> np.ndarray:
    """Actual per-job durations for one owner, in execution order."""
    return np.array([r.duration for r in log.by_owner(owner)])


def save_log_csv(log: JobLog, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["job_id", "owner", "circuit", "queued_at", "started_at", "ended_at"]
        )
        for r in log:
            writer.writerow(
                [r.job_id, r.owner, r.circuit,
                 f"{r.queued_at:.12g}", f"{r.started_at:.12g}", f"{r.ended_at:.12g}"]
            )


# ---------------------------------------------------------------------------
# Scenario config files

def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ScenarioError(f"missing {key!r} in {where}")
    return mapping[key]


def _parse_device(block: dict, where: str = "device") -> DeviceProfile:
    circuits = _require(block, "circuits", where)
    if not isinstance(circuits, dict) or not circuits:
        raise ScenarioError(f"{where}.circuits must be a non-empty map")
    timings = {}
    for cname, spec in circuits.items():
        try:
            timings[cname] = TimingDistribution(
                float(_require(spec, "mean", f"{where}.circuits.{cname}")),
                float(_require(spec, "variance", f"{where}.circuits.{cname}")),
            )
        except (TypeError, ValueError) as exc:
            raise ScenarioError(
                f"bad timing for circuit {cname!r}: {exc}"
            ) from exc
    return DeviceProfile(
        name=str(_require(block, "name", where)),
        circuit_timings=timings,
        inter_job_gap=float(block.get("inter_job_gap", 0.0)),
    )


def load_scenario(path: str | Path, seed: int | None = None) -> Scenario:
    """Load a scenario from YAML; `seed` overrides the file's value.

    Schema::

        device:
          name: desk_belem
          inter_job_gap: 0.0
          circuits:
            GHZ: {mean: 2.779299043, variance: 0.3}
            probe: {mean: 0.05, variance: 0.0001}
        victim: {circuit: GHZ, repetitions: 200}
        attacker: {probe_circuit: probe, every_k: 1}
        seed: 1234
    """
    with Path(path).open(encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: scenario file must be a mapping")
    device = _parse_device(_require(raw, "device", "scenario"))
    victim = _require(raw, "victim", "scenario")
    attacker = _require(raw, "attacker", "scenario")
    return Scenario(
        device=device,
        victim_circuit=str(_require(victim, "circuit", "victim")),
        victim_repetitions=int(_require(victim, "repetitions", "victim")),
        attacker_probe_circuit=str(_require(attacker, "probe_circuit", "attacker")),
        probe_every=int(attacker.get("every_k", 1)),
        seed=int(seed if seed is not None else raw.get("seed", 0)),
    )


def load_reference_devices(path: str | Path) -> list[DeviceProfile]:
    """Optional `reference_devices:` list from a scenario file (used by the
    processor-fingerprint attack)."""
    with Path(path).open(encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    blocks = raw.get("reference_devices") if isinstance(raw, dict) else None
    if not blocks:
        return []
    return [_parse_device(b, f"reference_devices[{i}]") for i, b in enumerate(blocks)]
