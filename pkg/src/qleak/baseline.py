"""Benchmark latency database: per-circuit timing baselines, CSV
persistence, pairwise required-measurement matrices, and the Grover
variant catalog.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .stats import PowerSpec, TimingDistribution, ovl, required_sample_size

SIMULATOR = "simulator"
HARDWARE = "hardware"
BACKENDS = (SIMULATOR, HARDWARE)

DEFAULT_SIM_VARIANCE = 0.003
DEFAULT_QC_VARIANCE = 0.3

_CSV_HEADER = ["name", "sim_latency_s", "qc_latency_s", "sim_required", "qc_required"]


class TableFormatError(ValueError):
    """Malformed baseline CSV: bad header, row shape, or field values."""


@dataclass(frozen=True)
class BaselineEntry:
    name: str
    sim_latency: float
    qc_latency: float
    sim_required: Optional[float] = None
    qc_required: Optional[float] = None

    def __post_init__(self):
        if not self.name:
            raise TableFormatError("empty circuit name")
        if self.sim_latency <= 0 or self.qc_latency <= 0:
            raise TableFormatError(
                f"{self.name}: latencies must be positive "
                f"({self.sim_latency}, {self.qc_latency})"
            )
        for req in (self.sim_required, self.qc_required):
            if req is not None and req < 1:
                raise TableFormatError(
                    f"{self.name}: required measurements below 1 ({req})"
                )

    def latency(self, backend: str) -> float:
        _check_backend(backend)
        return self.sim_latency if backend == SIMULATOR else self.qc_latency

    def required(self, backend: str) -> Optional[float]:
        _check_backend(backend)
        return self.sim_required if backend == SIMULATOR else self.qc_required


@dataclass(frozen=True)
class BaselineTable:
    entries: tuple[BaselineEntry, ...]
    sim_variance: float = DEFAULT_SIM_VARIANCE
    qc_variance: float = DEFAULT_QC_VARIANCE

    def __post_init__(self):
        if self.sim_variance <= 0 or self.qc_variance <= 0:
            raise TableFormatError("backend variances must be positive")
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise TableFormatError(f"duplicate circuit names: {dupes}")
        object.__setattr__(self, "entries", tuple(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def entry(self, name: str) -> BaselineEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def variance(self, backend: str) -> float:
        _check_backend(backend)
        return self.sim_variance if backend == SIMULATOR else self.qc_variance

    def timing(self, name: str, backend: str) -> TimingDistribution:
        return TimingDistribution(
            self.entry(name).latency(backend), self.variance(backend)
        )


def _check_backend(backend: str) -> None:
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")


def _parse_optional(raw: str, name: str, col: str) -> Optional[float]:
    raw = raw.strip()
    if not raw:
        return None
    try:
        return float(raw)
    except ValueError as exc:
        raise TableFormatError(f"{name}: bad {col} value {raw!r}") from exc


def load_table(
    path: str | Path,
    sim_variance: float = DEFAULT_SIM_VARIANCE,
    qc_variance: float = DEFAULT_QC_VARIANCE,
) -> BaselineTable:
    """Read a baseline table from CSV (header required, UTF-8)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TableFormatError(f"{path}: empty file") from None
        if [h.strip() for h in header] != _CSV_HEADER:
            raise TableFormatError(
                f"{path}: expected header {','.join(_CSV_HEADER)}"
            )
        entries = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(_CSV_HEADER):
                raise TableFormatError(
                    f"{path}:{lineno}: expected {len(_CSV_HEADER)} fields, "
                    f"got {len(row)}"
                )
            name = row[0].strip()
            try:
                sim_lat = float(row[1])
                qc_lat = float(row[2])
            except ValueError as exc:
                raise TableFormatError(
                    f"{path}:{lineno}: bad latency in row {name!r}"
                ) from exc
            entries.append(
                BaselineEntry(
                    name=name,
                    sim_latency=sim_lat,
                    qc_latency=qc_lat,
                    sim_required=_parse_optional(row[3], name, "sim_required"),
                    qc_required=_parse_optional(row[4], name, "qc_required"),
                )
            )
    if not entries:
        raise TableFormatError(f"{path}: no data rows")
    return BaselineTable(tuple(entries), sim_variance, qc_variance)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    # 12 significant digits: lossless for the published 10-digit values
    return f"{value:.12g}"


def save_table(table: BaselineTable, path: str | Path) -> None:
    """Write a baseline table as CSV with 9 significant digits."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for e in table.entries:
            writer.writerow(
                [
                    e.name,
                    _fmt(e.sim_latency),
                    _fmt(e.qc_latency),
                    _fmt(e.sim_required),
                    _fmt(e.qc_required),
                ]
            )


def bundled_table_path() -> Path:
    return Path(resources.files("qleak").joinpath("data/table1.csv"))


def bundled_table() -> BaselineTable:
    """The packaged 26-circuit benchmark table."""
    return load_table(bundled_table_path())


def pairwise_matrix(
    table: BaselineTable, backend: str, spec: PowerSpec = PowerSpec()
) -> np.ndarray:
    """Symmetric matrix of per-group required measurements.

    Cell (i, j) holds the planning n for distinguishing entries i and j on
    the given backend; the diagonal is NaN, identical means give inf.
    """
    if len(table) < 2:
        raise ValueError("need at least two entries")
    mus = np.array([e.latency(backend) for e in table.entries])
    sd = math.sqrt(table.variance(backend))
    k = len(mus)
    out = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i + 1, k):
            dmu = abs(mus[i] - mus[j])
            n = math.inf if dmu == 0 else required_sample_size(dmu / sd, spec)
            out[i, j] = out[j, i] = n
    return out


def nearest_neighbor_requirement(
    table: BaselineTable,
    name: str,
    backend: str,
    spec: PowerSpec = PowerSpec(),
) -> tuple[str, float]:
    """Name and planning n of the minimum-|delta-mean| other entry.

    The nearest-mean neighbor maximizes the pairwise requirement, so this
    is the budget that distinguishes the entry from every other circuit.
    """
    entry = table.entry(name)
    others = [e for e in table.entries if e.name != name]
    if not others:
        raise ValueError("table has a single entry")
    mu = entry.latency(backend)
    neighbor = min(others, key=lambda e: abs(e.latency(backend) - mu))
    dmu = abs(neighbor.latency(backend) - mu)
    sd = math.sqrt(table.variance(backend))
    n = math.inf if dmu == 0 else required_sample_size(dmu / sd, spec)
    return neighbor.name, max(n, 1.0)


# ---------------------------------------------------------------------------
# Grover variant catalog

GROVER_KEYS = [format(k, "03b") for k in range(8)]

# Calibrated so that with the default backend variance the 24x24
# requirement matrix stays inside [500, 2e7] and every same-iteration
# overlap exceeds 0.99. See grover_catalog for the structure.
DEFAULT_GROVER_BASE = 1.8
DEFAULT_GROVER_PER_ITERATION = 0.046
DEFAULT_GROVER_SPREAD = 0.0035
DEFAULT_GROVER_VARIANCE = 0.3


@dataclass(frozen=True)
class GroverVariant:
    key: str
    iterations: int
    index: int
    timing: TimingDistribution

    def __post_init__(self):
        if self.key not in GROVER_KEYS:
            raise ValueError(f"key must be a 3-bit string, got {self.key!r}")
        if not 1 <= self.iterations <= 3:
            raise ValueError(f"iterations must be 1..3, got {self.iterations}")
        expect = (self.iterations - 1) * 8 + GROVER_KEYS.index(self.key) + 1
        if self.index != expect:
            raise ValueError(
                f"index {self.index} inconsistent with "
                f"(iterations={self.iterations}, key={self.key})"
            )


def grover_key_offset(key: str, per_oracle_spread: float) -> float:
    """Per-key latency offset, eight evenly spaced values spanning
    +-per_oracle_spread/2 in key order 000..111."""
    return (GROVER_KEYS.index(key) - 3.5) * per_oracle_spread / 7.0


def grover_catalog(
    base_latency: float = DEFAULT_GROVER_BASE,
    per_iteration: float = DEFAULT_GROVER_PER_ITERATION,
    per_oracle_spread: float = DEFAULT_GROVER_SPREAD,
    variance: float = DEFAULT_GROVER_VARIANCE,
) -> list[GroverVariant]:
    """All 24 Grover timing variants: 3 iteration counts x 8 hidden keys.

    mean = base + iterations * per_iteration + key_offset(key). Indices
    1-8 are one iteration in key order 000..111, 9-16 two, 17-24 three.
    """
    if base_latency <= 0 or per_iteration <= 0 or variance <= 0:
        raise ValueError("catalog parameters must be positive")
    if per_oracle_spread < 0:
        raise ValueError("per_oracle_spread must not be negative")
    out = []
    for iterations in (1, 2, 3):
        for k, key in enumerate(GROVER_KEYS):
            mean = (
                base_latency
                + iterations * per_iteration
                + grover_key_offset(key, per_oracle_spread)
            )
            out.append(
                GroverVariant(
                    key=key,
                    iterations=iterations,
                    index=(iterations - 1) * 8 + k + 1,
                    timing=TimingDistribution(mean, variance),
                )
            )
    return out


def catalog_matrices(
    catalog: list[GroverVariant], spec: PowerSpec = PowerSpec()
) -> tuple[np.ndarray, np.ndarray]:
    """24x24 (ovl, required n) matrices over the catalog, index order.

    Requirement cells use the pooled standard deviation of the pair;
    identical means give inf, the requirement diagonal is NaN.
    """
    k = len(catalog)
    sorted_cat = sorted(catalog, key=lambda v: v.index)
    ovl_m = np.ones((k, k))
    req_m = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i + 1, k):
            ti, tj = sorted_cat[i].timing, sorted_cat[j].timing
            ovl_m[i, j] = ovl_m[j, i] = ovl(ti, tj)
            dmu = abs(ti.mean - tj.mean)
            sd = math.sqrt((ti.variance + tj.variance) / 2.0)
            n = math.inf if dmu == 0 else required_sample_size(dmu / sd, spec)
            req_m[i, j] = req_m[j, i] = n
    return ovl_m, req_m


def write_matrix_csv(path: str | Path, labels: list[str], matrix: np.ndarray) -> None:
    """Matrix with row/column headers as CSV."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + labels)
        for label, row in zip(labels, matrix):
            writer.writerow([label] + [_cell(v) for v in row])


def write_long_form_csv(
    path: str | Path, ovl_matrix: np.ndarray, req_matrix: np.ndarray
) -> None:
    """Long-form `i,j,ovl,required_n` rows for external plotting."""
    k = ovl_matrix.shape[0]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "ovl", "required_n"])
        for i in range(k):
            for j in range(k):
                writer.writerow(
                    [i + 1, j + 1, _cell(ovl_matrix[i, j]), _cell(req_matrix[i, j])]
                )


def _cell(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return ""
    if v == math.inf:
        return "inf"
    return f"{v:.9g}"
