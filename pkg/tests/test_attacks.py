import math

import numpy as np
import pytest

from qleak.attacks import (
    DISTINGUISHABLE,
    INDISTINGUISHABLE,
    AttackVerdict,
    co_identify,
    detect_backend,
    dom_vs_model,
    first_crossing,
    null_distinguishability,
    qp_fingerprint,
    save_verdicts_csv,
    uc_classify,
)
from qleak.baseline import HARDWARE, SIMULATOR, bundled_table, grover_catalog
from qleak.cloudsim import DeviceProfile
from qleak.stats import TimingDistribution
from qleak.trace import Trace


@pytest.fixture(scope="module")
def table():
    return bundled_table()


def synthetic_trace(mean, variance, n, seed=0):
    rng = np.random.default_rng(seed)
    return Trace.from_durations(rng.normal(mean, math.sqrt(variance), n))


class TestVerdict:
    def test_validation(self):
        with pytest.raises(ValueError):
            AttackVerdict("UC", "", 10, 0.0, 1.0, 0.8)
        with pytest.raises(ValueError):
            AttackVerdict("UC", "x", 0, 0.0, 1.0, 0.8)

    def test_csv(self, tmp_path):
        v = AttackVerdict("UC", "x", 10, 0.5, 3.0, 0.8)
        p = tmp_path / "v.csv"
        save_verdicts_csv([v], p)
        assert len(p.read_text().strip().splitlines()) == 2


class TestUc:
    def test_recovers_circuit(self, table):
        e = table.entry("GHZ")
        tr = synthetic_trace(e.latency(HARDWARE), table.qc_variance, 2000, seed=1)
        v = uc_classify(tr, table, HARDWARE)
        assert v.label == "GHZ"
        assert not v.underpowered

    def test_well_separated_needs_one(self, table):
        e = table.entry("Tphi Dephase Benchmark")
        tr = synthetic_trace(e.latency(SIMULATOR), table.sim_variance, 3, seed=2)
        v = uc_classify(tr, table, SIMULATOR)
        assert v.label == "Tphi Dephase Benchmark"
        assert v.planned_n == 1.0

    def test_underpowered_flag(self, table):
        e = table.entry("GHZ")
        tr = synthetic_trace(e.latency(SIMULATOR), table.sim_variance, 50, seed=3)
        v = uc_classify(tr, table, SIMULATOR)
        assert v.underpowered
        assert v.planned_n == pytest.approx(2495.773, rel=1e-3)

    def test_backend_detection(self, table):
        e = table.entry("Quantum Volume")
        tr = synthetic_trace(e.latency(HARDWARE), table.qc_variance, 500, seed=4)
        v = detect_backend(tr, table)
        assert v.label == HARDWARE


class TestCo:
    def test_iteration_stage(self):
        cat = grover_catalog()
        target = next(v for v in cat if v.iterations == 2 and v.key == "011")
        rng = np.random.default_rng(5)
        tr = Trace.from_durations(
            rng.normal(target.timing.mean, target.timing.sd, 4000)
        )
        verdict, ovl_m, req_m = co_identify(tr, cat)
        assert "iterations=2" in verdict.label
        assert verdict.underpowered  # the key needs far more data
        assert ovl_m.shape == (24, 24)

    def test_key_stage_with_enough_data(self):
        # widen the per-key spread so the key stage is affordable to test
        cat = grover_catalog(per_iteration=3.0, per_oracle_spread=0.7)
        target = next(v for v in cat if v.iterations == 1 and v.key == "110")
        rng = np.random.default_rng(6)
        tr = Trace.from_durations(
            rng.normal(target.timing.mean, target.timing.sd, 3000)
        )
        verdict, _, _ = co_identify(tr, cat)
        assert verdict.label == "iterations=1 key=110"
        assert not verdict.underpowered

    def test_catalog_size_checked(self):
        with pytest.raises(ValueError):
            co_identify(Trace.from_durations([1.0, 2.0]), grover_catalog()[:5])


class TestNullRule:
    def test_identical_distributions_indistinguishable(self):
        rng = np.random.default_rng(7)
        a = Trace.from_durations(rng.normal(2.0, 0.5, 400))
        b = Trace.from_durations(rng.normal(2.0, 0.5, 400))
        verdict, points = null_distinguishability(a, b)
        assert verdict == INDISTINGUISHABLE
        assert len(points) == 399

    def test_separated_distributions_distinguishable(self):
        rng = np.random.default_rng(8)
        a = Trace.from_durations(rng.normal(2.0, 0.3, 400))
        b = Trace.from_durations(rng.normal(2.5, 0.3, 400))
        verdict, _ = null_distinguishability(a, b)
        assert verdict == DISTINGUISHABLE

    def test_needs_two(self):
        with pytest.raises(ValueError):
            null_distinguishability(
                Trace.from_durations([1.0]), Trace.from_durations([1.0])
            )


def make_devices(mu_a=1.853176702, mu_b=3.075851148, var=0.3):
    return [
        DeviceProfile("dev_a", {"grover": TimingDistribution(mu_a, var)}),
        DeviceProfile("dev_b", {"grover": TimingDistribution(mu_b, var)}),
    ]


class TestQp:
    def test_identifies_device_quickly(self):
        devices = make_devices()
        rng = np.random.default_rng(9)
        tr = Trace.from_durations(
            rng.normal(1.853176702, math.sqrt(0.3), 100)
        )
        v = qp_fingerprint(tr, devices, "grover")
        assert v.label == "dev_a"
        assert v.measurements_used <= 100

    def test_dom_vs_model_crossing(self):
        model = TimingDistribution(3.075851148, 0.3)
        rng = np.random.default_rng(10)
        xs = rng.normal(1.853176702, math.sqrt(0.3), 100)
        ns, dom, band = dom_vs_model(xs, model)
        cross = first_crossing(dom, band, ns)
        assert cross is not None and cross <= 10

    def test_no_crossing_returns_none(self):
        model = TimingDistribution(2.0, 0.3)
        ns = np.array([2, 3])
        assert first_crossing(np.array([0.0, 0.0]), np.array([1.0, 1.0]), ns) is None

    def test_needs_two_devices(self):
        with pytest.raises(ValueError):
            qp_fingerprint(
                Trace.from_durations([1.0, 2.0]), make_devices()[:1], "grover"
            )
