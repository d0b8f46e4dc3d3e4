"""Command-line front end.

Subcommands::

    qleak reproduce-table   recompute the required-measurement table
    qleak matrix            emit the 24-variant Grover catalog matrices
    qleak power             sample-size planning for a given effect size
    qleak simulate          run a scenario and dump the job log
    qleak attack            run an attack end to end on a scenario
    qleak mitigate          cost/benefit report for a countermeasure

Results go to stdout as CSV; diagnostics go to stderr. Exit status is 0
on success, 1 when a tolerance or distinguishability check fails, and 2
for usage errors. QLEAK_SEED provides a default seed.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import attacks, baseline, cloudsim, mitigations, trace as trace_mod
from .stats import PowerSpec, TimingDistribution, mc_power_oracle, required_sample_size

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_USAGE = 2

BACKEND_FLAG = {"sim": baseline.SIMULATOR, "qc": baseline.HARDWARE}

#: relative-error tolerances for table reproduction
TOL_LARGE = 0.02   # printed n >= 100
TOL_SMALL = 0.15   # printed n < 100


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _default_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QLEAK_SEED")
    return int(env) if env else 0


def _load_table(args) -> baseline.BaselineTable:
    if args.table:
        return baseline.load_table(args.table)
    return baseline.bundled_table()


def _spec(args) -> PowerSpec:
    return PowerSpec(alpha=args.alpha, power=args.power)


def _writer():
    return csv.writer(sys.stdout, lineterminator="\n")


# ---------------------------------------------------------------------------
# reproduce-table

def _table_row(table, name, backend, spec):
    entry = table.entry(name)
    printed = entry.required(backend)
    neighbor, computed = baseline.nearest_neighbor_requirement(
        table, name, backend, spec
    )
    if printed is None:
        return [name, backend, neighbor, "", f"{computed:.9g}", "", "skipped"]
    if printed == 1.0:
        ok = computed == 1.0
        rel = abs(computed - printed)
    else:
        rel = abs(computed - printed) / printed
        ok = rel <= (TOL_LARGE if printed >= 100 else TOL_SMALL)
    return [
        name, backend, neighbor, f"{printed:.9g}", f"{computed:.9g}",
        f"{rel:.3e}", "ok" if ok else "FAIL",
    ]


def cmd_reproduce_table(args) -> int:
    table = _load_table(args)
    spec = _spec(args)
    backends = [BACKEND_FLAG[args.backend]] if args.backend else list(baseline.BACKENDS)
    jobs = [(e.name, b) for b in backends for e in table.entries]
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        rows = list(
            pool.map(lambda nb: _table_row(table, nb[0], nb[1], spec), jobs)
        )
    w = _writer()
    w.writerow([
        "name", "backend", "nearest_neighbor", "printed_n",
        "computed_n", "rel_err", "status",
    ])
    failures = 0
    for row in rows:
        w.writerow(row)
        failures += row[-1] == "FAIL"
    if args.mc_check:
        _mc_spot_check(table, spec, _default_seed(args))
    _err(f"{len(rows)} cells, {failures} outside tolerance")
    return EXIT_TOLERANCE if failures else EXIT_OK


def _mc_spot_check(table, spec, seed) -> None:
    """Monte-Carlo power at the planned n for a few small-n cells."""
    for backend in baseline.BACKENDS:
        var = table.variance(backend)
        picks = sorted(
            table.entries,
            key=lambda e: baseline.nearest_neighbor_requirement(
                table, e.name, backend, spec
            )[1],
        )[:2]
        for e in picks:
            nb, n = baseline.nearest_neighbor_requirement(
                table, e.name, backend, spec
            )
            n_int = max(2, math.ceil(n))
            p = mc_power_oracle(
                table.timing(e.name, backend),
                table.timing(nb, backend),
                n_int,
                spec,
                seed=seed,
            )
            _err(
                f"mc-check {backend} {e.name!r} vs {nb!r}: "
                f"n={n_int} empirical power {p:.3f} (target {spec.power})"
            )


# ---------------------------------------------------------------------------
# matrix

def cmd_matrix(args) -> int:
    spec = _spec(args)
    catalog = baseline.grover_catalog()
    ovl_m, req_m = baseline.catalog_matrices(catalog, spec)
    labels = [f"i{v.iterations}k{v.key}" for v in sorted(catalog, key=lambda v: v.index)]
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        baseline.write_matrix_csv(out / "grover_ovl.csv", labels, ovl_m)
        baseline.write_matrix_csv(out / "grover_required.csv", labels, req_m)
        baseline.write_long_form_csv(out / "grover_pairs.csv", ovl_m, req_m)
        _err(f"matrices written to {out}")
    else:
        w = _writer()
        w.writerow(["i", "j", "ovl", "required_n"])
        k = ovl_m.shape[0]
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                w.writerow([i + 1, j + 1, f"{ovl_m[i, j]:.9g}", f"{req_m[i, j]:.9g}"])
    off = req_m[~np.isnan(req_m)]
    lo, hi = float(off.min()), float(off.max())
    _err(f"required-n range [{lo:.6g}, {hi:.6g}]")
    if lo < 500 or hi > 2e7:
        _err("envelope check failed: expected [500, 2e7]")
        return EXIT_TOLERANCE
    return EXIT_OK


# ---------------------------------------------------------------------------
# power

def cmd_power(args) -> int:
    spec = _spec(args)
    if args.effect_size is not None:
        d = args.effect_size
    elif args.delta_mean is not None and args.variance is not None:
        d = abs(args.delta_mean) / math.sqrt(args.variance)
    else:
        _err("power: give --effect-size or both --delta-mean and --variance")
        return EXIT_USAGE
    n = required_sample_size(d, spec)
    w = _writer()
    w.writerow(["effect_size", "alpha", "power", "required_n"])
    w.writerow([f"{d:.9g}", spec.alpha, spec.power, f"{n:.9g}"])
    if args.mc_check and math.isfinite(n):
        p = mc_power_oracle(
            TimingDistribution(0.0 + 1.0, 1.0),
            TimingDistribution(1.0 + d, 1.0),
            max(2, math.ceil(n)),
            spec,
            seed=_default_seed(args),
        )
        _err(f"mc-check: empirical power {p:.3f} at n={max(2, math.ceil(n))}")
        if abs(p - spec.power) > 0.05:
            return EXIT_TOLERANCE
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate / attack

def _run_scenario(args, seed_shift: int = 0):
    seed = _default_seed(args) + seed_shift
    scenario = cloudsim.load_scenario(args.scenario, seed=seed)
    return scenario, cloudsim.run_simulation(scenario)


def cmd_simulate(args) -> int:
    if not args.scenario:
        _err("simulate: --scenario is required")
        return EXIT_USAGE
    scenario, log = _run_scenario(args)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cloudsim.save_log_csv(log, out / "jobs.csv")
        _err(f"job log written to {out / 'jobs.csv'}")
    else:
        w = _writer()
        w.writerow(["job_id", "owner", "circuit", "queued_at", "started_at", "ended_at"])
        for r in log:
            w.writerow([
                r.job_id, r.owner, r.circuit,
                f"{r.queued_at:.9f}", f"{r.started_at:.9f}", f"{r.ended_at:.9f}",
            ])
    _err(
        f"{len(log)} jobs ({len(log.by_owner(cloudsim.VICTIM))} victim), "
        f"{log.truncations} truncated durations"
    )
    return EXIT_OK


def _trace_from_log(log) -> trace_mod.Trace:
    view = trace_mod.AttackerView.from_log(log)
    avg = trace_mod.estimate_victim_mean(view)
    return trace_mod.assemble_trace(view, avg)


def cmd_attack(args) -> int:
    if not args.scenario:
        _err("attack: --scenario is required")
        return EXIT_USAGE
    spec = _spec(args)
    backend = BACKEND_FLAG[args.backend or "qc"]
    w = _writer()
    kind = args.attack

    if kind in ("ca", "qm"):
        # null designs: two runs of the same scenario, different seeds
        _, log_a = _run_scenario(args, seed_shift=0)
        _, log_b = _run_scenario(args, seed_shift=1)
        verdict, points = attacks.null_distinguishability(
            _trace_from_log(log_a), _trace_from_log(log_b)
        )
        w.writerow(["attack", "verdict", "points"])
        w.writerow([kind.upper(), verdict, len(points)])
        if args.out_dir:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            attacks.save_dom_series_csv(points, out / f"{kind}_dom.csv")
        _err(f"{kind.upper()} null comparison: {verdict}")
        return EXIT_TOLERANCE if verdict == attacks.DISTINGUISHABLE else EXIT_OK

    _, log = _run_scenario(args)
    tr = _trace_from_log(log)
    if kind == "uc":
        table = _load_table(args)
        verdict = attacks.uc_classify(tr, table, backend, spec)
    elif kind == "co":
        verdict, ovl_m, req_m = attacks.co_identify(tr, baseline.grover_catalog(), spec)
        if args.out_dir:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            labels = [f"v{i}" for i in range(1, 25)]
            baseline.write_matrix_csv(out / "co_required.csv", labels, req_m)
    elif kind == "qp":
        devices = cloudsim.load_reference_devices(args.scenario)
        if len(devices) < 2:
            _err("attack qp: scenario needs a reference_devices list (>= 2)")
            return EXIT_USAGE
        scenario = cloudsim.load_scenario(args.scenario)
        verdict = attacks.qp_fingerprint(tr, devices, scenario.victim_circuit)
    else:
        _err(f"unknown attack {kind!r}")
        return EXIT_USAGE
    w.writerow(attacks.VERDICT_CSV_HEADER)
    w.writerow(verdict.csv_row())
    _err(
        f"{verdict.attack}: label={verdict.label!r} n={verdict.measurements_used}"
        + (" (under-powered)" if verdict.underpowered else "")
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# mitigate

def _build_mitigation(args) -> mitigations.Mitigation:
    return mitigations.Mitigation(
        kind=args.kind,
        added_variance=args.added_variance,
        layout_spread=args.layout_spread,
        layouts=args.layouts,
        pad_toward=args.pad_toward or args.reference,
        pad_fraction=args.pad_fraction,
        batch_factor=args.batch_factor,
    )


def cmd_mitigate(args) -> int:
    table = _load_table(args)
    backend = BACKEND_FLAG[args.backend or "qc"]
    try:
        m = _build_mitigation(args)
        report = mitigations.evaluate(
            m, table, backend, args.victim, args.reference, _spec(args)
        )
    except (ValueError, KeyError) as exc:
        _err(f"mitigate: {exc}")
        return EXIT_USAGE
    w = _writer()
    w.writerow(mitigations.REPORT_CSV_HEADER)
    w.writerow(report.csv_row())
    _err(f"{m.kind}: requirement inflation x{report.inflation:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qleak", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=False):
        sp.add_argument("--table", help="baseline table CSV (default: bundled)")
        sp.add_argument("--backend", choices=("sim", "qc"))
        sp.add_argument("--alpha", type=float, default=0.05)
        sp.add_argument("--power", type=float, default=0.80)
        sp.add_argument("--seed", type=int, default=None,
                        help="override QLEAK_SEED / 0")
        sp.add_argument("--out-dir", default=None)
        sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        sp.add_argument("--mc-check", action="store_true",
                        help="cross-check analytics with Monte Carlo")
        if scenario:
            sp.add_argument("--scenario", help="scenario YAML file")

    sp = sub.add_parser("reproduce-table", help="recompute the requirement table")
    common(sp)
    sp.set_defaults(func=cmd_reproduce_table)

    sp = sub.add_parser("matrix", help="Grover catalog overlap/requirement matrices")
    common(sp)
    sp.set_defaults(func=cmd_matrix)

    sp = sub.add_parser("power", help="sample-size planning")
    common(sp)
    sp.add_argument("--effect-size", type=float, default=None)
    sp.add_argument("--delta-mean", type=float, default=None)
    sp.add_argument("--variance", type=float, default=None)
    sp.set_defaults(func=cmd_power)

    sp = sub.add_parser("simulate", help="run a scenario, dump the job log")
    common(sp, scenario=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("attack", help="run an attack on a scenario")
    common(sp, scenario=True)
    sp.add_argument("--attack", choices=("uc", "co", "ca", "qm", "qp"),
                    required=True, dest="attack")
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("mitigate", help="evaluate a countermeasure")
    common(sp)
    sp.add_argument("--kind", choices=mitigations.KINDS, required=True)
    sp.add_argument("--victim", required=True)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--added-variance", type=float, default=0.0)
    sp.add_argument("--layout-spread", type=float, default=0.0)
    sp.add_argument("--layouts", type=int, default=2)
    sp.add_argument("--pad-toward", default="")
    sp.add_argument("--pad-fraction", type=float, default=1.0)
    sp.add_argument("--batch-factor", type=int, default=1)
    sp.set_defaults(func=cmd_mitigate)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (cloudsim.ScenarioError, baseline.TableFormatError, FileNotFoundError) as exc:
        _err(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
