"""Acceptance criteria 1-11.

Each test prints one PASS/FAIL line (also collected in the terminal summary)
and asserts both the criterion and its runtime budget.
"""
import io
import math
import random
import time
from decimal import Decimal

import numpy as np
import pytest

from duplexsim.config import build, preset
from duplexsim.duplexing import default_slot_format, select_slot_format
from duplexsim.engine import Engine, run, write_records
from duplexsim.latency import walkthrough_dl, walkthrough_ul_dg
from duplexsim.metrics import LatencySeries, ecdf_at, outage_latency, scheduling_delay_ecdf
from duplexsim.traffic import Direction, generate_arrivals

import scenarios

pytestmark = pytest.mark.filterwarnings("error")


def config(raw: dict):
    cfg, errors = build(raw)
    assert not errors, errors
    return cfg


def outage(records, eps, direction=None) -> int:
    sym, reliable = outage_latency(LatencySeries.from_records(records, 1.0, direction), eps)
    assert reliable
    return sym


def mean_ntx(records, direction) -> float:
    return float(np.mean([r.n_transmissions for r in records if int(r.packet.direction) == direction]))


SWEEP = {"n_cells": 3, "horizon_ms": 2000.0}


def test_c1_dl_walkthrough(report):
    t0 = time.perf_counter()
    bd = walkthrough_dl()
    dt = time.perf_counter() - t0
    ok = bd.total_symbols == 22 and dt < 1e-3
    report("C1", ok, f"DL total = {bd.total_symbols} symbols (want 22)", dt)
    assert bd.total_symbols == 22
    assert dt < 1e-3


def test_c2_ul_dg_walkthrough(report):
    t0 = time.perf_counter()
    bd = walkthrough_ul_dg()
    dt = time.perf_counter() - t0
    ok = bd.total_symbols == 30 and dt < 1e-3
    report("C2", ok, f"UL DG total = {bd.total_symbols} symbols (want 30)", dt)
    assert bd.total_symbols == 30
    assert dt < 1e-3


def test_c3_oracle_equivalence(report):
    rng = random.Random(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        sc = scenarios.random_scenario(rng)
        rec, ref = scenarios.simulate(sc), scenarios.oracle(sc)
        if rec.breakdown.total_symbols != ref.total_symbols or rec.breakdown.components() != ref.components():
            mismatches += 1
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 10
    report("C3", ok, f"{200 - mismatches}/200 engine totals equal the analytic oracle", dt)
    assert mismatches == 0
    assert dt < 10


def test_c4_ratio_mapping(report):
    t0 = time.perf_counter()
    two_thirds = str(select_slot_format(2 / 3))
    undefined = select_slot_format(None)
    eng = Engine(config({"n_cells": 2, "horizon_ms": 10.0, "duplex": {"gamma": 2},
                         "traffic": {"lambda_dl": 0.0, "lambda_ul": 0.0}}))
    eng.run()
    logged = {line.split(",")[2] for line in eng.schedule_log}
    bad = []
    for k in range(101):
        f = select_slot_format(k / 100)
        if len(f.symbols) != 14 or not f.guarded():
            bad.append(k)
    dt = time.perf_counter() - t0
    checks = (
        two_thirds == "DDDDFUUUUDDDDF",
        undefined == default_slot_format() and undefined.count("D") == undefined.count("U"),
        eng.n_allocations == 0 and logged == {str(default_slot_format())},
        not bad,
    )
    ok = all(checks) and dt < 1
    report("C4", ok, f"2/3 -> {two_thirds}; empty -> {undefined} with {eng.n_allocations} grants; "
                     f"{101 - len(bad)}/101 ratios valid", dt)
    assert all(checks)
    assert dt < 1


def _dg_gap(cfgs):
    out = {}
    for name, cfg in cfgs.items():
        recs = run(cfg).records
        ul = [r for r in recs if r.packet.direction is Direction.UL and r.delivered]
        out[name] = (len(ul), outage(recs, 1e-3, 1), float(np.mean([r.breakdown.dg for r in ul])))
    return out


@pytest.mark.slow
def test_c5_grant_free_vs_dynamic_grant(report):
    base = {**preset("defaults"), "horizon_ms": 8000.0, "traffic": {"load_mbps": 0.5}}
    cfgs = {s: config({**base, "ul_scheme": s}) for s in ("GF", "DG")}
    t0 = time.perf_counter()
    res = _dg_gap(cfgs)
    dt = time.perf_counter() - t0
    (n_gf, q_gf, _), (n_dg, q_dg, dg_mean) = res["GF"], res["DG"]
    need = 0.8 * dg_mean
    ok = min(n_gf, n_dg) >= 100_000 and q_dg - q_gf >= need and dt < 120
    report("C5", ok, f"UL q1e-3 GF={q_gf} DG={q_dg} symbols, gap {q_dg - q_gf} >= 0.8*mean dg {need:.1f}; "
                     f"{min(n_gf, n_dg)} UL packets", dt)
    assert min(n_gf, n_dg) >= 100_000
    assert q_dg - q_gf >= need
    assert dt < 120


@pytest.mark.slow
def test_c6_update_period(report):
    modes = {
        "tdd_slot": {"mode": "dynamic_tdd", "gamma": "slot"},
        "tdd_frame": {"mode": "dynamic_tdd", "gamma": "frame"},
        "fdd": {"mode": "fdd"},
    }
    t0 = time.perf_counter()
    q = {}
    for name, dup in modes.items():
        cfg = config({**SWEEP, "duplex": dup, "traffic": {"load_mbps": 2.5}})
        q[name] = outage(run(cfg).records, 1e-3)
    dt = time.perf_counter() - t0
    trend = q["tdd_slot"] < q["tdd_frame"] and q["fdd"] < q["tdd_slot"] and q["fdd"] < q["tdd_frame"]
    ok = trend and dt < 300
    report("C6", ok, f"q1e-3 TDD slot={q['tdd_slot']} < TDD frame={q['tdd_frame']}, FDD={q['fdd']} lowest", dt)
    assert trend
    assert dt < 300


@pytest.mark.slow
def test_c7_cross_link_interference(report):
    t0 = time.perf_counter()
    q, ntx = {}, {}
    for chi in (0.0, 0.3):
        cfg = config({**SWEEP, "duplex": {"gamma": "slot"}, "traffic": {"load_mbps": 2.5}, "cli": {"chi": chi}})
        recs = run(cfg).records
        q[chi], ntx[chi] = outage(recs, 1e-3, 1), mean_ntx(recs, 1)
    dt = time.perf_counter() - t0
    trend = q[0.3] > q[0.0] and ntx[0.3] > ntx[0.0]
    ok = trend and dt < 300
    report("C7", ok, f"UL q1e-3 {q[0.0]} -> {q[0.3]} symbols, UL mean tx {ntx[0.0]:.4f} -> {ntx[0.3]:.4f}", dt)
    assert trend
    assert dt < 300


@pytest.mark.slow
def test_c8_subcarrier_spacing(report):
    base = {**SWEEP, "segmentation": False, "duplex": {"gamma": "slot"}, "traffic": {"load_mbps": 2.5}}
    t0 = time.perf_counter()
    # identical symbol-domain trace replayed at both spacings
    c30, c60 = config({**base, "scs_khz": 30}), config({**base, "scs_khz": 60})
    trace = generate_arrivals(c30.traffic, c30.numerology, c30.horizon_symbols, c30.seed, c30.n_cells)
    r30, r60 = run(c30, trace).records, run(c60, trace).records
    us30, us60 = c30.numerology.symbol_duration_us, c60.numerology.symbol_duration_us
    halves = all(
        a.breakdown.total_symbols == b.breakdown.total_symbols
        and math.isclose(b.breakdown.total_symbols * us60, 0.5 * a.breakdown.total_symbols * us30, rel_tol=1e-12)
        for a, b in zip(r30, r60)
    ) and len(r30) == len(r60)
    # each spacing under its own offered load
    q = {}
    for cfg in (c30, c60):
        recs = run(cfg).records
        q[cfg.scs_khz] = outage(recs, 1e-3, 1) * cfg.numerology.symbol_duration_us
    dt = time.perf_counter() - t0
    ok = halves and q[60] < q[30] and dt < 300
    report("C8", ok, f"{len(r30)} replayed packets halve exactly: {halves}; "
                     f"UL q1e-3 30 kHz={q[30]:.1f} us, 60 kHz={q[60]:.1f} us", dt)
    assert halves
    assert q[60] < q[30]
    assert dt < 300


@pytest.mark.slow
def test_c9_tti_size(report):
    t0 = time.perf_counter()
    ecdf, median = {}, {}
    for mode, dup in (("tdd", {"mode": "dynamic_tdd", "gamma": "frame"}), ("fdd", {"mode": "fdd"})):
        for mu in (2, 4, 7, 14):
            cfg = config({**SWEEP, "tti_symbols": mu, "duplex": dup, "traffic": {"load_mbps": 1.0}})
            recs = run(cfg).records
            ecdf[mode, mu] = scheduling_delay_ecdf(recs)
            median[mode, mu] = float(np.median([r.breakdown.scheduling_delay for r in recs if r.delivered]))
    dt = time.perf_counter() - t0
    grid = np.union1d(ecdf["tdd", 14][0], ecdf["tdd", 4][0])
    f14, f4 = ecdf_at(ecdf["tdd", 14], grid), ecdf_at(ecdf["tdd", 4], grid)
    crossings = grid[f14 > f4]
    dominates = crossings.size == 0
    fdd4_smallest = all(median["fdd", 4] <= m for m in median.values())
    ok = dominates and fdd4_smallest and dt < 300
    medians = ", ".join(f"{m}{mu}={v:g}" for (m, mu), v in sorted(median.items()))
    report("C9", ok, f"TDD mu14 dominates mu4: {dominates} (F14 > F4 at {crossings.size} points, "
                     f"max gap {float((f14 - f4).max()):.3f}); FDD mu4 smallest median: {fdd4_smallest} [{medians}]", dt)
    assert fdd4_smallest
    assert dominates
    assert dt < 300


def test_c10_determinism_and_conservation(report):
    cfg = config({"n_cells": 3, "horizon_ms": 1400.0, "ul_scheme": "DG", "duplex": {"gamma": "slot"},
                  "traffic": {"load_mbps": 1.0}, "cli": {"chi": 0.2}})
    t0 = time.perf_counter()
    audited = run(cfg, audit=True)  # raises on any conservation or buffer-view violation
    plain = run(cfg)
    dumps = []
    for res in (audited, plain):
        buf = io.StringIO()
        write_records(res.records, buf, cfg.numerology.symbol_duration_us)
        dumps.append((buf.getvalue(), "\n".join(res.schedule_log)))
    dt = time.perf_counter() - t0
    n = len(audited.records)
    ok = dumps[0] == dumps[1] and n >= 10_000 and dt < 60
    report("C10", ok, f"{n} packets, {audited.event_count} audited events, records and schedule log "
                      f"byte-identical: {dumps[0] == dumps[1]}", dt)
    assert n >= 10_000
    assert dumps[0] == dumps[1]
    assert dt < 60


def test_c11_quantile_oracle(report):
    rng = random.Random(77)
    eps_set = (0.2, 1e-2, 1e-3)
    t0 = time.perf_counter()
    mismatches = 0
    for i in range(1000):
        n = rng.randint(1, 10_000)
        vals = [rng.randint(0, 5000) for _ in range(n)]
        eps = eps_set[i % 3]
        ordered = sorted(vals)
        k = math.ceil(Decimal(n) * (1 - Decimal(str(eps))))
        want = ordered[min(n, max(1, k)) - 1]
        got, _ = outage_latency(LatencySeries(np.array(vals), 1.0), eps)
        mismatches += got != want
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 10
    report("C11", ok, f"{1000 - mismatches}/1000 series match sort-and-rank", dt)
    assert mismatches == 0
    assert dt < 10
