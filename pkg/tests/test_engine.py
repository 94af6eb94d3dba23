import io
import math
import random
from dataclasses import replace

import pytest

from duplexsim.config import build, preset
from duplexsim.duplexing import FDD, DynamicTDD, FlexibleFDD
from duplexsim.engine import (
    DROPPED,
    RECORD_FIELDS,
    CliCoupling,
    Engine,
    SimConfig,
    StaticTDD,
    keyed_uniform,
    run,
    schedule_tti,
    transmission_outcome,
    write_records,
)
from duplexsim.latency import ULScheme
from duplexsim.numerology import ConfigError
from duplexsim.traffic import Direction, Packet, TrafficConfig

import scenarios

LIGHT = TrafficConfig(k_dl=5, k_ul=5, lambda_dl=50, lambda_ul=50)


def small(**kw) -> SimConfig:
    base = dict(n_cells=2, traffic=LIGHT, horizon_symbols=14 * 200, seed=3)
    base.update(kw)
    return SimConfig(**base)


class Entry:
    def __init__(self, name, remaining):
        self.name, self.remaining = name, remaining


def test_schedule_tti_examples():
    p = Entry("p", 400)
    assert [(e.name, b) for e, b in schedule_tti(500, [], [p])] == [("p", 400)]
    assert [(e.name, b) for e, b in schedule_tti(240, [], [p])] == [("p", 240)]
    r, n = Entry("r", 400), Entry("n", 400)
    assert [(e.name, b) for e, b in schedule_tti(400, [r], [n])] == [("r", 400)]
    assert [(e.name, b) for e, b in schedule_tti(500, [Entry("r", 400)], [n], segmentation=False)] == [("r", 400)]


def test_segmented_packet_finishes_on_second_tti():
    cfg = SimConfig(n_cells=1, duplex=FDD(), n_prb=60, bits_per_prb_per_symbol=1, traffic=TrafficConfig(0, 0),
                    horizon_symbols=100, bler_base=0.0)
    # 30 DL PRBs x 1 bit x 4 symbols = 120 bits per TTI (< 400)
    res = run(cfg, [Packet(0, 0, 0, Direction.DL, 0, 400)], audit=True)
    assert res.records[0].breakdown.tx > 4


def test_transmission_outcome():
    rng = random.Random(0)
    assert all(transmission_outcome(rng.random(), 0.0)[0] for _ in range(1000))
    assert transmission_outcome(0.999, 0.01, 1.0) == (False, "cli")
    assert transmission_outcome(0.005, 0.01, 0.0) == (False, "channel")
    fails = sum(not transmission_outcome(keyed_uniform(9, 0, i, 1), 0.01)[0] for i in range(100_000))
    assert abs(fails - 1000) <= 3 * math.sqrt(100_000 * 0.01 * 0.99)


def test_keyed_uniform_is_stable():
    assert keyed_uniform(1, 2, 3) == keyed_uniform(1, 2, 3)
    assert keyed_uniform(1, 2, 3) != keyed_uniform(1, 2, 4)
    assert 0.0 <= keyed_uniform(5, 0) < 1.0


def test_walkthrough_dl_through_engine():
    cfg, errors = build({**preset("walkthrough"), "traffic": {"lambda_dl": 0.0, "lambda_ul": 0.0}})
    assert not errors
    res = run(cfg, [Packet(0, 0, 0, Direction.DL, 0, 200)], forced_failures={0: 1}, audit=True)
    assert res.records[0].breakdown.total_symbols == 22


def test_oracle_equivalence_sample():
    rng = random.Random(11)
    for _ in range(300):
        sc = scenarios.random_scenario(rng)
        rec, ref = scenarios.simulate(sc), scenarios.oracle(sc)
        assert rec.breakdown.components() == ref.components()
        assert rec.breakdown.total_symbols == ref.total_symbols == rec.breakdown.component_sum()


def test_same_seed_identical_records():
    cfg = small(cli=CliCoupling.symmetric(2, 0.0))
    a, b = run(cfg), run(cfg)
    ba, bb = io.StringIO(), io.StringIO()
    write_records(a.records, ba, 35.7)
    write_records(b.records, bb, 35.7)
    assert ba.getvalue() == bb.getvalue() and a.schedule_log == b.schedule_log


def test_fdd_zero_bler_no_harq_no_switch():
    res = run(small(duplex=FDD(), bler_base=0.0, bler_retx=0.0))
    assert res.records
    assert all(r.breakdown.harq == 0 and r.breakdown.tdd_switch == 0 for r in res.records)


def test_update_pattern_follows_buffers():
    eng = Engine(SimConfig(n_cells=1, duplex=DynamicTDD(3), traffic=TrafficConfig(0, 0), horizon_symbols=100))
    eng.z[0] = [800, 400]
    eng.update_pattern(0)
    assert [eng.sched[0].pattern(s) for s in range(3)] == ["DDDDFUUUUDDDDF"] * 3
    assert eng.schedule_log == ["0,0,DDDDFUUUUDDDDF", "0,1,DDDDFUUUUDDDDF", "0,2,DDDDFUUUUDDDDF"]


def test_empty_buffers_default_format_no_grants():
    eng = Engine(SimConfig(n_cells=2, duplex=DynamicTDD(2), traffic=TrafficConfig(0, 0), horizon_symbols=100))
    eng.update_pattern(0)
    assert eng.sched[1].pattern(1) == "DDDDDDFUUUUUUF"
    res = Engine(SimConfig(n_cells=1, duplex=DynamicTDD(2), ul_scheme=ULScheme.DG,
                           traffic=TrafficConfig(0, 0), horizon_symbols=100))
    res.run()
    assert res.n_allocations == 0


def test_one_update_per_frame():
    eng = Engine(small(n_cells=1, duplex=DynamicTDD(20)))
    times = []
    orig = eng.update_pattern
    eng.update_pattern = lambda now: (times.append(now), orig(now))
    eng.run()
    assert len(times) > 3
    assert times == [280 * k for k in range(len(times))]


def test_max_harq_drop():
    cfg = SimConfig(n_cells=1, duplex=FDD(), max_harq=2, traffic=TrafficConfig(0, 0), horizon_symbols=100)
    rec = run(cfg, [Packet(3, 0, 0, Direction.UL, 0, 400)], forced_failures={0: 10}, audit=True).records[0]
    assert rec.outcome == DROPPED and rec.n_transmissions == 3 and rec.delivery_symbol is None
    assert tuple(rec.failure_causes) == ("channel",) * 3


@pytest.mark.parametrize("mode", [FDD(), DynamicTDD(1), DynamicTDD(20, True), FlexibleFDD(0.2, 2),
                                  StaticTDD(("DDDDFUUUUDDDDF",))])
@pytest.mark.parametrize("scheme", [ULScheme.GF, ULScheme.DG])
def test_audit_all_modes(mode, scheme):
    res = run(small(duplex=mode, ul_scheme=scheme, cli=CliCoupling.symmetric(2, 0.2)), audit=True)
    assert res.records
    for r in res.records:
        assert r.breakdown.component_sum() == r.breakdown.total_symbols
        if r.delivered:
            assert r.delivery_symbol == r.packet.arrival_symbol + r.breakdown.total_symbols


def test_flexible_fdd_logs_partitions():
    res = run(small(duplex=FlexibleFDD(0.2, 4)))
    assert res.schedule_log and "guard=10" in res.schedule_log[0]


def test_cli_raises_ul_transmissions():
    base = small(n_cells=3, duplex=DynamicTDD(1), traffic=TrafficConfig(lambda_dl=300, lambda_ul=300))
    ntx = []
    for chi in (0.0, 0.3):
        res = run(replace(base, cli=CliCoupling.symmetric(3, chi)))
        ul = [r.n_transmissions for r in res.records if r.packet.direction is Direction.UL]
        ntx.append(sum(ul) / len(ul))
    assert ntx[1] > ntx[0]
    causes = {c for r in res.records for c in r.failure_causes}
    assert "cli" in causes


def test_validation_errors():
    with pytest.raises(ConfigError):
        SimConfig(bler_base=1.0).validate()
    with pytest.raises(ConfigError):
        SimConfig(segmentation=False, n_prb=10, bits_per_prb_per_symbol=1).validate()
    with pytest.raises(ConfigError):
        SimConfig(n_cells=2, cli=CliCoupling(((0.0, 2.0), (0.0, 0.0)))).validate()
    with pytest.raises(ConfigError):
        run(SimConfig(n_cells=1, traffic=TrafficConfig(0, 0)), [Packet(0, 4, 0, Direction.DL, 0, 10)])


def test_record_csv_columns():
    res = run(small(n_cells=1, horizon_symbols=280))
    buf = io.StringIO()
    write_records(res.records, buf, 35.714)
    lines = buf.getvalue().splitlines()
    assert lines[0].split(",") == list(RECORD_FIELDS)
    assert len(lines) == len(res.records) + 1
