import io
import math

import pytest

from duplexsim.numerology import ConfigError, make_numerology
from duplexsim.traffic import (
    Direction,
    TrafficConfig,
    generate_arrivals,
    lambda_for_load,
    offered_load,
    read_trace,
    write_trace,
)

NUM = make_numerology(30)


def test_offered_load():
    assert offered_load(TrafficConfig(k_dl=10))["dl_bps"] == pytest.approx(0.4e6)
    assert offered_load(TrafficConfig(k_dl=0, k_ul=0))["total_bps"] == 0
    assert offered_load(TrafficConfig(k_dl=50, k_ul=50))["total_bps"] == pytest.approx(4.0e6)


def test_lambda_for_load_inverts_offered_load():
    lam = lambda_for_load(2.5e6, 10, 400)
    assert offered_load(TrafficConfig(lambda_dl=lam, lambda_ul=lam))["total_bps"] == pytest.approx(2.5e6)


def test_zero_rate_is_empty():
    assert generate_arrivals(TrafficConfig(lambda_dl=0, lambda_ul=0), NUM, 28_000, 1) == []


def test_deterministic_stream():
    a = generate_arrivals(TrafficConfig(), NUM, 28_000, 7, n_cells=2)
    b = generate_arrivals(TrafficConfig(), NUM, 28_000, 7, n_cells=2)
    assert a == b
    assert generate_arrivals(TrafficConfig(), NUM, 28_000, 8, n_cells=2) != a


def test_poisson_count_within_three_sigma():
    cfg = TrafficConfig(k_dl=1, k_ul=0, lambda_dl=100)
    n = len(generate_arrivals(cfg, NUM, 10 * NUM.symbols_per_second, 3))
    assert abs(n - 1000) <= 3 * math.sqrt(1000)


def test_stream_sorted_with_sequential_ids():
    pk = generate_arrivals(TrafficConfig(), NUM, 28_000, 1, n_cells=3)
    assert [p.id for p in pk] == list(range(len(pk)))
    assert all(a.arrival_symbol <= b.arrival_symbol for a, b in zip(pk, pk[1:]))
    assert all(0 <= p.arrival_symbol < 28_000 for p in pk)


def test_adding_cells_keeps_existing_substreams():
    one = [p for p in generate_arrivals(TrafficConfig(), NUM, 28_000, 5, n_cells=1)]
    two = [p for p in generate_arrivals(TrafficConfig(), NUM, 28_000, 5, n_cells=2) if p.cell_id == 0]
    strip = lambda ps: [(p.arrival_symbol, p.ue_id, p.direction) for p in ps]  # noqa: E731
    assert strip(one) == strip(two)


def test_trace_roundtrip():
    pk = generate_arrivals(TrafficConfig(), NUM, 5_000, 2)
    buf = io.StringIO()
    write_trace(pk, buf)
    buf.seek(0)
    assert read_trace(buf) == pk


def test_trace_rejects_bad_header():
    with pytest.raises(ConfigError):
        read_trace(io.StringIO("a,b\n1,2\n"))


def test_negative_config_rejected():
    with pytest.raises(ConfigError):
        generate_arrivals(TrafficConfig(k_dl=-1), NUM, 100, 1)


def test_direction_sizes():
    cfg = TrafficConfig(f_dl_bits=100, f_ul_bits=300)
    pk = generate_arrivals(cfg, NUM, 28_000, 1)
    assert {p.size_bits for p in pk if p.direction is Direction.DL} == {100}
    assert {p.size_bits for p in pk if p.direction is Direction.UL} == {300}
