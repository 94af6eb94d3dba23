"""Closed-form single-packet latency timelines.

Walks one packet through an empty cell symbol by symbol and splits its
one-way latency into processing, switching, alignment, transmission,
grant and HARQ components.  The engine must reproduce these totals
exactly for lone packets, so this module deliberately shares nothing
with it beyond the schedule lookup and the TTI grid.

Waiting time is attributed per symbol: to ``tdd_switch`` while the
symbol cannot carry the packet's direction (wrong direction or guard),
to ``frame_align`` while it could but no usable TTI or control
opportunity has been reached yet.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields
from typing import Optional, Union

from .duplexing import CellSchedule
from .numerology import SYMBOLS_PER_SLOT, ConfigError, TtiGrid
from .traffic import Direction

COMPONENTS = ("bs_proc", "queue", "tdd_switch", "frame_align", "tx", "dg", "harq", "ue_proc")


class ULScheme(str, enum.Enum):
    GF = "GF"
    DG = "DG"


class ScheduleStarvation(RuntimeError):
    """No usable opportunity exists within the searched horizon."""


@dataclass(frozen=True)
class DelayConfig:
    """Processing and control-signalling delays, all in OFDM symbols."""

    bs_proc: int = 2
    ue_proc_dl: int = 5
    ue_proc_ul_prep: int = 6
    nack_tx_dl: int = 1
    nack_tx_ul: int = 1
    sr_tx: int = 1
    sg_tx: int = 1
    sr_periodicity_ttis: int = 16
    sg_delay_ttis: int = 4
    target_bler: float = 0.01

    def validate(self) -> None:
        for f in fields(self):
            if f.name != "target_bler" and not isinstance(getattr(self, f.name), int):
                raise ConfigError(f"delays.{f.name} must be an integer symbol count")
            if getattr(self, f.name) < 0:
                raise ConfigError(f"delays.{f.name} must be >= 0")
        if self.ue_proc_ul_prep <= self.ue_proc_dl:
            raise ConfigError("delays.ue_proc_ul_prep must exceed delays.ue_proc_dl")
        for name in ("nack_tx_dl", "nack_tx_ul", "sr_tx", "sg_tx", "sr_periodicity_ttis"):
            if getattr(self, name) < 1:
                raise ConfigError(f"delays.{name} must be >= 1")
        if not 0.0 <= self.target_bler < 1.0:
            raise ConfigError("delays.target_bler must lie in [0, 1)")


# UE capability presets: PDSCH decode / PUSCH preparation times from the
# 4.5/9 and 5.5/11 symbol figures, rounded up to whole symbols.
PROCESSING_PRESETS = {
    "fast": {"ue_proc_dl": 5, "ue_proc_ul_prep": 6},
    "slow": {"ue_proc_dl": 9, "ue_proc_ul_prep": 11},
}

# Timeline used for the two-symbol-TTI walkthroughs (single packet, one
# retransmission, 30 kHz): the DL packet lands after 22 symbols and the
# dynamic-grant UL packet after 30.  See WALKTHROUGH_SCHEDULE / WALKTHROUGH_ARRIVAL.
WALKTHROUGH_DELAYS = DelayConfig(
    bs_proc=1,
    ue_proc_dl=5,
    ue_proc_ul_prep=6,
    nack_tx_dl=1,
    nack_tx_ul=1,
    sr_tx=2,
    sg_tx=2,
    sr_periodicity_ttis=1,
    sg_delay_ttis=0,
    target_bler=0.01,
)
WALKTHROUGH_TTI_SYMBOLS = 2
WALKTHROUGH_SCHEDULE = ("UDDFUUUUDDDDFU",)
WALKTHROUGH_ARRIVAL = 0


def walkthrough_schedule() -> CellSchedule:
    return CellSchedule.repeating(*WALKTHROUGH_SCHEDULE)


@dataclass
class LatencyBreakdown:
    direction: Direction
    arrival_symbol: int
    total_symbols: int = 0
    bs_proc: int = 0
    queue: int = 0
    tdd_switch: int = 0
    frame_align: int = 0
    tx: int = 0
    dg: int = 0
    harq: int = 0
    ue_proc: int = 0
    spans: list = field(default_factory=list, repr=False, compare=False)

    def component_sum(self) -> int:
        return sum(getattr(self, c) for c in COMPONENTS)

    def components(self) -> dict[str, int]:
        return {c: getattr(self, c) for c in COMPONENTS}

    @property
    def scheduling_delay(self) -> int:
        return self.queue + self.tdd_switch + self.frame_align


def _char(sched: CellSchedule, s: int) -> str:
    p = sched.pattern(s // SYMBOLS_PER_SLOT)
    if p is None:
        raise ScheduleStarvation(f"schedule undecided at symbol {s}")
    return p[s % SYMBOLS_PER_SLOT]


def _ok(ch: str, want: str) -> bool:
    return ch == want or ch == "B"


class _Walker:
    def __init__(self, sched: CellSchedule, tti: TtiGrid, limit: int):
        self.sched = sched
        self.tti = tti
        self.limit = limit

    def _check(self, s: int) -> None:
        if s > self.limit:
            raise ScheduleStarvation(f"no opportunity before symbol {self.limit}")

    def control(self, t: int, want: str) -> int:
        """First control opportunity for direction ``want`` at or after t."""
        s = t
        while True:
            self._check(s)
            ch = _char(self.sched, s)
            if _ok(ch, want) and (self.tti.is_boundary(s) or not _ok(_char(self.sched, s - 1), want)):
                return s
            s += 1

    def sr_opportunity(self, t: int, period_ttis: int) -> int:
        k0 = self.tti.index(t) // period_ttis
        o = self.control(self.tti.start_of(k0 * period_ttis), "U")
        if o >= t:
            return o
        return self.control(self.tti.start_of((k0 + 1) * period_ttis), "U")

    def transmit(self, r: int, want: str, bits: Optional[int], bits_per_symbol: Optional[int]):
        """Greedy TTI-by-TTI transmission from ready time r.

        Returns (end, spans).  Without a capacity model the first TTI with a
        usable symbol carries the whole packet.
        """
        left = bits
        spans = []
        w = self.tti.next_boundary(r)
        while True:
            self._check(w)
            _, w_end = self.tti.window(w)
            usable = [s for s in range(w, w_end) if _ok(_char(self.sched, s), want)]
            if usable:
                spans.append((usable[0], usable[-1] + 1))
                if left is None:
                    return usable[-1] + 1, spans
                left -= len(usable) * bits_per_symbol
                if left <= 0:
                    return usable[-1] + 1, spans
            w = w_end


def _classify_wait(bd: LatencyBreakdown, sched: CellSchedule, r: int, end: int, spans, want: str) -> None:
    """Split [r, end) of a first attempt into tx / tdd_switch / frame_align."""
    in_tx = set()
    for a, b in spans:
        in_tx.update(range(a, b))
    prev = None
    for s in range(r, end):
        if s in in_tx:
            kind = "tx"
        elif not _ok(_char(sched, s), want):
            kind = "tdd_switch"
        else:
            kind = "frame_align"
        setattr(bd, kind, getattr(bd, kind) + 1)
        if prev and prev[0] == kind and prev[2] == s:
            prev[2] = s + 1
        else:
            prev = [kind, s, s + 1]
            bd.spans.append(prev)


def _span(bd: LatencyBreakdown, kind: str, a: int, b: int) -> None:
    if b > a:
        bd.spans.append([kind, a, b])


def _prepare(delays: DelayConfig, sched: CellSchedule, tti_symbols: int, arrival: int, limit: Optional[int]):
    delays.validate()
    if arrival < 0:
        raise ValueError("arrival symbol must be non-negative")
    if limit is None:
        known = sched.known_slots
        limit = known * SYMBOLS_PER_SLOT - 1 if known is not None else arrival + 200 * SYMBOLS_PER_SLOT
    return _Walker(sched, TtiGrid(tti_symbols), limit)


def dl_latency(
    delays: DelayConfig,
    sched: CellSchedule,
    arrival_symbol: int,
    n_harq: int,
    *,
    tti_symbols: int = 4,
    packet_bits: Optional[int] = None,
    bits_per_symbol: Optional[int] = None,
    search_limit: Optional[int] = None,
) -> LatencyBreakdown:
    """DL one-way latency of a lone packet that fails ``n_harq`` times."""
    if n_harq < 0:
        raise ValueError("n_harq must be >= 0")
    walk = _prepare(delays, sched, tti_symbols, arrival_symbol, search_limit)
    bd = LatencyBreakdown(Direction.DL, arrival_symbol)
    t = arrival_symbol + delays.bs_proc
    bd.bs_proc = delays.bs_proc
    _span(bd, "bs_proc", arrival_symbol, t)

    end, spans = walk.transmit(t, "D", packet_bits, bits_per_symbol)
    _classify_wait(bd, sched, t, end, spans, "D")
    first_end = end
    for _ in range(n_harq):
        t = end + delays.ue_proc_dl
        t = walk.control(t, "U") + delays.nack_tx_ul + delays.bs_proc
        end, _ = walk.transmit(t, "D", packet_bits, bits_per_symbol)
    bd.harq = end - first_end
    _span(bd, "harq", first_end, end)
    bd.ue_proc = delays.ue_proc_dl
    _span(bd, "ue_proc", end, end + delays.ue_proc_dl)
    bd.total_symbols = end + delays.ue_proc_dl - arrival_symbol
    return bd


def dg_eligibility(delays: DelayConfig, walk: _Walker, arrival: int) -> int:
    t = arrival + delays.ue_proc_dl
    sr = walk.sr_opportunity(t, delays.sr_periodicity_ttis)
    earliest = max(sr + delays.sr_tx + delays.bs_proc, walk.tti.start_of(walk.tti.index(sr) + delays.sg_delay_ttis))
    sg = walk.control(earliest, "D")
    return sg + delays.sg_tx + delays.ue_proc_ul_prep


def ul_latency(
    delays: DelayConfig,
    sched: CellSchedule,
    arrival_symbol: int,
    n_harq: int,
    scheme: Union[ULScheme, str] = ULScheme.GF,
    *,
    tti_symbols: int = 4,
    packet_bits: Optional[int] = None,
    bits_per_symbol: Optional[int] = None,
    search_limit: Optional[int] = None,
) -> LatencyBreakdown:
    """UL one-way latency of a lone packet that fails ``n_harq`` times."""
    if n_harq < 0:
        raise ValueError("n_harq must be >= 0")
    scheme = ULScheme(scheme)
    walk = _prepare(delays, sched, tti_symbols, arrival_symbol, search_limit)
    bd = LatencyBreakdown(Direction.UL, arrival_symbol)
    t = arrival_symbol
    if scheme is ULScheme.DG:
        t = dg_eligibility(delays, walk, arrival_symbol)
        bd.dg = t - arrival_symbol
        _span(bd, "dg", arrival_symbol, t)

    end, spans = walk.transmit(t, "U", packet_bits, bits_per_symbol)
    _classify_wait(bd, sched, t, end, spans, "U")
    first_end = end
    for _ in range(n_harq):
        t = end + delays.bs_proc
        t = walk.control(t, "D") + delays.nack_tx_dl + delays.ue_proc_dl
        end, _ = walk.transmit(t, "U", packet_bits, bits_per_symbol)
    bd.harq = end - first_end
    _span(bd, "harq", first_end, end)
    bd.bs_proc = delays.bs_proc
    _span(bd, "bs_proc", end, end + delays.bs_proc)
    bd.total_symbols = end + delays.bs_proc - arrival_symbol
    return bd


def expected_latency(first_tx: LatencyBreakdown, harq_chain: Union[LatencyBreakdown, float], alpha: float) -> float:
    """First-transmission latency plus the BLER-weighted retransmission chain."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    chain = harq_chain.harq if isinstance(harq_chain, LatencyBreakdown) else harq_chain
    return first_tx.total_symbols + alpha * chain


def format_timeline(bd: LatencyBreakdown, symbol_us: Optional[float] = None) -> str:
    """Plain-text timeline, one row per component span."""
    head = f"{bd.direction.name} packet arriving at symbol {bd.arrival_symbol}"
    rows = [head, f"{'component':<12} {'from':>6} {'to':>6} {'len':>5}"]
    for kind, a, b in sorted(bd.spans, key=lambda x: (x[1], x[2])):
        rows.append(f"{kind:<12} {a:>6} {b:>6} {b - a:>5}")
    total = f"{'total':<12} {'':>6} {'':>6} {bd.total_symbols:>5}"
    if symbol_us is not None:
        total += f"  ({bd.total_symbols * symbol_us:.1f} us)"
    rows.append(total)
    return "\n".join(rows)


def walkthrough_dl() -> LatencyBreakdown:
    return dl_latency(WALKTHROUGH_DELAYS, walkthrough_schedule(), WALKTHROUGH_ARRIVAL, 1, tti_symbols=WALKTHROUGH_TTI_SYMBOLS)


def walkthrough_ul_dg() -> LatencyBreakdown:
    return ul_latency(WALKTHROUGH_DELAYS, walkthrough_schedule(), WALKTHROUGH_ARRIVAL, 1, ULScheme.DG, tti_symbols=WALKTHROUGH_TTI_SYMBOLS)


__all__ = [
    "COMPONENTS",
    "DelayConfig",
    "LatencyBreakdown",
    "PROCESSING_PRESETS",
    "ScheduleStarvation",
    "ULScheme",
    "dl_latency",
    "expected_latency",
    "format_timeline",
    "ul_latency",
]
