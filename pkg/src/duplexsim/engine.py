"""Deterministic discrete-event multi-cell simulator.

Time is an integer symbol index.  Events are ordered by
(time, priority, sequence) with the fixed priority order

    pattern update < arrival < readiness/feedback < TTI scheduling < tx completion

so a run is a pure function of its configuration and seed.
"""
from __future__ import annotations

import bisect
import csv
import hashlib
import heapq
import io
import logging
import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .duplexing import (
    BOTH_PATTERN,
    FDD,
    CellBuffers,
    CellSchedule,
    DuplexMode,
    DynamicTDD,
    FlexibleFDD,
    SlotFormat,
    buffered_ratio,
    control_opportunities,
    fdd_partition,
    flexfdd_partition,
    select_slot_formats,
    slot_windows,
    validate_mode,
)
from .latency import DelayConfig, LatencyBreakdown, ScheduleStarvation, ULScheme
from .numerology import SYMBOLS_PER_SLOT, ConfigError, TtiGrid, make_numerology
from .traffic import Direction, Packet, TrafficConfig, generate_arrivals

log = logging.getLogger(__name__)

UPDATE, ARRIVAL, READY, DELIVER, SCHEDULE, COMPLETE = range(6)
PRIORITY = {UPDATE: 0, ARRIVAL: 1, READY: 2, DELIVER: 2, SCHEDULE: 3, COMPLETE: 4}

DELIVERED = "delivered"
DROPPED = "dropped_max_harq"


@dataclass(frozen=True)
class StaticTDD:
    """Fixed, periodically repeated slot formats (no traffic adaptation)."""

    formats: tuple = ("DDDDFUUUUDDDDF",)


EngineMode = Union[FDD, DynamicTDD, FlexibleFDD, StaticTDD]


@dataclass(frozen=True)
class CliCoupling:
    """Additive UL BLER penalty chi[victim][aggressor] per fully overlapping DL symbol."""

    chi: tuple = ()

    @classmethod
    def none(cls, n_cells: int) -> "CliCoupling":
        return cls(tuple(tuple(0.0 for _ in range(n_cells)) for _ in range(n_cells)))

    @classmethod
    def symmetric(cls, n_cells: int, value: float) -> "CliCoupling":
        return cls(tuple(tuple(0.0 if i == j else value for j in range(n_cells)) for i in range(n_cells)))

    def matrix(self, n_cells: int) -> tuple:
        return self.chi if self.chi else CliCoupling.none(n_cells).chi

    def validate(self, n_cells: int) -> None:
        if not self.chi:
            return
        if len(self.chi) != n_cells or any(len(row) != n_cells for row in self.chi):
            raise ConfigError(f"cli.chi must be a {n_cells}x{n_cells} matrix")
        for i, row in enumerate(self.chi):
            for j, v in enumerate(row):
                if not 0.0 <= v <= 1.0:
                    raise ConfigError(f"cli.chi[{i}][{j}] = {v} outside [0, 1]")
                if i == j and v != 0.0:
                    raise ConfigError(f"cli.chi[{i}][{i}] must be 0")

    def is_zero(self) -> bool:
        return all(v == 0.0 for row in self.chi for v in row)


@dataclass(frozen=True)
class SimConfig:
    n_cells: int = 21
    scs_khz: int = 30
    tti_symbols: int = 4
    duplex: EngineMode = field(default_factory=DynamicTDD)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    delays: DelayConfig = field(default_factory=DelayConfig)
    ul_scheme: ULScheme = ULScheme.GF
    n_prb: int = 51
    bits_per_prb_per_symbol: int = 4
    segmentation: bool = True
    bler_base: float = 0.01
    bler_retx: float = 0.001
    max_harq: int = 6
    cli: CliCoupling = field(default_factory=CliCoupling)
    horizon_symbols: int = 280_000
    seed: int = 1

    def validate(self) -> None:
        if self.n_cells < 1:
            raise ConfigError("n_cells must be >= 1")
        make_numerology(self.scs_khz)
        TtiGrid(self.tti_symbols)
        if isinstance(self.duplex, StaticTDD):
            if not self.duplex.formats:
                raise ConfigError("duplex.formats must list at least one slot format")
            pats = [SlotFormat.parse(f).symbols for f in self.duplex.formats]
            if not any("D" in p for p in pats) or not any("U" in p for p in pats):
                raise ConfigError("a static TDD schedule needs both D and U symbols")
        else:
            validate_mode(self.duplex)
        self.traffic.validate()
        self.delays.validate()
        ULScheme(self.ul_scheme)
        if self.n_prb < 1 or self.bits_per_prb_per_symbol < 1:
            raise ConfigError("n_prb and bits_per_prb_per_symbol must be >= 1")
        for name in ("bler_base", "bler_retx"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"{name} = {v} outside [0, 1)")
        if self.max_harq < 0:
            raise ConfigError("max_harq must be >= 0")
        self.cli.validate(self.n_cells)
        if not self.segmentation:
            prb = self.n_prb
            if isinstance(self.duplex, FDD):
                part = fdd_partition(self.n_prb, self.duplex.dl_bandwidth_fraction)
                prb = min(part.n_dl_prb, part.n_ul_prb)
            biggest = max(self.traffic.f_dl_bits, self.traffic.f_ul_bits)
            if biggest > prb * self.bits_per_prb_per_symbol * self.tti_symbols:
                raise ConfigError("without segmentation every packet must fit one full TTI")
        if self.horizon_symbols <= 0:
            raise ConfigError("horizon_symbols must be positive")

    @property
    def numerology(self):
        return make_numerology(self.scs_khz)


@dataclass
class PacketRecord:
    packet: Packet
    breakdown: LatencyBreakdown
    outcome: str
    n_transmissions: int
    failure_causes: tuple
    delivery_symbol: Optional[int]

    @property
    def delivered(self) -> bool:
        return self.outcome == DELIVERED


@dataclass
class RunResult:
    records: list
    schedule_log: list
    event_count: int
    config: SimConfig


def keyed_uniform(seed: int, *keys: int) -> float:
    """Counter-based U[0,1) draw; identical keys give identical draws across runs."""
    h = hashlib.blake2b(struct.pack(f"<{len(keys) + 1}q", seed, *keys), digest_size=8).digest()
    return (int.from_bytes(h, "little") >> 11) * (1.0 / (1 << 53))


def cli_penalty(weighted_overlap: float, n_symbols: int) -> float:
    """Sum over aggressors of chi times the overlapping fraction of the span."""
    return weighted_overlap / n_symbols if n_symbols else 0.0


def transmission_outcome(u: float, base_p: float, penalty: float = 0.0) -> tuple[bool, Optional[str]]:
    """Bernoulli decode outcome.  Returns (success, failure cause)."""
    p = min(1.0, base_p + penalty)
    if u >= p:
        return True, None
    return False, "cli" if penalty > base_p else "channel"


def schedule_tti(capacity_bits: int, retx: list, new: list, segmentation: bool = True) -> list:
    """Share one TTI's capacity: retransmissions first, then new data, oldest first.

    Queue entries expose ``remaining`` bits; a packet larger than what is
    left is segmented and keeps its place at the head.  Without
    segmentation the head packet must fit whole, otherwise the TTI stops
    there.  Returns a list of (entry, bits) allocations; queues are not
    modified.
    """
    out = []
    left = capacity_bits
    for queue in (retx, new):
        for entry in queue:
            if left <= 0 or (not segmentation and entry.remaining > left):
                return out
            give = min(entry.remaining, left)
            out.append((entry, give))
            left -= give
    return out


class _Live:
    __slots__ = (
        "pkt", "cell", "d", "bits", "remaining", "attempt", "stage", "t_mark", "ready",
        "first_end", "spans", "wsum", "usyms", "causes", "n_tx", "state", "key", "end",
    )

    def __init__(self, pkt: Packet):
        self.pkt = pkt
        self.cell = pkt.cell_id
        self.d = int(pkt.direction)
        self.bits = pkt.size_bits
        self.remaining = pkt.size_bits
        self.attempt = 1
        self.stage = None
        self.t_mark = 0
        self.ready = None
        self.first_end = None
        self.spans = []
        self.wsum = 0.0
        self.usyms = 0
        self.causes = []
        self.n_tx = 0
        self.state = "proc"
        self.key = (pkt.arrival_symbol, pkt.cell_id, pkt.ue_id, pkt.direction, pkt.id)
        self.end = None


_WANT = ("D", "U")


class Engine:
    """One simulation run.  Use :func:`run` unless you need the internals."""

    def __init__(
        self,
        cfg: SimConfig,
        packets: Optional[Iterable[Packet]] = None,
        forced_failures: Optional[dict] = None,
        audit: bool = False,
    ):
        cfg.validate()
        self.cfg = cfg
        self.num = cfg.numerology
        self.tti = TtiGrid(cfg.tti_symbols)
        self.mu = cfg.tti_symbols
        self.d = cfg.delays
        self.audit = audit
        self.forced = dict(forced_failures or {})
        if packets is None:
            packets = generate_arrivals(cfg.traffic, self.num, cfg.horizon_symbols, cfg.seed, cfg.n_cells)
        self.packets = sorted(packets)
        for p in self.packets:
            if not 0 <= p.cell_id < cfg.n_cells:
                raise ConfigError(f"packet {p.id} addresses cell {p.cell_id} outside 0..{cfg.n_cells - 1}")
        mode = cfg.duplex
        self.mode = mode
        self.tdd = isinstance(mode, (DynamicTDD, StaticTDD))
        self.chi = cfg.cli.matrix(cfg.n_cells)
        self.cli_active = self.tdd and not CliCoupling(self.chi).is_zero()
        C = cfg.n_cells
        if isinstance(mode, StaticTDD):
            self.sched = [CellSchedule.repeating(*mode.formats) for _ in range(C)]
        elif isinstance(mode, DynamicTDD):
            self.sched = [CellSchedule() for _ in range(C)]
        else:
            self.sched = [CellSchedule.for_fdd() for _ in range(C)]
        if isinstance(mode, FDD):
            part = fdd_partition(cfg.n_prb, mode.dl_bandwidth_fraction)
            self.prb = [[part.n_dl_prb, part.n_ul_prb] for _ in range(C)]
        else:
            self.prb = [[cfg.n_prb, cfg.n_prb] for _ in range(C)]
        self.gamma = getattr(mode, "gamma_slots", None)
        self.updates = isinstance(mode, (DynamicTDD, FlexibleFDD))

        self.heap: list = []
        self.seq = 0
        self.now = 0
        self.event_count = 0
        self.queues = [[([], []) for _ in range(2)] for _ in range(C)]  # [cell][dir] -> (retx, new)
        self.z = [[0, 0] for _ in range(C)]
        self.live: dict[int, _Live] = {}
        self.deferred: list[_Live] = []
        self.pending_sched: set[int] = set()
        self.records: list[PacketRecord] = []
        self.schedule_log: list[str] = []
        self.n_arrived = 0
        self.n_delivered = 0
        self.n_dropped = 0
        self.n_allocations = 0
        self.allocation_log: list = [] if audit else None

    # -- event plumbing -------------------------------------------------
    def push(self, t: int, kind: int, payload=None) -> None:
        if t < self.now:
            raise AssertionError(f"event at {t} scheduled in the past (now={self.now})")
        self.seq += 1
        heapq.heappush(self.heap, (t, PRIORITY[kind], self.seq, kind, payload))

    def _ensure_schedule(self, r: int) -> None:
        t = self.tti.next_boundary(r)
        if t not in self.pending_sched:
            self.pending_sched.add(t)
            self.push(t, SCHEDULE)

    def run(self) -> RunResult:
        arrivals = iter(self.packets)
        nxt = next(arrivals, None)
        if nxt is not None:
            self.push(nxt.arrival_symbol, ARRIVAL, nxt)
        if self.updates:
            self.push(0, UPDATE)
        handlers = {
            UPDATE: self._on_update,
            ARRIVAL: self._on_arrival,
            READY: self._on_ready,
            DELIVER: self._on_deliver,
            SCHEDULE: self._on_schedule,
            COMPLETE: self._on_complete,
        }
        self._arrivals_left = nxt is not None
        while self.heap:
            t, _, _, kind, payload = heapq.heappop(self.heap)
            if t < self.now:
                raise AssertionError("event order violated")
            self.now = t
            self.event_count += 1
            if kind == ARRIVAL:
                self._on_arrival(payload)
                nxt = next(arrivals, None)
                if nxt is not None:
                    self.push(nxt.arrival_symbol, ARRIVAL, nxt)
                else:
                    self._arrivals_left = False
            else:
                handlers[kind](payload)
            if self.audit:
                self._check_invariants()
        if self.live:
            raise AssertionError(f"{len(self.live)} packets never resolved")
        self.records.sort(key=lambda r: r.packet.id)
        return RunResult(self.records, self.schedule_log, self.event_count, self.cfg)

    # -- pattern updates ------------------------------------------------
    def _on_update(self, _payload) -> None:
        self.update_pattern(self.now)
        if self.deferred:
            waiting, self.deferred = self.deferred, []
            for lv in waiting:
                self._advance(lv)
        if self.live or self._arrivals_left:
            self.push(self.now + self.gamma * SYMBOLS_PER_SLOT, UPDATE)

    def update_pattern(self, now: int) -> None:
        slot = now // SYMBOLS_PER_SLOT
        # control messages stuck on the undecided schedule need their direction
        need = [[False, False] for _ in range(self.cfg.n_cells)]
        for lv in self.deferred:
            need[lv.cell][0 if lv.stage in ("sg", "nack_dl") else 1] = True
        for c in range(self.cfg.n_cells):
            ratio = buffered_ratio(CellBuffers(self.z[c][0], self.z[c][1]))
            if isinstance(self.mode, DynamicTDD):
                formats = select_slot_formats(ratio, self.gamma, self.mode.multislot_mixing)
                if need[c][0] or need[c][1]:
                    # first slot of the period reserves the missing control direction
                    formats[0] = select_slot_formats(
                        ratio, 1, min_dl_blocks=1 if need[c][0] else 0, max_dl_blocks=2 if need[c][1] else 3
                    )[0]
                for k, f in enumerate(formats):
                    self.sched[c].append(f)
                    self.schedule_log.append(f"{c},{slot + k},{f}")
            else:
                part = flexfdd_partition(0.5 if ratio is None else ratio, self.cfg.n_prb, self.mode.guard_prb_fraction)
                self.prb[c] = [part.n_dl_prb, part.n_ul_prb]
                self.schedule_log.append(f"{c},{slot},dl={part.n_dl_prb} ul={part.n_ul_prb} guard={part.n_guard_prb}")

    # -- arrivals and readiness -----------------------------------------
    def _on_arrival(self, pkt: Packet) -> None:
        lv = _Live(pkt)
        self.live[pkt.id] = lv
        self.n_arrived += 1
        if lv.d == 0:
            self.z[lv.cell][0] += lv.bits
            self.push(self.now + self.d.bs_proc, READY, lv)
        elif self.cfg.ul_scheme == ULScheme.DG:
            lv.state = "dg"
            lv.stage = "sr"
            lv.t_mark = self.now + self.d.ue_proc_dl
            self._advance(lv)
        else:
            self.z[lv.cell][1] += lv.bits
            self._enqueue(lv)

    def _on_ready(self, lv: _Live) -> None:
        self._enqueue(lv)

    def _enqueue(self, lv: _Live) -> None:
        if lv.state == "dg":
            # the grant makes the UL bits part of the scheduler's buffer view
            self.z[lv.cell][1] += lv.bits
        lv.state = "queued"
        if lv.attempt == 1:
            lv.ready = self.now
            bisect.insort(self.queues[lv.cell][lv.d][1], lv, key=_key)
        else:
            bisect.insort(self.queues[lv.cell][lv.d][0], lv, key=_key)
        self._ensure_schedule(self.now)

    # -- control-channel procedures ---------------------------------------
    def _next_control(self, cell: int, t: int, want: str) -> Optional[int]:
        sched = self.sched[cell]
        slot, local = divmod(t, SYMBOLS_PER_SLOT)
        tries = 0
        while True:
            pat = sched.pattern(slot)
            if pat is None:
                return None
            opps = control_opportunities(pat, self.mu, want)
            i = bisect.bisect_left(opps, local)
            if i < len(opps):
                return slot * SYMBOLS_PER_SLOT + opps[i]
            slot += 1
            local = 0
            tries += 1
            if sched.periodic and tries > len(sched._slots) + 1:
                raise ScheduleStarvation(f"cell {cell} schedule has no {want} control opportunity")

    def _sr_opportunity(self, cell: int, t: int) -> Optional[int]:
        period = self.d.sr_periodicity_ttis
        k0 = self.tti.index(t) // period
        o = self._next_control(cell, self.tti.start_of(k0 * period), "U")
        if o is None or o >= t:
            return o
        return self._next_control(cell, self.tti.start_of((k0 + 1) * period), "U")

    def _advance(self, lv: _Live) -> None:
        """Run SR/SG or NACK steps until readiness is known or the schedule runs out."""
        d = self.d
        while True:
            stage = lv.stage
            if stage == "sr":
                o = self._sr_opportunity(lv.cell, lv.t_mark)
                if o is None:
                    break
                lv.t_mark = max(o + d.sr_tx + d.bs_proc, self.tti.start_of(self.tti.index(o) + d.sg_delay_ttis))
                lv.stage = "sg"
            elif stage == "sg":
                o = self._next_control(lv.cell, lv.t_mark, "D")
                if o is None:
                    break
                lv.stage = None
                self.push(o + d.sg_tx + d.ue_proc_ul_prep, READY, lv)
                return
            elif stage == "nack_ul":
                o = self._next_control(lv.cell, lv.t_mark, "U")
                if o is None:
                    break
                lv.stage = None
                self.push(o + d.nack_tx_ul + d.bs_proc, READY, lv)
                return
            elif stage == "nack_dl":
                o = self._next_control(lv.cell, lv.t_mark, "D")
                if o is None:
                    break
                lv.stage = None
                self.push(o + d.nack_tx_dl + d.ue_proc_dl, READY, lv)
                return
            else:
                raise AssertionError(f"bad stage {stage!r}")
        self.deferred.append(lv)

    # -- TTI scheduling -----------------------------------------------
    def _on_schedule(self, _payload) -> None:
        t = self.now
        self.pending_sched.discard(t)
        slot, local = divmod(t, SYMBOLS_PER_SLOT)
        base = slot * SYMBOLS_PER_SLOT
        wi = local // self.mu
        bps = self.cfg.bits_per_prb_per_symbol
        C = self.cfg.n_cells
        dl_mask = [0] * C
        ul_allocs = []
        busy = False
        for direction in (0, 1):
            want = _WANT[direction]
            for c in range(C):
                retx, new = self.queues[c][direction]
                if not retx and not new:
                    continue
                pat = self.sched[c].pattern(slot) if self.tdd else BOTH_PATTERN
                w = slot_windows(pat, self.mu, want)[wi]
                if w.n == 0:
                    continue
                cap = w.n * self.prb[c][direction] * bps
                allocs = schedule_tti(cap, retx, new, self.cfg.segmentation)
                span = (base + w.first, base + w.last + 1)
                for lv, give in allocs:
                    lv.remaining -= give
                    self.z[c][direction] -= give
                    self.n_allocations += 1
                    if self.allocation_log is not None:
                        self.allocation_log.append((c, direction, base, w.mask, lv.pkt.id, give))
                    if lv.attempt == 1:
                        lv.spans.append(span)
                    if direction == 1 and self.cli_active:
                        ul_allocs.append((c, lv, w.mask))
                    if lv.remaining == 0:
                        lv.state = "tx"
                        lv.end = span[1]
                        self.push(span[1], COMPLETE, lv)
                if direction == 0 and allocs:
                    dl_mask[c] = w.mask
                # fully served entries always form a prefix of each queue
                _drop_served(retx)
                _drop_served(new)
        for c, lv, mask in ul_allocs:
            row = self.chi[c]
            n = mask.bit_count()
            lv.usyms += n
            for j in range(C):
                if j != c and dl_mask[j] and row[j]:
                    lv.wsum += row[j] * (mask & dl_mask[j]).bit_count()
        for c in range(C):
            for direction in (0, 1):
                if self.queues[c][direction][0] or self.queues[c][direction][1]:
                    busy = True
                    break
            if busy:
                break
        if busy:
            self._ensure_schedule(self.tti.window(t)[1])

    # -- transmission completion and HARQ --------------------------------
    def _on_complete(self, lv: _Live) -> None:
        e = self.now
        lv.n_tx += 1
        if lv.attempt == 1:
            lv.first_end = e
        base_p = self.cfg.bler_base if lv.attempt == 1 else self.cfg.bler_retx
        penalty = cli_penalty(lv.wsum, lv.usyms) if lv.d == 1 else 0.0
        if lv.pkt.id in self.forced:
            ok = lv.attempt > self.forced[lv.pkt.id]
            cause = None if ok else "channel"
        else:
            u = keyed_uniform(self.cfg.seed, lv.cell, lv.pkt.id, lv.attempt)
            ok, cause = transmission_outcome(u, base_p, penalty)
        lv.wsum = 0.0
        lv.usyms = 0
        if ok:
            lv.state = "delivering"
            proc = self.d.ue_proc_dl if lv.d == 0 else self.d.bs_proc
            self.push(e + proc, DELIVER, lv)
            return
        lv.causes.append(cause)
        if lv.attempt > self.cfg.max_harq:
            lv.state = "dropped"
            self.push(e, DELIVER, lv)
            return
        lv.attempt += 1
        lv.state = "feedback"
        # the whole packet sits in the HARQ buffer again
        lv.remaining = lv.bits
        self.z[lv.cell][lv.d] += lv.bits
        if lv.d == 0:
            lv.stage = "nack_ul"
            lv.t_mark = e + self.d.ue_proc_dl
        else:
            lv.stage = "nack_dl"
            lv.t_mark = e + self.d.bs_proc
        self._advance(lv)

    def _on_deliver(self, lv: _Live) -> None:
        pkt = lv.pkt
        del self.live[pkt.id]
        dropped = lv.state == "dropped"
        bd = LatencyBreakdown(pkt.direction, pkt.arrival_symbol)
        if lv.d == 0:
            bd.bs_proc = self.d.bs_proc
        else:
            bd.dg = lv.ready - pkt.arrival_symbol
        self._classify(bd, lv)
        bd.harq = lv.end - lv.first_end
        if not dropped:
            if lv.d == 0:
                bd.ue_proc = self.d.ue_proc_dl
            else:
                bd.bs_proc = self.d.bs_proc
        bd.total_symbols = self.now - pkt.arrival_symbol
        if dropped:
            self.n_dropped += 1
        else:
            self.n_delivered += 1
        self.records.append(
            PacketRecord(
                packet=pkt,
                breakdown=bd,
                outcome=DROPPED if dropped else DELIVERED,
                n_transmissions=lv.n_tx,
                failure_causes=tuple(lv.causes),
                delivery_symbol=None if dropped else self.now,
            )
        )

    def _classify(self, bd: LatencyBreakdown, lv: _Live) -> None:
        """Attribute every symbol of the first attempt's wait to one component.

        A usable, untransmitted symbol counts as queueing when its TTI began
        after the packet was ready: the scheduler saw the packet and gave the
        capacity to someone else.
        """
        want = _WANT[lv.d]
        r, e = lv.ready, lv.first_end
        sched = self.sched[lv.cell]
        tti = self.tti
        tx = queue = tdd = fa = 0
        spans = lv.spans
        si = 0
        for s in range(r, e):
            while si < len(spans) and spans[si][1] <= s:
                si += 1
            if si < len(spans) and spans[si][0] <= s:
                tx += 1
                continue
            pat = sched.pattern(s // SYMBOLS_PER_SLOT) if self.tdd else BOTH_PATTERN
            ch = pat[s % SYMBOLS_PER_SLOT]
            if ch != want and ch != "B":
                tdd += 1
            elif tti.window(s)[0] >= r:
                queue += 1
            else:
                fa += 1
        bd.tx, bd.queue, bd.tdd_switch, bd.frame_align = tx, queue, tdd, fa

    # -- audit -----------------------------------------------------------
    def _check_invariants(self) -> None:
        if self.n_arrived != self.n_delivered + self.n_dropped + len(self.live):
            raise AssertionError(
                f"conservation broken at {self.now}: {self.n_arrived} != "
                f"{self.n_delivered} + {self.n_dropped} + {len(self.live)}"
            )
        z = [[0, 0] for _ in range(self.cfg.n_cells)]
        for lv in self.live.values():
            if lv.state in ("proc", "queued", "feedback"):
                z[lv.cell][lv.d] += lv.remaining
        if z != self.z:
            raise AssertionError(f"buffer view {self.z} != queue contents {z} at {self.now}")


def _drop_served(queue: list) -> None:
    k = 0
    while k < len(queue) and queue[k].remaining == 0:
        k += 1
    if k:
        del queue[:k]


def _key(lv: _Live):
    return lv.key


def run(
    cfg: SimConfig,
    packets: Optional[Iterable[Packet]] = None,
    forced_failures: Optional[dict] = None,
    audit: bool = False,
) -> RunResult:
    return Engine(cfg, packets, forced_failures, audit).run()


RECORD_FIELDS = (
    "id", "cell", "ue", "dir", "arrival_symbol", "delivery_symbol", "outcome", "n_tx",
    "bs_proc", "queue", "tdd_switch", "frame_align", "tx", "dg", "harq", "ue_proc",
    "total_symbols", "total_us",
)


def write_records(records: Iterable[PacketRecord], fh: io.TextIOBase, symbol_us: float) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        b = r.breakdown
        p = r.packet
        w.writerow((
            p.id, p.cell_id, p.ue_id, p.direction.name, p.arrival_symbol,
            "" if r.delivery_symbol is None else r.delivery_symbol, r.outcome, r.n_transmissions,
            b.bs_proc, b.queue, b.tdd_switch, b.frame_align, b.tx, b.dg, b.harq, b.ue_proc,
            b.total_symbols, f"{b.total_symbols * symbol_us:.3f}",
        ))
