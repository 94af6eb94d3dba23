"""Tail-latency statistics over packet records."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .latency import COMPONENTS

# below this many expected exceedances a quantile estimate is flagged
MIN_TAIL_SAMPLES = 10


@dataclass(frozen=True)
class LatencySeries:
    """Sorted latency samples in symbols plus the symbol duration for µs views.

    ``tag`` names what was pooled (e.g. "UL", "DL", "all"); only series
    with equal tags and symbol durations can be merged.
    """

    symbols: np.ndarray
    symbol_us: float
    tag: str = "all"

    def __post_init__(self) -> None:
        arr = np.sort(np.asarray(self.symbols, dtype=np.int64))
        object.__setattr__(self, "symbols", arr)

    @classmethod
    def from_records(cls, records: Iterable, symbol_us: float, direction: Optional[int] = None) -> "LatencySeries":
        """Delivered packets only; dropped packets have no latency."""
        vals = [
            r.breakdown.total_symbols
            for r in records
            if r.delivered and (direction is None or int(r.packet.direction) == direction)
        ]
        tag = "all" if direction is None else ("DL", "UL")[direction]
        return cls(np.array(vals, dtype=np.int64), symbol_us, tag)

    @property
    def count(self) -> int:
        return int(self.symbols.size)

    @property
    def us(self) -> np.ndarray:
        return self.symbols * self.symbol_us


def _rank(n: int, eps: float) -> int:
    """1-based rank ceil(n * (1 - eps)), computed exactly on the decimal value of eps."""
    return min(n, max(1, math.ceil(n * (1 - Fraction(str(eps))))))


def outage_latency(series: LatencySeries, eps: float) -> tuple[int, bool]:
    """(1 - eps)-quantile in symbols and whether the estimate is reliable.

    Reliable means at least MIN_TAIL_SAMPLES samples are expected beyond it.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    n = series.count
    if n == 0:
        raise ValueError("empty latency series")
    k = _rank(n, eps)
    return int(series.symbols[k - 1]), n * eps >= MIN_TAIL_SAMPLES


def outage_latency_us(series: LatencySeries, eps: float) -> tuple[float, bool]:
    sym, ok = outage_latency(series, eps)
    return sym * series.symbol_us, ok


def ccdf(series: LatencySeries, grid) -> list[tuple[float, float]]:
    """(x, P(X > x)) at each grid point, x in symbols."""
    n = series.count
    if n == 0:
        raise ValueError("empty latency series")
    xs = np.atleast_1d(np.asarray(grid, dtype=float))
    above = n - np.searchsorted(series.symbols, xs, side="right")
    return [(float(x), float(a) / n) for x, a in zip(xs, above)]


def scheduling_delay_ecdf(records: Iterable) -> tuple[np.ndarray, np.ndarray]:
    """ECDF of queue + tdd_switch + frame_align, DL and UL pooled.

    Returns (x, F(x)) at the distinct sample values.
    """
    vals = np.array([r.breakdown.scheduling_delay for r in records if r.delivered], dtype=np.int64)
    if vals.size == 0:
        raise ValueError("no delivered records")
    x, counts = np.unique(vals, return_counts=True)
    return x, np.cumsum(counts) / vals.size


def ecdf_at(ecdf: tuple[np.ndarray, np.ndarray], points) -> np.ndarray:
    x, f = ecdf
    idx = np.searchsorted(x, np.asarray(points), side="right")
    return np.where(idx > 0, f[np.maximum(idx - 1, 0)], 0.0)


def merge(a: LatencySeries, b: LatencySeries) -> LatencySeries:
    if a.tag != b.tag or a.symbol_us != b.symbol_us:
        raise ValueError(f"cannot merge series {a.tag!r}@{a.symbol_us} with {b.tag!r}@{b.symbol_us}")
    return LatencySeries(np.concatenate([a.symbols, b.symbols]), a.symbol_us, a.tag)


@dataclass
class Summary:
    count: int
    dropped: int
    mean_symbols: float
    outage: dict = field(default_factory=dict)
    components: dict = field(default_factory=dict)
    mean_transmissions: float = 0.0


def summarize(records: list, symbol_us: float, direction: Optional[int] = None, eps=(1e-2, 1e-3, 1e-5)) -> Summary:
    sel = [r for r in records if direction is None or int(r.packet.direction) == direction]
    ok = [r for r in sel if r.delivered]
    series = LatencySeries.from_records(ok, symbol_us, direction)
    s = Summary(count=len(ok), dropped=len(sel) - len(ok), mean_symbols=float(series.symbols.mean()) if ok else float("nan"))
    for e in eps:
        if ok:
            s.outage[e] = outage_latency(series, e)
    if ok:
        s.components = {c: float(np.mean([getattr(r.breakdown, c) for r in ok])) for c in COMPONENTS}
        s.mean_transmissions = float(np.mean([r.n_transmissions for r in ok]))
    return s


def write_summary(summaries: dict, fh: io.TextIOBase, symbol_us: float, meta: Optional[dict] = None) -> None:
    """Flat key=value text: run parameters first, then one block per pooled direction."""
    for k, v in (meta or {}).items():
        fh.write(f"{k}={v}\n")
    for tag in sorted(summaries):
        s = summaries[tag]
        p = f"{tag}."
        fh.write(f"{p}delivered={s.count}\n{p}dropped={s.dropped}\n")
        fh.write(f"{p}mean_symbols={s.mean_symbols:.6f}\n")
        fh.write(f"{p}mean_transmissions={s.mean_transmissions:.6f}\n")
        for e in sorted(s.outage, reverse=True):
            sym, reliable = s.outage[e]
            fh.write(f"{p}outage_{e:g}_symbols={sym}\n{p}outage_{e:g}_us={sym * symbol_us:.3f}\n")
            fh.write(f"{p}outage_{e:g}_reliable={str(reliable).lower()}\n")
        for c, v in s.components.items():
            fh.write(f"{p}mean_{c}={v:.6f}\n")


def write_ccdf(series: LatencySeries, fh: io.TextIOBase) -> None:
    """Two-column CSV (symbols, ccdf) at each distinct latency value."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("symbols", "ccdf"))
    if series.count == 0:
        return
    vals, counts = np.unique(series.symbols, return_counts=True)
    above = series.count - np.cumsum(counts)
    for v, a in zip(vals.tolist(), above.tolist()):
        w.writerow((v, f"{a / series.count:.8g}"))


def write_ecdf(ecdf: tuple[np.ndarray, np.ndarray], fh: io.TextIOBase) -> None:
    """Two-column CSV (symbols, ecdf)."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("symbols", "ecdf"))
    for v, f in zip(ecdf[0].tolist(), ecdf[1].tolist()):
        w.writerow((v, f"{f:.8g}"))
