"""FTP3-style Poisson packet arrivals per UE and direction."""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .numerology import ConfigError, Numerology


class Direction(enum.IntEnum):
    DL = 0
    UL = 1


@dataclass(frozen=True)
class TrafficConfig:
    k_dl: int = 10
    k_ul: int = 10
    f_dl_bits: int = 400
    f_ul_bits: int = 400
    lambda_dl: float = 100.0
    lambda_ul: float = 100.0

    def validate(self) -> None:
        for name in ("k_dl", "k_ul", "f_dl_bits", "f_ul_bits", "lambda_dl", "lambda_ul"):
            if getattr(self, name) < 0:
                raise ConfigError(f"traffic.{name} must be >= 0")

    def rate(self, direction: Direction) -> float:
        return self.lambda_dl if direction is Direction.DL else self.lambda_ul

    def size(self, direction: Direction) -> int:
        return self.f_dl_bits if direction is Direction.DL else self.f_ul_bits

    def users(self, direction: Direction) -> int:
        return self.k_dl if direction is Direction.DL else self.k_ul


@dataclass(frozen=True, order=True)
class Packet:
    # field order doubles as the stream sort key
    arrival_symbol: int
    cell_id: int
    ue_id: int
    direction: Direction
    id: int
    size_bits: int


def offered_load(cfg: TrafficConfig) -> dict[str, float]:
    """Average offered load per cell in bit/s."""
    dl = cfg.k_dl * cfg.f_dl_bits * cfg.lambda_dl
    ul = cfg.k_ul * cfg.f_ul_bits * cfg.lambda_ul
    return {"dl_bps": dl, "ul_bps": ul, "total_bps": dl + ul}


def lambda_for_load(total_bps: float, k: int, f_bits: int) -> float:
    """Per-UE rate giving ``total_bps`` split evenly over DL and UL."""
    if k <= 0 or f_bits <= 0:
        raise ConfigError("load scaling needs at least one UE and a positive packet size")
    return total_bps / (2.0 * k * f_bits)


def substream(seed: int, cell_id: int, ue_id: int, direction: Direction) -> np.random.Generator:
    """Independent generator for one (cell, ue, direction) arrival process.

    Splitting rule: SeedSequence(seed, spawn_key=(cell, ue, direction)).
    Adding UEs or cells leaves existing substreams untouched.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(cell_id, ue_id, int(direction)))
    return np.random.Generator(np.random.PCG64(ss))


def _arrival_symbols(rng: np.random.Generator, lam: float, horizon: int, sym_per_s: int) -> np.ndarray:
    horizon_s = horizon / sym_per_s
    chunk = max(16, int(lam * horizon_s * 1.1) + 16)
    times: list[np.ndarray] = []
    t = 0.0
    while t < horizon_s:
        gaps = rng.exponential(1.0 / lam, size=chunk)
        c = t + np.cumsum(gaps)
        times.append(c)
        t = float(c[-1])
    allt = np.concatenate(times)
    allt = allt[allt < horizon_s]
    sym = np.floor(allt * sym_per_s).astype(np.int64)
    return sym[sym < horizon]


def generate_arrivals(
    cfg: TrafficConfig,
    num: Numerology,
    horizon_symbols: int,
    seed: int,
    n_cells: int = 1,
) -> list[Packet]:
    if horizon_symbols <= 0:
        raise ConfigError("horizon must be positive")
    cfg.validate()
    raw: list[tuple[int, int, int, int]] = []
    for cell in range(n_cells):
        for direction in Direction:
            lam = cfg.rate(direction)
            if lam <= 0 or cfg.size(direction) <= 0:
                continue
            for ue in range(cfg.users(direction)):
                rng = substream(seed, cell, ue, direction)
                for s in _arrival_symbols(rng, lam, horizon_symbols, num.symbols_per_second).tolist():
                    raw.append((s, cell, ue, int(direction)))
    raw.sort()
    return [
        Packet(s, cell, ue, Direction(d), pid, cfg.size(Direction(d)))
        for pid, (s, cell, ue, d) in enumerate(raw)
    ]


TRACE_FIELDS = ("id", "cell", "ue", "dir", "bits", "symbol")


def write_trace(packets: Iterable[Packet], fh: io.TextIOBase) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for p in packets:
        w.writerow((p.id, p.cell_id, p.ue_id, p.direction.name, p.size_bits, p.arrival_symbol))


def read_trace(fh: Iterable[str]) -> list[Packet]:
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != TRACE_FIELDS:
        raise ConfigError(f"arrival trace header must be {','.join(TRACE_FIELDS)}")
    out = [
        Packet(int(r["symbol"]), int(r["cell"]), int(r["ue"]), Direction[r["dir"]], int(r["id"]), int(r["bits"]))
        for r in reader
    ]
    if len({p.id for p in out}) != len(out):
        raise ConfigError("arrival trace has duplicate packet ids")
    if any(p.size_bits <= 0 for p in out):
        raise ConfigError("arrival trace has non-positive packet sizes")
    out.sort()
    return out
