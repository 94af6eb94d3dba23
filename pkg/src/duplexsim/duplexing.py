"""Slot formats, traffic-adaptive link selection and PRB partitioning."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional, Union

from .numerology import SYMBOLS_PER_SLOT, ConfigError

# data blocks of the 4-symbol template, 0-indexed [start, end)
BLOCKS = ((0, 4), (5, 9), (9, 13))
GUARD_POSITIONS = (4, 13)
# n_D -> direction of each block; see select_slot_format
BLOCK_ORDERS = {0: "UUU", 1: "UUD", 2: "DUD", 3: "DDD"}
DEFAULT_FORMAT = "DDDDDDFUUUUUUF"


class LinkDirection(enum.Enum):
    DL_ONLY = "D"
    UL_ONLY = "U"
    GUARD = "F"
    BOTH = "B"


@dataclass(frozen=True)
class SlotFormat:
    symbols: str

    def __post_init__(self) -> None:
        if len(self.symbols) != SYMBOLS_PER_SLOT:
            raise ConfigError(f"slot format must have {SYMBOLS_PER_SLOT} symbols, got {len(self.symbols)}")
        bad = set(self.symbols) - set("DUF")
        if bad:
            raise ConfigError(f"slot format {self.symbols!r} has symbols outside D/U/F: {sorted(bad)}")

    @classmethod
    def parse(cls, text: str) -> "SlotFormat":
        return cls(text.strip().strip("[]").upper())

    def __str__(self) -> str:
        return self.symbols

    def count(self, kind: str) -> int:
        return self.symbols.count(kind)

    def guarded(self) -> bool:
        """True when every D->U change, including the wrap to the next slot, passes an F."""
        s = self.symbols
        last = s[-1]  # the previous slot's final symbol, for the cyclic wrap
        for ch in s:
            if ch == "F":
                last = "F"
                continue
            if last == "D" and ch == "U":
                return False
            last = ch
        return True


@dataclass(frozen=True)
class CellBuffers:
    z_dl_bits: int = 0
    z_ul_bits: int = 0

    def __post_init__(self) -> None:
        if self.z_dl_bits < 0 or self.z_ul_bits < 0:
            raise ValueError("buffer sizes must be non-negative")


@dataclass(frozen=True)
class FDD:
    dl_bandwidth_fraction: float = 0.5


@dataclass(frozen=True)
class DynamicTDD:
    gamma_slots: int = 20
    multislot_mixing: bool = False


@dataclass(frozen=True)
class FlexibleFDD:
    guard_prb_fraction: float = 0.2
    gamma_slots: int = 20


DuplexMode = Union[FDD, DynamicTDD, FlexibleFDD]


def validate_mode(mode: DuplexMode) -> None:
    if isinstance(mode, FDD):
        if not 0.0 <= mode.dl_bandwidth_fraction <= 1.0:
            raise ConfigError("duplex.dl_bandwidth_fraction must lie in [0, 1]")
    elif isinstance(mode, DynamicTDD):
        if mode.gamma_slots < 1:
            raise ConfigError("duplex.gamma_slots must be >= 1")
    elif isinstance(mode, FlexibleFDD):
        if not 0.0 <= mode.guard_prb_fraction <= 0.5:
            raise ConfigError("duplex.guard_prb_fraction must lie in [0, 0.5]")
        if mode.gamma_slots < 1:
            raise ConfigError("duplex.gamma_slots must be >= 1")
    else:
        raise ConfigError(f"unknown duplex mode {mode!r}")


@dataclass(frozen=True)
class PrbPartition:
    n_dl_prb: int
    n_ul_prb: int
    n_guard_prb: int

    @property
    def total(self) -> int:
        return self.n_dl_prb + self.n_ul_prb + self.n_guard_prb


def buffered_ratio(b: CellBuffers) -> Optional[float]:
    total = b.z_dl_bits + b.z_ul_bits
    if total == 0:
        return None
    return b.z_dl_bits / total


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def dl_blocks(ratio: float) -> int:
    return min(3, max(0, _round_half_up(3.0 * ratio)))


def _format_from_order(order: str) -> SlotFormat:
    sym = ["F"] * SYMBOLS_PER_SLOT
    for (a, b), d in zip(BLOCKS, order):
        sym[a:b] = d * (b - a)
    return SlotFormat("".join(sym))


def default_slot_format() -> SlotFormat:
    return SlotFormat(DEFAULT_FORMAT)


def select_slot_format(ratio: Optional[float]) -> SlotFormat:
    """Map a buffered DL ratio onto the three-block template.

    The number of DL blocks is round(3 * ratio).  One DL block is placed
    last (UUD) rather than in the middle so that the D->U switch always
    has a guard symbol.
    """
    if ratio is None:
        return default_slot_format()
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"buffered ratio {ratio!r} outside [0, 1]")
    return _format_from_order(BLOCK_ORDERS[dl_blocks(ratio)])


def select_slot_formats(
    ratio: Optional[float],
    n_slots: int,
    mixing: bool = False,
    min_dl_blocks: int = 0,
    max_dl_blocks: int = 3,
) -> list[SlotFormat]:
    """Formats for one update period of ``n_slots`` slots.

    With ``mixing`` the DL block count is spread over the whole period
    (3 * n_slots blocks) so ratios like 1:4 become reachable on average.
    ``min_dl_blocks``/``max_dl_blocks`` clamp each slot's DL block count,
    which keeps a control opportunity available in a needed direction.
    """
    if not 0 <= min_dl_blocks <= max_dl_blocks <= 3:
        raise ValueError("need 0 <= min_dl_blocks <= max_dl_blocks <= 3")
    if ratio is None:
        return [default_slot_format()] * n_slots
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"buffered ratio {ratio!r} outside [0, 1]")
    if not mixing or n_slots == 1:
        counts = [dl_blocks(ratio)] * n_slots
    else:
        counts = [_round_half_up(3 * (i + 1) * ratio) - _round_half_up(3 * i * ratio) for i in range(n_slots)]
    return [_format_from_order(BLOCK_ORDERS[min(max_dl_blocks, max(min_dl_blocks, n))]) for n in counts]


def flexfdd_partition(ratio: float, total_prb: int, guard_fraction: float) -> PrbPartition:
    if total_prb <= 0:
        raise ConfigError("total_prb must be positive")
    if not 0.0 <= guard_fraction <= 0.5:
        raise ConfigError("guard_fraction must lie in [0, 0.5]")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"buffered ratio {ratio!r} outside [0, 1]")
    guard = _round_half_up(guard_fraction * total_prb)
    rest = total_prb - guard
    q_dl = ratio * rest
    n_dl = math.floor(q_dl)
    n_ul = math.floor(rest - q_dl)
    if n_dl + n_ul < rest:
        # largest remainder; ties go to DL
        if q_dl - n_dl >= (rest - q_dl) - n_ul:
            n_dl += 1
        else:
            n_ul += 1
    return PrbPartition(n_dl, n_ul, guard)


def fdd_partition(total_prb: int, dl_fraction: float) -> PrbPartition:
    n_dl = _round_half_up(dl_fraction * total_prb)
    return PrbPartition(n_dl, total_prb - n_dl, 0)


class Window(NamedTuple):
    """One TTI of a slot as seen by one link direction (slot-local indices)."""

    start: int
    end: int
    n: int          # usable data symbols
    first: int      # first usable symbol, -1 if none
    last: int       # last usable symbol, -1 if none
    mask: int       # bit k set <=> local symbol k usable


def _usable(ch: str, want: str) -> bool:
    return ch == want or ch == "B"


@lru_cache(maxsize=None)
def slot_windows(pattern: str, tti_symbols: int, want: str) -> tuple[Window, ...]:
    out = []
    for start in range(0, SYMBOLS_PER_SLOT, tti_symbols):
        end = min(start + tti_symbols, SYMBOLS_PER_SLOT)
        idx = [k for k in range(start, end) if _usable(pattern[k], want)]
        mask = 0
        for k in idx:
            mask |= 1 << k
        out.append(Window(start, end, len(idx), idx[0] if idx else -1, idx[-1] if idx else -1, mask))
    return tuple(out)


@lru_cache(maxsize=None)
def control_opportunities(pattern: str, tti_symbols: int, want: str) -> tuple[int, ...]:
    """Slot-local control opportunities for direction ``want``.

    A usable symbol is an opportunity when it opens a TTI or follows an
    unusable symbol, i.e. the first symbol of every usable run inside a TTI.
    """
    out = []
    for k in range(SYMBOLS_PER_SLOT):
        if not _usable(pattern[k], want):
            continue
        if k % tti_symbols == 0 or not _usable(pattern[k - 1], want):
            out.append(k)
    return tuple(out)


BOTH_PATTERN = "B" * SYMBOLS_PER_SLOT


class CellSchedule:
    """Per-slot pattern lookup for one cell.

    ``fdd`` schedules allow both directions on every symbol.  TDD schedules
    hold one 14-character pattern per slot; ``periodic`` ones repeat their
    pattern list forever, otherwise slots past the end are undecided.
    """

    def __init__(self, formats=(), *, periodic: bool = False, fdd: bool = False):
        self.fdd = fdd
        self.periodic = periodic
        self._slots: list[str] = [str(f) for f in formats]
        if periodic and not self._slots and not fdd:
            raise ConfigError("a periodic schedule needs at least one slot format")

    @classmethod
    def for_fdd(cls) -> "CellSchedule":
        return cls(fdd=True)

    @classmethod
    def repeating(cls, *formats) -> "CellSchedule":
        return cls([f if isinstance(f, SlotFormat) else SlotFormat.parse(f) for f in formats], periodic=True)

    def append(self, fmt: SlotFormat, count: int = 1) -> None:
        self._slots.extend([str(fmt)] * count)

    @property
    def known_slots(self) -> Optional[int]:
        """Number of decided slots, ``None`` if unbounded."""
        if self.fdd or self.periodic:
            return None
        return len(self._slots)

    def pattern(self, slot: int) -> Optional[str]:
        if self.fdd:
            return BOTH_PATTERN
        if self.periodic:
            return self._slots[slot % len(self._slots)]
        if slot < len(self._slots):
            return self._slots[slot]
        return None

    def slot_format(self, slot: int) -> Optional[SlotFormat]:
        p = self.pattern(slot)
        return None if p is None or self.fdd else SlotFormat(p)

    def direction_at(self, symbol: int) -> LinkDirection:
        p = self.pattern(symbol // SYMBOLS_PER_SLOT)
        if p is None:
            raise IndexError(f"symbol {symbol} lies beyond the decided schedule")
        return LinkDirection(p[symbol % SYMBOLS_PER_SLOT])

    def log_lines(self, cell_id: int):
        for slot, p in enumerate(self._slots):
            yield f"{cell_id},{slot},{p}"


def link_direction_at(mode: DuplexMode, schedule: CellSchedule, symbol_index: int) -> LinkDirection:
    if isinstance(mode, (FDD, FlexibleFDD)):
        return LinkDirection.BOTH
    return schedule.direction_at(symbol_index)


def allows(direction: LinkDirection, want: str) -> bool:
    return direction is LinkDirection.BOTH or direction.value == want
