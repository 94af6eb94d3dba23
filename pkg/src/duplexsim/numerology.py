"""Integer OFDM-symbol time base.

All simulator time is an integer symbol index.  Wall-clock conversion only
happens at the edges (traffic quantisation and reporting).
"""
from __future__ import annotations

from dataclasses import dataclass

SYMBOLS_PER_SLOT = 14
SUPPORTED_SCS_KHZ = (15, 30, 60)
SUPPORTED_TTI_SYMBOLS = (2, 4, 7, 14)


class ConfigError(ValueError):
    """Raised for any invalid configuration value."""


@dataclass(frozen=True)
class Numerology:
    scs_khz: int
    symbols_per_slot: int
    slot_duration_us: float
    symbol_duration_us: float

    @property
    def mu(self) -> int:
        """NR numerology index m, with scs = 15 * 2**m kHz."""
        return {15: 0, 30: 1, 60: 2}[self.scs_khz]

    @property
    def symbols_per_second(self) -> int:
        return 1000 * SYMBOLS_PER_SLOT * 2**self.mu

    @property
    def slots_per_frame(self) -> int:
        return 10 * 2**self.mu


def make_numerology(scs_khz: int) -> Numerology:
    if scs_khz not in SUPPORTED_SCS_KHZ:
        raise ConfigError(f"unsupported sub-carrier spacing {scs_khz!r} kHz; expected one of {SUPPORTED_SCS_KHZ}")
    m = {15: 0, 30: 1, 60: 2}[scs_khz]
    slot_us = 1000.0 / 2**m
    return Numerology(
        scs_khz=scs_khz,
        symbols_per_slot=SYMBOLS_PER_SLOT,
        slot_duration_us=slot_us,
        symbol_duration_us=slot_us / SYMBOLS_PER_SLOT,
    )


def symbols_to_us(n: int, num: Numerology) -> float:
    if n < 0:
        raise ValueError("symbol count must be non-negative")
    return n * num.symbol_duration_us


@dataclass(frozen=True)
class TtiGrid:
    """TTI boundaries restart at every slot; the last TTI of a slot may be short.

    With tti_symbols=4 a slot holds TTIs of 4, 4, 4 and 2 symbols.
    """

    tti_symbols: int

    def __post_init__(self) -> None:
        if self.tti_symbols not in SUPPORTED_TTI_SYMBOLS:
            raise ConfigError(f"unsupported TTI size {self.tti_symbols!r}; expected one of {SUPPORTED_TTI_SYMBOLS}")

    def is_boundary(self, symbol: int) -> bool:
        return (symbol % SYMBOLS_PER_SLOT) % self.tti_symbols == 0

    def window(self, symbol: int) -> tuple[int, int]:
        """Return [start, end) of the TTI containing ``symbol``."""
        slot_start = symbol - symbol % SYMBOLS_PER_SLOT
        local = symbol - slot_start
        start = slot_start + local - local % self.tti_symbols
        return start, min(start + self.tti_symbols, slot_start + SYMBOLS_PER_SLOT)

    def next_boundary(self, symbol: int) -> int:
        """First TTI boundary at or after ``symbol``."""
        start, end = self.window(symbol)
        return symbol if start == symbol else end

    def index(self, symbol: int) -> int:
        """Global running TTI count of the window containing ``symbol``."""
        per_slot = -(-SYMBOLS_PER_SLOT // self.tti_symbols)
        slot, local = divmod(symbol, SYMBOLS_PER_SLOT)
        return slot * per_slot + local // self.tti_symbols

    def start_of(self, index: int) -> int:
        per_slot = -(-SYMBOLS_PER_SLOT // self.tti_symbols)
        slot, k = divmod(index, per_slot)
        return slot * SYMBOLS_PER_SLOT + k * self.tti_symbols
