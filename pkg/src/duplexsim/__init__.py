"""Latency simulator for dynamic TDD, FDD and flexible FDD in 5G NR cells."""
from .numerology import ConfigError, Numerology, TtiGrid, make_numerology, symbols_to_us
from .traffic import Direction, Packet, TrafficConfig, generate_arrivals
from .duplexing import FDD, DynamicTDD, FlexibleFDD, SlotFormat, select_slot_format
from .latency import DelayConfig, LatencyBreakdown, ULScheme, dl_latency, ul_latency
from .engine import CliCoupling, SimConfig, StaticTDD, run

__version__ = "0.1.0"
