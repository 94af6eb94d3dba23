"""Config files, presets and dotted-path overrides.

A config is a nested mapping (TOML on disk).  Every key is optional; missing
keys come from DEFAULTS.  Recognised layout::

    seed, n_cells, scs_khz, tti_symbols, ul_scheme, n_prb,
    bits_per_prb_per_symbol, segmentation, bler_base, bler_retx, max_harq,
    horizon_ms | horizon_symbols
    [duplex]  mode = fdd | dynamic_tdd | flexible_fdd | static_tdd
              gamma = <slots> | "slot" | "frame", multislot_mixing,
              dl_bandwidth_fraction, guard_prb_fraction, formats = [...]
    [traffic] k_dl, k_ul, f_dl_bits, f_ul_bits, lambda_dl, lambda_ul,
              load_mbps (sets both rates, split evenly over DL and UL)
    [delays]  preset = fast | slow, then any DelayConfig field
    [cli]     chi = <scalar, symmetric off-diagonal> | <matrix>
    [sweep]   replications, axes = [{path = "...", values = [...]}]
"""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import fields
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .duplexing import FDD, DynamicTDD, FlexibleFDD
from .engine import CliCoupling, SimConfig, StaticTDD
from .latency import (
    PROCESSING_PRESETS,
    WALKTHROUGH_DELAYS,
    WALKTHROUGH_SCHEDULE,
    WALKTHROUGH_TTI_SYMBOLS,
    DelayConfig,
    ULScheme,
)
from .numerology import ConfigError, make_numerology
from .traffic import TrafficConfig

TOP_KEYS = {
    "seed", "n_cells", "scs_khz", "tti_symbols", "ul_scheme", "n_prb", "bits_per_prb_per_symbol",
    "segmentation", "bler_base", "bler_retx", "max_harq", "horizon_ms", "horizon_symbols",
    "duplex", "traffic", "delays", "cli", "sweep", "name",
}
DUPLEX_KEYS = {"mode", "gamma", "multislot_mixing", "dl_bandwidth_fraction", "guard_prb_fraction", "formats"}
TRAFFIC_KEYS = {f.name for f in fields(TrafficConfig)} | {"load_mbps"}
DELAY_KEYS = {f.name for f in fields(DelayConfig)} | {"preset"}
MODES = ("fdd", "dynamic_tdd", "flexible_fdd", "static_tdd")

# Default simulation parameters.
DEFAULTS: dict = {
    "seed": 1,
    "n_cells": 21,
    "scs_khz": 30,
    "tti_symbols": 4,
    "ul_scheme": "GF",
    "n_prb": 51,
    "bits_per_prb_per_symbol": 4,
    "segmentation": True,
    "bler_base": 0.01,
    "bler_retx": 0.001,
    "max_harq": 6,
    "horizon_ms": 1000.0,
    "duplex": {"mode": "dynamic_tdd", "gamma": "frame", "multislot_mixing": False},
    "traffic": {"k_dl": 10, "k_ul": 10, "f_dl_bits": 400, "f_ul_bits": 400, "lambda_dl": 100.0, "lambda_ul": 100.0},
    "delays": {"preset": "fast"},
    "cli": {"chi": 0.0},
}

_LOADS = [0.5, 1.0, 2.5, 4.0]
_SWEEP_BASE = {"n_cells": 3, "horizon_ms": 2000.0}

PRESETS: dict = {
    "defaults": {},
    "walkthrough": {
        "kind": "oracle",
        "scs_khz": 30,
        "tti_symbols": WALKTHROUGH_TTI_SYMBOLS,
        "n_cells": 1,
        "duplex": {"mode": "static_tdd", "formats": list(WALKTHROUGH_SCHEDULE)},
        "delays": {f.name: getattr(WALKTHROUGH_DELAYS, f.name) for f in fields(DelayConfig)},
    },
    "gamma": {
        **_SWEEP_BASE,
        "sweep": {"axes": [
            {"path": "duplex", "values": [
                {"mode": "fdd"},
                {"mode": "dynamic_tdd", "gamma": "slot"},
                {"mode": "dynamic_tdd", "gamma": "frame"},
            ]},
            {"path": "traffic.load_mbps", "values": _LOADS},
        ]},
    },
    "ul_scheme": {
        **_SWEEP_BASE,
        "sweep": {"axes": [
            {"path": "ul_scheme", "values": ["GF", "DG"]},
            {"path": "traffic.load_mbps", "values": _LOADS},
        ]},
    },
    "scs": {
        **_SWEEP_BASE,
        "segmentation": False,
        "duplex": {"mode": "dynamic_tdd", "gamma": "slot"},
        "sweep": {"axes": [
            {"path": "scs_khz", "values": [30, 60]},
            {"path": "traffic.load_mbps", "values": _LOADS},
        ]},
    },
    "tti": {
        **_SWEEP_BASE,
        "traffic": {"load_mbps": 1.0},
        "sweep": {"axes": [
            {"path": "duplex", "values": [{"mode": "fdd"}, {"mode": "dynamic_tdd", "gamma": "frame"}]},
            {"path": "tti_symbols", "values": [2, 4, 7, 14]},
        ]},
    },
    "cli": {
        **_SWEEP_BASE,
        "duplex": {"mode": "dynamic_tdd", "gamma": "slot"},
        "sweep": {"axes": [
            {"path": "cli.chi", "values": [0.0, 0.3]},
            {"path": "traffic.load_mbps", "values": _LOADS},
        ]},
    },
}


def deep_merge(base: dict, top: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in top.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_path(d: dict, path: str, value: Any) -> dict:
    """Return a copy of ``d`` with the dotted ``path`` set (dict values are merged)."""
    out = copy.deepcopy(d)
    keys = path.split(".")
    node = out
    for k in keys[:-1]:
        nxt = node.get(k)
        if not isinstance(nxt, dict):
            nxt = {}
            node[k] = nxt
        node = nxt
    last = keys[-1]
    if isinstance(value, dict) and isinstance(node.get(last), dict):
        if last == "duplex":
            # switching duplex mode drops the old mode's options
            node[last] = copy.deepcopy(value)
        else:
            node[last] = deep_merge(node[last], value)
    else:
        node[last] = copy.deepcopy(value)
    return out


def parse_override(text: str) -> tuple[str, Any]:
    """``key.path=value`` with TOML value syntax; bare words are strings."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def load_file(path: str) -> dict:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    return copy.deepcopy(PRESETS[name])


def _gamma_slots(value: Any, scs_khz: int) -> int:
    slots_per_ms = 2 ** make_numerology(scs_khz).mu
    if value == "slot":
        return 1
    if value == "frame":
        return 10 * slots_per_ms
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f'duplex.gamma must be an integer slot count, "slot" or "frame", got {value!r}')
    return value


def _chi(value: Any, n_cells: int) -> CliCoupling:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return CliCoupling() if value == 0 else CliCoupling.symmetric(n_cells, float(value))
    if isinstance(value, list):
        return CliCoupling(tuple(tuple(float(x) for x in row) for row in value))
    raise ConfigError(f"cli.chi must be a number or a matrix, got {value!r}")


def _unknown(section: str, d: dict, allowed: set, errors: list) -> None:
    for k in d:
        if k not in allowed:
            errors.append(f"{section}{k}: unknown key")


def _grab(errors: list, label: str, fn):
    try:
        return fn()
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        msg = str(exc).strip("'\"")
        errors.append(msg if msg.startswith(label + ".") else f"{label}: {msg}")
        return None


def resolve(raw: dict) -> dict:
    """Defaults filled in; the result is what the config hash covers."""
    d = deep_merge(DEFAULTS, {k: v for k, v in raw.items() if k not in ("sweep", "kind")})
    if "horizon_symbols" in raw:
        d.pop("horizon_ms", None)
    return d


def build(raw: dict) -> tuple[Optional[SimConfig], list[str]]:
    """Turn a (partial) nested mapping into a validated SimConfig.

    Returns (config, []) or (None, per-field error messages).
    """
    errors: list[str] = []
    d = resolve(raw)
    _unknown("", {k: v for k, v in d.items() if k != "kind"}, TOP_KEYS, errors)
    dup, tr, dl, cl = (d.get(k, {}) for k in ("duplex", "traffic", "delays", "cli"))
    for name, sec, allowed in (("duplex.", dup, DUPLEX_KEYS), ("traffic.", tr, TRAFFIC_KEYS),
                               ("delays.", dl, DELAY_KEYS), ("cli.", cl, {"chi"})):
        if not isinstance(sec, dict):
            errors.append(f"{name[:-1]}: must be a section")
            return None, errors
        _unknown(name, sec, allowed, errors)

    scs = d["scs_khz"]
    num = _grab(errors, "scs_khz", lambda: make_numerology(scs))

    mode_name = dup.get("mode", "dynamic_tdd")
    mode = None
    if mode_name not in MODES:
        errors.append(f"duplex.mode: must be one of {', '.join(MODES)}, got {mode_name!r}")
    elif num is not None:
        if mode_name == "fdd":
            mode = FDD(dup.get("dl_bandwidth_fraction", 0.5))
        elif mode_name == "dynamic_tdd":
            g = _grab(errors, "duplex.gamma", lambda: _gamma_slots(dup.get("gamma", "frame"), scs))
            mode = None if g is None else DynamicTDD(g, bool(dup.get("multislot_mixing", False)))
        elif mode_name == "flexible_fdd":
            g = _grab(errors, "duplex.gamma", lambda: _gamma_slots(dup.get("gamma", "frame"), scs))
            mode = None if g is None else FlexibleFDD(dup.get("guard_prb_fraction", 0.2), g)
        else:
            mode = StaticTDD(tuple(dup.get("formats", ())))

    tr = {k: v for k, v in tr.items() if k in TRAFFIC_KEYS}
    load = tr.pop("load_mbps", None)
    traffic = _grab(errors, "traffic", lambda: TrafficConfig(**tr))
    if traffic is not None and load is not None:
        def scaled():
            if load < 0:
                raise ConfigError("must be >= 0")
            half = load * 1e6 / 2.0
            lam_dl = half / (traffic.k_dl * traffic.f_dl_bits) if traffic.k_dl and traffic.f_dl_bits else 0.0
            lam_ul = half / (traffic.k_ul * traffic.f_ul_bits) if traffic.k_ul and traffic.f_ul_bits else 0.0
            return TrafficConfig(traffic.k_dl, traffic.k_ul, traffic.f_dl_bits, traffic.f_ul_bits, lam_dl, lam_ul)
        traffic = _grab(errors, "traffic.load_mbps", scaled)
    if traffic is not None:
        _grab(errors, "traffic", traffic.validate)

    dl = {k: v for k, v in dl.items() if k in DELAY_KEYS}
    pname = dl.pop("preset", "fast")
    delays = None
    if pname not in PROCESSING_PRESETS:
        errors.append(f"delays.preset: must be one of {', '.join(PROCESSING_PRESETS)}, got {pname!r}")
    else:
        delays = _grab(errors, "delays", lambda: DelayConfig(**{**PROCESSING_PRESETS[pname], **dl}))
        if delays is not None:
            _grab(errors, "delays", delays.validate)

    n_cells = d["n_cells"]
    cli = _grab(errors, "cli.chi", lambda: _chi(cl.get("chi", 0.0), n_cells))

    scheme = _grab(errors, "ul_scheme", lambda: ULScheme(d["ul_scheme"]))
    horizon = d.get("horizon_symbols")
    if horizon is None and num is not None:
        horizon = round(d["horizon_ms"] * num.symbols_per_second / 1000)
    for label, ok, msg in (
        ("n_cells", _is_int(n_cells) and n_cells >= 1, "must be an integer >= 1"),
        ("tti_symbols", d["tti_symbols"] in (2, 4, 7, 14), "must be one of 2, 4, 7, 14"),
        ("n_prb", _is_int(d["n_prb"]) and d["n_prb"] >= 1, "must be an integer >= 1"),
        ("bits_per_prb_per_symbol", _is_int(d["bits_per_prb_per_symbol"]) and d["bits_per_prb_per_symbol"] >= 1,
         "must be an integer >= 1"),
        ("bler_base", _in_unit(d["bler_base"]), f"{d['bler_base']!r} outside [0, 1)"),
        ("bler_retx", _in_unit(d["bler_retx"]), f"{d['bler_retx']!r} outside [0, 1)"),
        ("max_harq", _is_int(d["max_harq"]) and d["max_harq"] >= 0, "must be an integer >= 0"),
        ("seed", _is_int(d["seed"]) and d["seed"] >= 0, "must be a non-negative integer"),
        ("horizon", isinstance(horizon, (int, float)) and horizon > 0, "must be positive"),
    ):
        if not ok:
            errors.append(f"{label}: {msg}")
    if errors:
        return None, errors
    cfg = SimConfig(
        n_cells=n_cells,
        scs_khz=scs,
        tti_symbols=d["tti_symbols"],
        duplex=mode,
        traffic=traffic,
        delays=delays,
        ul_scheme=scheme,
        n_prb=d["n_prb"],
        bits_per_prb_per_symbol=d["bits_per_prb_per_symbol"],
        segmentation=bool(d["segmentation"]),
        bler_base=d["bler_base"],
        bler_retx=d["bler_retx"],
        max_harq=d["max_harq"],
        cli=cli,
        horizon_symbols=int(horizon),
        seed=d["seed"],
    )
    if not errors:
        _grab(errors, "config", cfg.validate)
    return (None, errors) if errors else (cfg, [])


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _in_unit(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and 0 <= v < 1


def validate_config(path: str) -> tuple[Optional[SimConfig], list[str]]:
    """Load and check a config file.  Missing files raise OSError."""
    try:
        raw = load_file(path)
    except ConfigError as exc:
        return None, [str(exc)]
    cfg, errors = build(raw)
    return cfg, [f"{path}: {e}" for e in errors]


def config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
