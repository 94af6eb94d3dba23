"""Command-line experiment runner.

Every sweep point and replication gets its own directory holding
``records.csv``, ``schedule.log``, ``summary.txt``, CCDF files per direction
and the scheduling-delay ECDF.  Replications of one point are pooled into a
``merged`` directory.  ``manifest.json`` lists every file with its sha256
and the hash of the fully resolved config that produced it; each run
directory also holds that config as ``config.json``, which ``--config``
accepts for an exact re-run.

Seeds: replication r of every sweep point runs with ``seed + r``, so all
points share the same random streams (common random numbers).
"""
from __future__ import annotations

import argparse
import hashlib
import io
import itertools
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .config import PRESETS, TOP_KEYS, build, config_hash, load_file, parse_override, preset, resolve, set_path
from .duplexing import CellSchedule
from .engine import RunResult, run, write_records
from .latency import WALKTHROUGH_ARRIVAL, dl_latency, format_timeline, ul_latency, ULScheme
from .metrics import (
    LatencySeries,
    scheduling_delay_ecdf,
    summarize,
    write_ccdf,
    write_ecdf,
    write_summary,
)
from .numerology import ConfigError
from .traffic import offered_load

EPS = (1e-2, 1e-3, 1e-5)


@dataclass
class Experiment:
    base: dict
    axes: list = field(default_factory=list)  # [(dotted path, [values])]
    replications: int = 1
    out: Path = Path("results")
    jobs: int = 1

    def points(self) -> list[dict]:
        """One {path: value} mapping per sweep point, first axis outermost."""
        if not self.axes:
            return [{}]
        paths = [p for p, _ in self.axes]
        return [dict(zip(paths, combo)) for combo in itertools.product(*(v for _, v in self.axes))]


def _atomic_write(path: Path, data: bytes) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(data).hexdigest()


def _text(writer) -> bytes:
    buf = io.StringIO()
    writer(buf)
    return buf.getvalue().encode()


def _metric_files(records: list, symbol_us: float, meta: dict) -> dict[str, bytes]:
    files: dict[str, bytes] = {}
    summaries = {"all": summarize(records, symbol_us, None, EPS)}
    for d, tag in ((0, "DL"), (1, "UL")):
        summaries[tag] = summarize(records, symbol_us, d, EPS)
    buf = io.StringIO()
    write_summary(summaries, buf, symbol_us, meta)
    files["summary.txt"] = buf.getvalue().encode()
    for d, tag in ((None, "all"), (0, "DL"), (1, "UL")):
        series = LatencySeries.from_records(records, symbol_us, d)
        files[f"ccdf_{tag}.csv"] = _text(lambda fh: write_ccdf(series, fh))
    if any(r.delivered for r in records):
        files["sched_delay_ecdf.csv"] = _text(lambda fh: write_ecdf(scheduling_delay_ecdf(records), fh))
    return files


def run_meta(cfg) -> dict:
    """Run parameters echoed at the top of every summary."""
    return {
        "mode": type(cfg.duplex).__name__,
        "load_mbps_per_cell": f"{offered_load(cfg.traffic)['total_bps'] / 1e6:g}",
        "gamma_slots": getattr(cfg.duplex, "gamma_slots", "none"),
        "scs_khz": cfg.scs_khz,
        "tti_symbols": cfg.tti_symbols,
        "ul_scheme": ULScheme(cfg.ul_scheme).value,
        "n_cells": cfg.n_cells,
    }


def _run_one(job: tuple) -> tuple:
    """Worker: simulate one (point, replication) and write its files."""
    out, rel, resolved = job
    cfg, errors = build(resolved)
    if errors:
        raise ConfigError("; ".join(errors))
    res: RunResult = run(cfg)
    sym_us = cfg.numerology.symbol_duration_us
    chash = config_hash(resolved)
    files = {
        "config.json": (json.dumps(resolved, sort_keys=True, indent=2) + "\n").encode(),
        "records.csv": _text(lambda fh: write_records(res.records, fh, sym_us)),
        "schedule.log": "".join(f"{line}\n" for line in res.schedule_log).encode(),
    }
    files.update(_metric_files(res.records, sym_us, {**run_meta(cfg), "config_hash": chash, "seed": cfg.seed}))
    written = []
    for name, data in files.items():
        written.append((f"{rel}/{name}", _atomic_write(Path(out) / rel / name, data)))
    return written, res.records, sym_us, run_meta(cfg)


def _run_oracle(raw: dict, out: Path) -> list[tuple[str, str, str]]:
    """Lone-packet timelines for a fixed static schedule (no simulation)."""
    resolved = resolve(raw)
    cfg, errors = build(raw)
    if errors:
        raise ConfigError("; ".join(errors))
    sched = CellSchedule.repeating(*cfg.duplex.formats)
    sym_us = cfg.numerology.symbol_duration_us
    n_harq = 1
    dl = dl_latency(cfg.delays, sched, WALKTHROUGH_ARRIVAL, n_harq, tti_symbols=cfg.tti_symbols)
    ul = ul_latency(cfg.delays, sched, WALKTHROUGH_ARRIVAL, n_harq, ULScheme.DG, tti_symbols=cfg.tti_symbols)
    chash = config_hash(resolved)
    files = {
        "config.json": (json.dumps(resolved, sort_keys=True, indent=2) + "\n").encode(),
        "timeline_dl.txt": (format_timeline(dl, sym_us) + "\n").encode(),
        "timeline_ul_dg.txt": (format_timeline(ul, sym_us) + "\n").encode(),
        "summary.txt": f"config_hash={chash}\ndl_total_symbols={dl.total_symbols}\n"
                       f"ul_dg_total_symbols={ul.total_symbols}\n".encode(),
    }
    return [(name, _atomic_write(out / name, data), chash) for name, data in files.items()]


def _check_axes(axes: list) -> None:
    for path, values in axes:
        if not isinstance(path, str) or path.split(".")[0] not in TOP_KEYS - {"sweep"}:
            raise ConfigError(f"sweep axis {path!r}: unknown config path")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep axis {path!r}: values must be a non-empty list")


def run_experiment(exp: Experiment) -> dict:
    """Run every point x replication, write artifacts and return the manifest."""
    if exp.replications < 1:
        raise ConfigError("replications must be >= 1")
    _check_axes(exp.axes)
    out = Path(exp.out)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"{out}: directory is not writable")

    manifest: dict[str, Any] = {"version": __version__, "configs": {}, "files": [], "points": []}
    if exp.base.get("kind") == "oracle":
        for name, digest, chash in _run_oracle(exp.base, out):
            manifest["files"].append({"path": name, "sha256": digest, "config_hash": chash})
        manifest["configs"][chash] = resolve(exp.base)
        _write_manifest(out, manifest)
        return manifest

    base_seed = resolve(exp.base)["seed"]
    jobs, meta = [], []
    errors: list[str] = []
    for i, params in enumerate(exp.points()):
        raw = exp.base
        for path, value in params.items():
            raw = set_path(raw, path, value)
        for r in range(exp.replications):
            resolved = resolve(set_path(raw, "seed", base_seed + r))
            _, errs = build(resolved)
            errors += [f"point {i} {params}: {e}" for e in errs]
            jobs.append((str(out), f"p{i:03d}/rep{r}", resolved))
            meta.append((i, params, r, resolved))
    if errors:
        raise ConfigError("\n".join(dict.fromkeys(errors)))

    if exp.jobs > 1:
        with ProcessPoolExecutor(max_workers=exp.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]

    pooled: dict[int, list] = {}
    for (i, params, r, resolved), (written, records, sym_us, rmeta) in zip(meta, results):
        chash = config_hash(resolved)
        manifest["configs"][chash] = resolved
        for path, digest in written:
            manifest["files"].append({"path": path, "sha256": digest, "config_hash": chash,
                                      "point": i, "replication": r, "seed": resolved["seed"]})
        pooled.setdefault(i, []).append((records, sym_us, chash, rmeta))

    for i, params in enumerate(exp.points()):
        runs = pooled[i]
        records = [rec for recs, _, _, _ in runs for rec in recs]
        hashes = [h for _, _, h, _ in runs]
        sym_us = runs[0][1]
        files = _metric_files(records, sym_us, {**runs[0][3], "replications": len(runs),
                                                "config_hashes": ",".join(hashes)})
        for name, data in files.items():
            rel = f"p{i:03d}/merged/{name}"
            manifest["files"].append({"path": rel, "sha256": _atomic_write(out / rel, data),
                                      "config_hash": hashes[0], "point": i, "merged_from": hashes})
        manifest["points"].append({"point": i, "params": params, "config_hashes": hashes})

    _write_manifest(out, manifest)
    return manifest


def _write_manifest(out: Path, manifest: dict) -> None:
    _atomic_write(out / "manifest.json", (json.dumps(manifest, sort_keys=True, indent=2, default=str) + "\n").encode())


def _load_source(args) -> dict:
    if args.config and args.preset:
        raise ConfigError("use either --config or --preset, not both")
    if args.config:
        if args.config.endswith(".json"):
            with open(args.config) as fh:
                return json.load(fh)
        return load_file(args.config)
    return preset(args.preset or "defaults")


def _parse_axes(sweep: Any) -> tuple[list, Optional[int]]:
    if sweep is None:
        return [], None
    if not isinstance(sweep, dict):
        raise ConfigError("sweep: must be a section")
    axes = []
    for ax in sweep.get("axes", []):
        if not isinstance(ax, dict) or set(ax) != {"path", "values"}:
            raise ConfigError("sweep.axes: each axis needs exactly 'path' and 'values'")
        axes.append((ax["path"], ax["values"]))
    return axes, sweep.get("replications")


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="duplexsim", description="Duplexing latency simulator and sweep runner.")
    p.add_argument("--config", metavar="PATH", help="TOML config (or a run's config.json)")
    p.add_argument("--preset", metavar="NAME", help=f"built-in preset: {', '.join(PRESETS)}")
    p.add_argument("--seed", type=int, help="base seed; replication r uses seed + r")
    p.add_argument("--replications", type=int, help="runs per sweep point")
    p.add_argument("--out", default="results", metavar="DIR", help="output directory (default: results)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted-path override, repeatable (e.g. traffic.load_mbps=2.5)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--validate", action="store_true", help="check the config, print it resolved and exit")
    p.add_argument("--list-presets", action="store_true", help="print preset names and exit")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    if args.list_presets:
        print("\n".join(PRESETS))
        return 0
    try:
        raw = _load_source(args)
        for item in args.override:
            key, value = parse_override(item)
            raw = set_path(raw, key, value)
        if args.seed is not None:
            raw = set_path(raw, "seed", args.seed)
        axes, reps = _parse_axes(raw.get("sweep"))
        if args.replications is not None:
            reps = args.replications
        if args.validate:
            _check_axes(axes)
            _, errors = build(raw)
            if errors:
                raise ConfigError("\n".join(errors))
            print(json.dumps(resolve(raw), sort_keys=True, indent=2))
            return 0
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        exp = Experiment(raw, axes, 1 if reps is None else reps, Path(args.out), args.jobs)
        manifest = run_experiment(exp)
    except ConfigError as exc:
        print(f"error: invalid configuration\n{exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest['files'])} files to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
