"""Experiment configuration, trial orchestration, aggregation and export.

A config describes one sweep: fixed (n, d, T, strategy) parameters plus a
trial count and a master seed. Trial k derives all of its randomness from
(master_seed, k), so trials are independent, order-insensitive, and safe to
run concurrently; results are identical no matter how many workers ran them.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics
from .model import Instance, SparseColumn
from .sampler import SeedSpec, sample_instance, sample_sigma_tilde
from .strategies import KINDS, StrategyParams, TraceOptions, run_online

__all__ = [
    "SCHEMA_VERSION",
    "CSV_HEADER",
    "ConfigError",
    "RecordOptions",
    "ExperimentConfig",
    "TrialRecord",
    "AggregateSummary",
    "guarantee_range_reasons",
    "run_trial",
    "run_sweep",
    "export",
    "records_from_json",
    "load_config",
    "expand_sweep",
    "write_instance",
    "read_instance",
]

SCHEMA_VERSION = 1

CSV_HEADER = (
    "trial,seed,n,d,T,strategy,tau,final_disc,max_prefix_disc,"
    "e_size,corrected,divergence,wall_ms"
)

ENV_WORKERS = "DISCBAL_THREADS"


class ConfigError(ValueError):
    """Invalid configuration; message lines carry the offending field path."""


@dataclass(frozen=True)
class RecordOptions:
    """Optional per-trial diagnostics to compute and attach to records.

    wall-clock measurement is a flag because timing is the one field that
    cannot be byte-reproducible; disable it when comparing output files.
    """

    trace_snapshots: tuple[int, ...] = ()
    spread_q_max: int = 0
    categories: bool = False
    categories_w_max: int | None = None
    m_set_ks: tuple[int, ...] = ()
    m_set_base: float | None = None
    untouched_rows: bool = False
    measure_time: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    d: int
    strategy: str = "alg1"
    T: int | None = None  # defaults to n
    c_alg: float = 28.0
    tau_override: float | None = None
    trials: int = 1
    master_seed: int = 0
    record: RecordOptions = field(default_factory=RecordOptions)
    output_path: str | None = None
    output_format: str = "csv"
    workers: int | None = None

    @property
    def horizon(self) -> int:
        return self.n if self.T is None else self.T

    def strategy_params(self) -> StrategyParams:
        return StrategyParams(
            kind=self.strategy,
            n=self.n,
            c_alg=self.c_alg,
            tau_override=self.tau_override,
        )

    def validate(self) -> None:
        problems = []
        if not isinstance(self.n, int) or self.n < 1:
            problems.append("config.n: must be a positive integer")
        if not isinstance(self.d, int) or self.d < 1:
            problems.append("config.d: must be a positive integer")
        elif isinstance(self.n, int) and self.n >= 1 and self.d > self.n:
            problems.append("config.d: must be <= config.n")
        if self.T is not None and (not isinstance(self.T, int) or self.T < 0):
            problems.append("config.T: must be a nonnegative integer")
        if self.strategy not in KINDS:
            problems.append(f"config.strategy: must be one of {'|'.join(KINDS)}")
        if not isinstance(self.c_alg, (int, float)) or not self.c_alg > 0:
            problems.append("config.c_alg: must be a number > 0")
        if self.tau_override is not None and (
            not isinstance(self.tau_override, (int, float)) or not self.tau_override > 0
        ):
            problems.append("config.tau_override: must be a number > 0")
        if self.tau_override is None and isinstance(self.n, int) and 1 <= self.n < 16:
            problems.append("config.tau_override: required when n < 16")
        if not isinstance(self.trials, int) or self.trials < 1:
            problems.append("config.trials: must be a positive integer")
        if not isinstance(self.master_seed, int):
            problems.append("config.master_seed: must be an integer")
        if self.output_format not in ("csv", "json"):
            problems.append("config.output_format: must be csv or json")
        if self.workers is not None and (not isinstance(self.workers, int) or self.workers < 1):
            problems.append("config.workers: must be a positive integer")
        rec = self.record
        for t in rec.trace_snapshots:
            if not isinstance(t, int) or t < 0:
                problems.append("config.record.trace_snapshots: times must be integers >= 0")
                break
        if not isinstance(rec.spread_q_max, int) or rec.spread_q_max < 0:
            problems.append("config.record.spread_q_max: must be an integer >= 0")
        elif rec.spread_q_max > 0 and isinstance(self.n, int) and self.n < 16:
            problems.append("config.record.spread_q_max: needs n >= 16")
        for k in rec.m_set_ks:
            if not isinstance(k, int) or k < 0:
                problems.append("config.record.m_set_ks: entries must be integers >= 0")
                break
        if problems:
            raise ConfigError("\n".join(problems))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["schema_version"] = SCHEMA_VERSION
        out["record"]["trace_snapshots"] = list(self.record.trace_snapshots)
        out["record"]["m_set_ks"] = list(self.record.m_set_ks)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        data.pop("schema_version", None)
        rec = data.pop("record", None) or {}
        if not isinstance(rec, dict):
            raise ConfigError("config.record: must be an object")
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(
                "\n".join(f"config.{k}: unknown field" for k in sorted(unknown))
            )
        rec_unknown = set(rec) - {f.name for f in dataclasses.fields(RecordOptions)}
        if rec_unknown:
            raise ConfigError(
                "\n".join(f"config.record.{k}: unknown field" for k in sorted(rec_unknown))
            )
        rec = dict(rec)
        for name in ("trace_snapshots", "m_set_ks"):
            if name in rec:
                if not isinstance(rec[name], (list, tuple)):
                    raise ConfigError(f"config.record.{name}: must be a list")
                rec[name] = tuple(rec[name])
        cfg = cls(record=RecordOptions(**rec), **data)
        cfg.validate()
        return cfg


def guarantee_range_reasons(n: int, d: int, T: int) -> list[str]:
    """Why (n, d, T) falls outside the analyzed parameter range, if it does."""
    reasons = []
    if d < 2:
        reasons.append("d < 2")
    if n >= 16:
        bound = math.log(math.log(n)) ** 2 / math.log(math.log(math.log(n))) if math.log(math.log(n)) > 1 else 0.0
        if bound > 0 and d > bound:
            reasons.append(f"d > (ln ln n)^2 / ln ln ln n (= {bound:.3f})")
    else:
        reasons.append("n < 16")
    if T != n:
        reasons.append("T != n")
    return reasons


@dataclass
class TrialRecord:
    trial_index: int
    master_seed: int
    n: int
    d: int
    T: int
    strategy: str
    tau: float
    final_disc: int
    max_prefix_disc: int
    e_size_final: int
    corrected_columns: int
    sign_divergence_count: int
    wall_time_ms: float
    in_guarantee_range: bool
    diagnostics: dict | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def csv_row(self) -> str:
        return ",".join(
            str(v)
            for v in (
                self.trial_index,
                self.master_seed,
                self.n,
                self.d,
                self.T,
                self.strategy,
                self.tau,
                self.final_disc,
                self.max_prefix_disc,
                self.e_size_final,
                self.corrected_columns,
                self.sign_divergence_count,
                self.wall_time_ms,
            )
        )


def _trial_diagnostics(cfg, instance, params, trace, ledger, sigma):
    out = {}
    rec = cfg.record
    if rec.trace_snapshots:
        wanted = set(rec.trace_snapshots)
        out["snapshots"] = [
            {
                "t": t,
                "disc": int(np.abs(arr).max()) if arr.size else 0,
                "rows_nonzero": int(np.count_nonzero(arr)),
            }
            for t, arr in sorted(trace.snapshots.items())
            if t in wanted
        ]
        out["exceptional_series"] = [
            list(row) for row in diagnostics.exceptional_stats(trace, ledger)
        ]
    if rec.spread_q_max > 0:
        spreads = []
        for entry in diagnostics.spread_schedule(cfg.n, rec.spread_q_max):
            if entry.k > instance.T or entry.k not in trace.snapshots:
                continue
            rep = diagnostics.best_spread(
                trace.snapshots[entry.k], min_width=entry.q, time=entry.k
            )
            spreads.append(
                {
                    "q": entry.q,
                    "k": entry.k,
                    "s_required": entry.s,
                    "ell": rep.ell if rep else None,
                    "r": rep.r if rep else None,
                    "size": rep.size if rep else 0,
                    "passed": bool(rep and rep.size >= entry.s),
                }
            )
        out["spreads"] = spreads
    if rec.categories:
        cats = diagnostics.compute_categories(
            instance, sigma, trace.signs, params.tau, w_max=rec.categories_w_max
        )
        hist: dict[int, int] = {}
        for w, _ in cats.values():
            hist[w] = hist.get(w, 0) + 1
        out["categories"] = {
            "total": len(cats),
            "by_category": {str(w): hist[w] for w in sorted(hist)},
        }
    if rec.m_set_ks:
        base = rec.m_set_base
        if base is None:
            base = (cfg.c_alg + 1.0) * math.log(math.log(cfg.n))
        out["m_sets"] = {
            "base": base,
            "counts": {
                str(k): diagnostics.count_m_set(trace.row_abs_max, base, k)
                for k in rec.m_set_ks
            },
        }
    if rec.untouched_rows:
        out["untouched_rows"] = diagnostics.count_untouched_rows(instance)
    return out or None


def run_trial(cfg: ExperimentConfig, trial_index: int) -> TrialRecord:
    """Execute one fully seeded trial and assemble its record."""
    t0 = time.perf_counter() if cfg.record.measure_time else None
    seed = SeedSpec(cfg.master_seed, trial_index)
    T = cfg.horizon
    params = cfg.strategy_params()
    instance = sample_instance(cfg.n, cfg.d, T, seed)
    snapshot_times = set(cfg.record.trace_snapshots)
    if cfg.record.spread_q_max > 0:
        for entry in diagnostics.spread_schedule(cfg.n, cfg.record.spread_q_max):
            if entry.k <= T:
                snapshot_times.add(entry.k)
    options = TraceOptions(
        snapshot_times=tuple(sorted(snapshot_times)),
        stats_times=tuple(sorted(set(cfg.record.trace_snapshots))),
    )
    trace, ledger = run_online(instance, params, seed, options)
    sigma = sample_sigma_tilde(T, seed)
    diag = _trial_diagnostics(cfg, instance, params, trace, ledger, sigma)
    wall_ms = (time.perf_counter() - t0) * 1000.0 if t0 is not None else 0.0
    return TrialRecord(
        trial_index=trial_index,
        master_seed=cfg.master_seed,
        n=cfg.n,
        d=cfg.d,
        T=T,
        strategy=cfg.strategy,
        tau=params.tau,
        final_disc=ledger.final_disc(),
        max_prefix_disc=trace.max_prefix_disc,
        e_size_final=ledger.exceptional_count,
        corrected_columns=ledger.corrected_count,
        sign_divergence_count=int(np.count_nonzero(trace.signs != sigma)),
        wall_time_ms=wall_ms,
        in_guarantee_range=not guarantee_range_reasons(cfg.n, cfg.d, T),
        diagnostics=diag,
    )


def _field_stats(values) -> dict:
    vals = [float(v) for v in values]
    return {
        "mean": statistics.fmean(vals),
        "min": min(vals),
        "max": max(vals),
        "stddev": statistics.stdev(vals) if len(vals) > 1 else 0.0,
    }


@dataclass
class AggregateSummary:
    trials: int
    strategy: str
    n: int
    d: int
    T: int
    tau: float
    in_guarantee_range: bool
    guarantee_range_notes: list[str]
    stats: dict
    diagnostics: dict | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def summarize(cfg: ExperimentConfig, records: list[TrialRecord]) -> AggregateSummary:
    stats = {
        name: _field_stats(getattr(r, name) for r in records)
        for name in (
            "max_prefix_disc",
            "final_disc",
            "e_size_final",
            "corrected_columns",
            "sign_divergence_count",
            "wall_time_ms",
        )
    }
    diag_summary: dict = {}
    spread_rates: dict[int, list[bool]] = {}
    untouched: list[int] = []
    m_set_counts: dict[str, list[int]] = {}
    category_totals: list[int] = []
    for r in records:
        if not r.diagnostics:
            continue
        for sp in r.diagnostics.get("spreads", ()):
            spread_rates.setdefault(sp["q"], []).append(sp["passed"])
        if "untouched_rows" in r.diagnostics:
            untouched.append(r.diagnostics["untouched_rows"])
        for k, c in r.diagnostics.get("m_sets", {}).get("counts", {}).items():
            m_set_counts.setdefault(k, []).append(c)
        if "categories" in r.diagnostics:
            category_totals.append(r.diagnostics["categories"]["total"])
    if spread_rates:
        diag_summary["spread_pass_rate"] = {
            str(q): sum(v) / len(v) for q, v in sorted(spread_rates.items())
        }
    if untouched:
        diag_summary["untouched_rows"] = _field_stats(untouched)
    if m_set_counts:
        diag_summary["m_set_counts"] = {
            k: _field_stats(v) for k, v in sorted(m_set_counts.items())
        }
    if category_totals:
        diag_summary["categorized_rows"] = _field_stats(category_totals)
    reasons = guarantee_range_reasons(cfg.n, cfg.d, cfg.horizon)
    return AggregateSummary(
        trials=len(records),
        strategy=cfg.strategy,
        n=cfg.n,
        d=cfg.d,
        T=cfg.horizon,
        tau=cfg.strategy_params().tau,
        in_guarantee_range=not reasons,
        guarantee_range_notes=reasons,
        stats=stats,
        diagnostics=diag_summary or None,
    )


def _resolve_workers(cfg: ExperimentConfig) -> int:
    env = os.environ.get(ENV_WORKERS)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{ENV_WORKERS}: must be an integer, got {env!r}")
    if cfg.workers is not None:
        return cfg.workers
    return os.cpu_count() or 1


def run_sweep(cfg: ExperimentConfig) -> tuple[list[TrialRecord], AggregateSummary]:
    """Run all trials of a config; records come back in trial-index order."""
    cfg.validate()
    workers = _resolve_workers(cfg)
    if workers == 1 or cfg.trials == 1:
        records = [run_trial(cfg, k) for k in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_trial, cfg, k) for k in range(cfg.trials)]
            records = [f.result() for f in futures]
    summary = summarize(cfg, records)
    if cfg.output_path:
        export(records, cfg.output_format, cfg.output_path, summary=summary, config=cfg)
    return records, summary


def export(
    records: list[TrialRecord],
    fmt: str,
    path,
    summary: AggregateSummary | None = None,
    config: ExperimentConfig | None = None,
) -> Path:
    """Write records to disk; CSV for tabular work, JSON for full fidelity."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [f"# schema_version={SCHEMA_VERSION}", CSV_HEADER]
        lines.extend(r.csv_row() for r in records)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    elif fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "config": config.to_dict() if config else None,
            "summary": summary.to_dict() if summary else None,
            "records": [r.to_dict() for r in records],
        }
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8", newline="\n")
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    return path


def records_from_json(path) -> list[TrialRecord]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    return [TrialRecord(**rec) for rec in doc["records"]]


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    return ExperimentConfig.from_dict(data)


_SWEEPABLE = ("n", "d", "T", "strategy", "c_alg", "tau_override", "master_seed")


def expand_sweep(data: dict) -> list[ExperimentConfig]:
    """Expand grid-valued fields into the cross product of configs.

    Any of n, d, T, strategy, c_alg, tau_override, master_seed may be a
    list; expansion order is the documented field order, varying the last
    field fastest.
    """
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    grids = []
    for name in _SWEEPABLE:
        if isinstance(data.get(name), list):
            values = data[name]
            if not values:
                raise ConfigError(f"config.{name}: grid must be nonempty")
            grids.append((name, values))
    configs = []

    def rec(i: int, acc: dict) -> None:
        if i == len(grids):
            configs.append(ExperimentConfig.from_dict(acc))
            return
        name, values = grids[i]
        for v in values:
            acc2 = dict(acc)
            acc2[name] = v
            rec(i + 1, acc2)

    rec(0, dict(data))
    return configs


def write_instance(path, instance: Instance) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "instance",
        "n": instance.n,
        "d": instance.d,
        "T": instance.T,
        "columns": [[int(i) for i in col.support] for col in instance],
    }
    path.write_text(json.dumps(doc) + "\n", encoding="utf-8", newline="\n")
    return path


def read_instance(path) -> Instance:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("kind") != "instance":
        raise ValueError(f"{path}: not an instance file")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    cols = [SparseColumn(tuple(c)) for c in doc["columns"]]
    return Instance.from_columns(doc["n"], doc["d"], cols)
