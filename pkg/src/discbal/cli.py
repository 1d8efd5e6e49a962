"""Command-line interface.

Subcommands:
    run     execute the trials of a single config (file and/or flags)
    sweep   expand a config with grid-valued fields and run every cell
    oracle  exact offline discrepancy of a small instance
    diag    re-run one seeded trial with diagnostics and print the record
    gen     write a seeded instance to a JSON file

Exit codes: 0 success, 1 bad usage or invalid config, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .harness import ConfigError, ExperimentConfig, load_config
from .oracle import DEFAULT_CAP, offline_min_disc
from .sampler import SeedSpec, sample_instance
from .strategies import KINDS


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--n", type=int, help="row count")
    p.add_argument("--d", type=int, help="column sparsity")
    p.add_argument("--T", type=int, help="time horizon (default n)")
    p.add_argument("--strategy", choices=KINDS)
    p.add_argument("--c-alg", dest="c_alg", type=float, help="threshold constant")
    p.add_argument("--tau", dest="tau_override", type=float, help="threshold override")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", dest="master_seed", type=int)
    p.add_argument("--out", dest="output_path", type=Path)
    p.add_argument("--format", dest="output_format", choices=("csv", "json"))
    p.add_argument("--workers", type=int)
    p.add_argument(
        "--no-timing",
        action="store_true",
        help="emit wall_ms as 0 so outputs are byte-reproducible",
    )


def _config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config is not None:
        cfg = load_config(args.config)
        data = cfg.to_dict()
        data.pop("schema_version", None)
    overrides = {
        name: getattr(args, name)
        for name in (
            "n",
            "d",
            "T",
            "strategy",
            "c_alg",
            "tau_override",
            "trials",
            "master_seed",
            "workers",
            "output_format",
        )
        if getattr(args, name, None) is not None
    }
    data.update(overrides)
    if args.output_path is not None:
        data["output_path"] = str(args.output_path)
    if args.no_timing:
        rec = dict(data.get("record") or {})
        rec["measure_time"] = False
        data["record"] = rec
    if "n" not in data:
        raise ConfigError("config.n: required (flag --n or config file)")
    if "d" not in data:
        raise ConfigError("config.d: required (flag --d or config file)")
    return ExperimentConfig.from_dict(data)


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    records, summary = harness.run_sweep(cfg)
    print(json.dumps(summary.to_dict(), indent=2))
    if cfg.output_path:
        print(f"wrote {len(records)} records to {cfg.output_path}", file=sys.stderr)
    return 0


def _cmd_sweep(args) -> int:
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {args.config}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file is not valid JSON: {e}")
    if args.no_timing:
        rec = dict(data.get("record") or {})
        rec["measure_time"] = False
        data["record"] = rec
    out_path = Path(args.output_path) if args.output_path is not None else None
    fmt = args.output_format or data.get("output_format") or "csv"
    data.pop("output_path", None)
    configs = harness.expand_sweep(data)
    all_records = []
    summaries = []
    for cfg in configs:
        records, summary = harness.run_sweep(cfg)
        all_records.extend(records)
        summaries.append(summary.to_dict())
    if out_path is not None:
        harness.export(all_records, fmt, out_path)
        print(f"wrote {len(all_records)} records to {out_path}", file=sys.stderr)
    print(json.dumps({"cells": summaries}, indent=2))
    return 0


def _instance_from_args(args, what: str):
    if args.infile is not None:
        return harness.read_instance(args.infile)
    missing = [f for f in ("n", "T", "d") if getattr(args, f) is None]
    if missing:
        raise ConfigError(
            f"{what}: need --in or all of --n/--T/--d (missing {', '.join(missing)})"
        )
    seed = SeedSpec(args.master_seed if args.master_seed is not None else 0, 0)
    return sample_instance(args.n, args.d, args.T, seed)


def _cmd_oracle(args) -> int:
    instance = _instance_from_args(args, "oracle")
    value, witness = offline_min_disc(instance, cap=args.cap, force=args.force)
    print(json.dumps(
        {"n": instance.n, "d": instance.d, "T": instance.T,
         "value": value, "witness": list(witness)}
    ))
    return 0


def _cmd_diag(args) -> int:
    cfg = _config_from_args(args)
    record = harness.run_trial(cfg, args.trial)
    print(json.dumps(record.to_dict(), indent=2))
    return 0


def _cmd_gen(args) -> int:
    seed = SeedSpec(args.master_seed if args.master_seed is not None else 0, 0)
    instance = sample_instance(args.n, args.d, args.T, seed)
    harness.write_instance(args.out, instance)
    print(f"wrote instance n={instance.n} d={instance.d} T={instance.T} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="discbal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_run = sub.add_parser("run", help="run the trials of one config")
    _add_config_flags(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a config with grid-valued fields")
    p_sweep.add_argument("--config", type=Path, required=True)
    p_sweep.add_argument("--out", dest="output_path", type=Path)
    p_sweep.add_argument("--format", dest="output_format", choices=("csv", "json"))
    p_sweep.add_argument("--no-timing", action="store_true")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_oracle = sub.add_parser("oracle", help="exact offline discrepancy")
    p_oracle.add_argument("--in", dest="infile", type=Path, help="instance JSON file")
    p_oracle.add_argument("--n", type=int)
    p_oracle.add_argument("--T", type=int)
    p_oracle.add_argument("--d", type=int)
    p_oracle.add_argument("--seed", dest="master_seed", type=int)
    p_oracle.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p_oracle.add_argument("--force", action="store_true")
    p_oracle.set_defaults(fn=_cmd_oracle)

    p_diag = sub.add_parser("diag", help="one seeded trial with diagnostics")
    _add_config_flags(p_diag)
    p_diag.add_argument("--trial", type=int, default=0)
    p_diag.set_defaults(fn=_cmd_diag)

    p_gen = sub.add_parser("gen", help="write a seeded instance file")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--T", type=int, required=True)
    p_gen.add_argument("--d", type=int, required=True)
    p_gen.add_argument("--seed", dest="master_seed", type=int)
    p_gen.add_argument("--out", type=Path, required=True)
    p_gen.set_defaults(fn=_cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    if not getattr(args, "fn", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.fn(args)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    except (ConfigError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
