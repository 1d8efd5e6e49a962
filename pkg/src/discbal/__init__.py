"""Online discrepancy minimization for uniformly random d-sparse binary
columns: the exceptional-row correction strategy, baselines, an exact
offline oracle, and a reproducible experiment harness."""

from .model import (
    Instance,
    RowLedger,
    SparseColumn,
    Trace,
    ledger_apply,
    ledger_new,
    prefix_disc,
    replay,
)
from .oracle import eval_disc, min_disc_naive, offline_min_disc
from .sampler import SeedSpec, Stream, sample_column, sample_instance, sample_sigma_tilde
from .strategies import KINDS, StrategyParams, StrategyState, TraceOptions, run_online

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "KINDS",
    "RowLedger",
    "SeedSpec",
    "SparseColumn",
    "StrategyParams",
    "StrategyState",
    "Stream",
    "Trace",
    "TraceOptions",
    "eval_disc",
    "ledger_apply",
    "ledger_new",
    "min_disc_naive",
    "offline_min_disc",
    "prefix_disc",
    "replay",
    "run_online",
    "sample_column",
    "sample_instance",
    "sample_sigma_tilde",
]
