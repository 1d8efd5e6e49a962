"""Online signing strategies behind one streaming interface.

The main strategy watches for columns whose support meets exactly one row
with an exceptionally large running product and picks the sign that shrinks
that row's product; on every other column it plays a pre-sampled uniform
sign. Three baselines (pure random, per-column greedy, majority vote) share
the same ledger bookkeeping so runs are directly comparable.

Sign convention throughout: sign(0) = +1, so a correction step at partial 0
assigns -1. This makes every run deterministic given its seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import Instance, RowLedger, SparseColumn, Trace, ledger_apply, ledger_new
from .sampler import SeedSpec, sample_sigma_tilde

__all__ = [
    "KINDS",
    "StrategyParams",
    "StrategyState",
    "TraceOptions",
    "new_state",
    "alg1_step",
    "random_step",
    "greedy_step",
    "majority_step",
    "step_fn",
    "run_online",
]

KINDS = ("alg1", "random", "greedy", "majority")

_STRATEGY_CODE = {
    "alg1": _kernels.ALG1,
    "random": _kernels.RANDOM,
    "greedy": _kernels.GREEDY,
    "majority": _kernels.MAJORITY,
}

DEFAULT_C_ALG = 28.0


@dataclass(frozen=True)
class StrategyParams:
    """Resolved strategy configuration for one run.

    The exceptional threshold is ``tau_override`` when given, else
    ``c_alg * ln(ln(n))``; the default path needs n >= 16 so that the
    resolved threshold is positive and meaningful (ln ln n > 1).
    """

    kind: str
    n: int
    c_alg: float = DEFAULT_C_ALG
    tau_override: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}, expected one of {KINDS}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.c_alg > 0:
            raise ValueError("c_alg must be > 0")
        if self.tau_override is not None and not self.tau_override > 0:
            raise ValueError("tau_override must be > 0")
        if self.tau_override is None and self.n < 16:
            raise ValueError("n must be >= 16 unless tau_override is given")

    @property
    def tau(self) -> float:
        if self.tau_override is not None:
            return float(self.tau_override)
        return self.c_alg * math.log(math.log(self.n))


@dataclass
class StrategyState:
    """Mutable per-run state: the ledger plus a cursor into the seed signs.

    A step may read only the seed signs up to the cursor, the ledger (which
    summarizes past columns) and the current column, which is exactly the
    information an online rule is allowed.
    """

    params: StrategyParams
    ledger: RowLedger
    sigma_tilde: np.ndarray
    cursor: int = 0

    def _next_seed_sign(self) -> int:
        if self.cursor >= len(self.sigma_tilde):
            raise ValueError("seed sign stream exhausted")
        return int(self.sigma_tilde[self.cursor])


def new_state(params: StrategyParams, sigma_tilde: np.ndarray) -> StrategyState:
    return StrategyState(
        params=params,
        ledger=ledger_new(params.n, params.tau),
        sigma_tilde=np.asarray(sigma_tilde, dtype=np.int8),
    )


def _sign_of(p: int) -> int:
    """sign with sign(0) = +1."""
    return 1 if p >= 0 else -1


def _finish_step(state: StrategyState, col: SparseColumn, sign: int) -> int:
    ledger_apply(state.ledger, col, sign)
    state.cursor += 1
    return sign


def alg1_step(state: StrategyState, col: SparseColumn) -> int:
    """Correct the unique exceptional row in the support, if there is one.

    When |support intersect E| == 1 the emitted sign is -sign(partial[i*]),
    which shrinks |partial[i*]| by one whenever it is nonzero; otherwise the
    next seed sign is played.
    """
    mask = state.ledger.exc_mask
    hit = -1
    nhit = 0
    for i in col.support:
        if mask[i - 1]:
            nhit += 1
            if nhit > 1:
                break
            hit = i - 1
    if nhit == 1:
        sign = -_sign_of(int(state.ledger.partial[hit]))
        state.ledger.corrected_count += 1
    else:
        sign = state._next_seed_sign()
    return _finish_step(state, col, sign)


def random_step(state: StrategyState, col: SparseColumn) -> int:
    """Always play the next seed sign (what alg1 does when E stays empty)."""
    return _finish_step(state, col, state._next_seed_sign())


def greedy_step(state: StrategyState, col: SparseColumn) -> int:
    """Pick the sign minimizing the worst |partial| inside the support.

    Ties go to +1.
    """
    partial = state.ledger.partial
    worst_plus = 0
    worst_minus = 0
    for i in col.support:
        p = int(partial[i - 1])
        worst_plus = max(worst_plus, abs(p + 1))
        worst_minus = max(worst_minus, abs(p - 1))
    sign = 1 if worst_plus <= worst_minus else -1
    return _finish_step(state, col, sign)


def majority_step(state: StrategyState, col: SparseColumn) -> int:
    """Oppose the summed partials over the support; seed sign on a zero sum."""
    partial = state.ledger.partial
    tot = sum(int(partial[i - 1]) for i in col.support)
    if tot > 0:
        sign = -1
    elif tot < 0:
        sign = 1
    else:
        sign = state._next_seed_sign()
    return _finish_step(state, col, sign)


_STEP_FNS = {
    "alg1": alg1_step,
    "random": random_step,
    "greedy": greedy_step,
    "majority": majority_step,
}


def step_fn(kind: str):
    return _STEP_FNS[kind]


@dataclass(frozen=True)
class TraceOptions:
    """What a run records beyond signs and the running max.

    ``snapshot_times`` are times t (0..T) at which the partial array is
    copied into the trace; ``stats_times`` sample the exceptional-set series
    (t, |E_t|, corrected_count_t). Times past T are ignored.
    """

    snapshot_times: tuple[int, ...] = ()
    stats_times: tuple[int, ...] = ()


# below this many support entries the kernel call overhead isn't worth it
_KERNEL_MIN_WORK = 1 << 14


def run_online(
    instance: Instance,
    params: StrategyParams,
    seed: SeedSpec,
    options: TraceOptions = TraceOptions(),
    engine: str = "auto",
) -> tuple[Trace, RowLedger]:
    """Stream the instance through a strategy, one irrevocable sign per column.

    The seed signs come from the SIGMA_TILDE stream of ``seed``. Decisions at
    step t see only the ledger (past columns), seed signs up to t, and the
    current column; future columns are structurally unreachable. Returns the
    completed trace and the final ledger.

    ``engine`` is "python", "compiled", or "auto" (compiled for large runs
    when numba is available). Both engines produce identical results.
    """
    if instance.n != params.n:
        raise ValueError(f"instance has n={instance.n}, params have n={params.n}")
    if engine not in ("auto", "python", "compiled"):
        raise ValueError(f"unknown engine {engine!r}")
    T = instance.T
    sigma = sample_sigma_tilde(T, seed)
    snap_times = tuple(sorted(set(int(t) for t in options.snapshot_times if 0 <= int(t) <= T)))
    stats_times = tuple(sorted(set(int(t) for t in options.stats_times if 0 <= int(t) <= T)))
    want_stats = bool(options.stats_times)
    if engine == "compiled" and not _kernels.HAVE_NUMBA:
        raise RuntimeError("compiled engine requested but numba is unavailable")
    use_kernel = engine == "compiled" or (
        engine == "auto" and _kernels.HAVE_NUMBA and T * instance.d >= _KERNEL_MIN_WORK
    )
    if use_kernel:
        return _run_compiled(instance, params, sigma, snap_times, stats_times, want_stats)
    return _run_python(instance, params, sigma, snap_times, stats_times, want_stats)


def _run_python(instance, params, sigma, snap_times, stats_times, want_stats):
    state = new_state(params, sigma)
    step = step_fn(params.kind)
    ledger = state.ledger
    partial = ledger.partial
    signs = np.empty(instance.T, dtype=np.int8)
    row_abs_max = np.zeros(params.n, dtype=np.int64)
    snapshots: dict[int, np.ndarray] = {}
    series: list[tuple[int, int, int]] = []
    snap_pending = list(snap_times)
    stats_pending = list(stats_times)
    if snap_pending and snap_pending[0] == 0:
        snapshots[0] = partial.copy()
        snap_pending.pop(0)
    if stats_pending and stats_pending[0] == 0:
        series.append((0, 0, 0))
        stats_pending.pop(0)
    maxdisc = 0
    corrected_nonzero = 0
    sup = instance.supports0
    for t in range(instance.T):
        col = instance[t]
        before_corrected = ledger.corrected_count
        target = None
        if params.kind == "alg1":
            hits = [i - 1 for i in col.support if ledger.exc_mask[i - 1]]
            if len(hits) == 1:
                target = int(partial[hits[0]])
        signs[t] = step(state, col)
        if ledger.corrected_count > before_corrected and target is not None and target != 0:
            corrected_nonzero += 1
            after = int(partial[hits[0]])
            assert abs(after) == abs(target) - 1, "correction failed to shrink"
        for i0 in sup[t]:
            a = abs(int(partial[i0]))
            if a > row_abs_max[i0]:
                row_abs_max[i0] = a
            if a > maxdisc:
                maxdisc = a
        tt = t + 1
        if snap_pending and snap_pending[0] == tt:
            snapshots[tt] = partial.copy()
            snap_pending.pop(0)
        if stats_pending and stats_pending[0] == tt:
            series.append((tt, ledger.exceptional_count, ledger.corrected_count))
            stats_pending.pop(0)
    trace = Trace(
        signs=signs,
        max_prefix_disc=maxdisc,
        snapshots=snapshots,
        row_abs_max=row_abs_max,
        exceptional_series=series if want_stats else None,
        corrected_nonzero=corrected_nonzero,
        corrected_shrink_violations=0,
    )
    return trace, ledger


def _run_compiled(instance, params, sigma, snap_times, stats_times, want_stats):
    snap_arr = np.asarray(snap_times, dtype=np.int64)
    stats_arr = np.asarray(stats_times, dtype=np.int64)
    snap_out = np.zeros((len(snap_times), params.n), dtype=np.int64)
    stats_out = np.zeros((len(stats_times), 3), dtype=np.int64)
    (
        signs,
        partial,
        row_abs_max,
        exc,
        entry_time,
        maxdisc,
        e_count,
        corrected,
        corrected_nonzero,
        violations,
    ) = _kernels.run_strategy(
        instance.supports0,
        params.n,
        sigma,
        float(params.tau),
        _STRATEGY_CODE[params.kind],
        snap_arr,
        snap_out,
        stats_arr,
        stats_out,
    )
    if violations:
        raise AssertionError(f"{violations} correction steps failed to shrink")
    ledger = ledger_new(params.n, params.tau)
    ledger.t = instance.T
    ledger.partial = partial
    ledger.exc_mask = exc.astype(bool)
    ledger.entry_time = entry_time
    ledger.exceptional_count = int(e_count)
    ledger.corrected_count = int(corrected)
    snapshots = {int(t): snap_out[i] for i, t in enumerate(snap_times)}
    series = [tuple(int(x) for x in row) for row in stats_out]
    trace = Trace(
        signs=signs,
        max_prefix_disc=int(maxdisc),
        snapshots=snapshots,
        row_abs_max=row_abs_max,
        exceptional_series=series if want_stats else None,
        corrected_nonzero=int(corrected_nonzero),
        corrected_shrink_violations=int(violations),
    )
    return trace, ledger
