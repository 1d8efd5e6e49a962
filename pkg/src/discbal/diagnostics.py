"""Diagnostics over completed runs: why discrepancy must grow, and why the
correction strategy keeps it small.

Spreads witness pairs of row populations whose gap in partial sums can only
widen; the schedule says how large a spread to expect and when. Categories
classify how a row's running product got large (directly through the seed
signs, or contagiously through already-exceptional rows), and threshold
exceedance counts track rows that ever blew past a given level. Everything
is a pure function of run artifacts, so any recorded trial can be analyzed
after the fact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Instance, RowLedger, Trace

__all__ = [
    "SpreadReport",
    "ScheduleEntry",
    "best_spread",
    "spread_schedule",
    "schedule_time",
    "schedule_size",
    "compute_categories",
    "count_m_set",
    "count_untouched_rows",
    "exceptional_stats",
]


@dataclass(frozen=True)
class SpreadReport:
    """A witnessed (ell, r)-spread: ``size`` rows sit exactly at ``ell`` <= 0
    and ``size`` further distinct rows exactly at ``r`` >= 0, at time ``time``."""

    time: int
    ell: int
    r: int
    size: int

    @property
    def width(self) -> int:
        return self.r - self.ell


def best_spread(partials, min_width: int = 0, time: int = 0) -> SpreadReport | None:
    """Largest spread of width at least ``min_width`` in a partial array.

    Over all pairs ell <= 0 <= r with r - ell >= min_width, maximizes the
    spread size, breaking ties toward larger width and then smaller |ell|.
    For ell == r == 0 the 2s indices must still be distinct, so the size is
    floor(count(0) / 2). Returns None when no qualifying pair has size >= 1.
    Runs off a value histogram: O(n + range^2).
    """
    arr = np.asarray(partials)
    if arr.size == 0:
        return None
    lo = int(arr.min())
    counts = np.bincount((arr - lo).astype(np.int64))

    def count(v: int) -> int:
        idx = v - lo
        return int(counts[idx]) if 0 <= idx < len(counts) else 0

    ells = [v for v in range(lo, 1) if count(v) > 0]
    his = [v for v in range(0, int(arr.max()) + 1) if count(v) > 0]
    best = None
    best_key = None
    for ell in ells:
        for r in his:
            if r - ell < min_width:
                continue
            size = count(0) // 2 if ell == r else min(count(ell), count(r))
            if size < 1:
                continue
            key = (size, r - ell, ell)
            if best_key is None or key > best_key:
                best_key = key
                best = SpreadReport(time=time, ell=ell, r=r, size=size)
    return best


def _ceil_log_ratio(n: int, exponent: float) -> int:
    """ceil(n / (ln n)^exponent), guarded against float under/overflow.

    The true ratio is positive, so the ceiling is at least 1 even when the
    denominator dwarfs n.
    """
    log_denominator = exponent * math.log(math.log(n))
    if log_denominator - math.log(n) > 50.0:
        return 1
    return max(1, math.ceil(n / math.exp(log_denominator)))


def schedule_time(n: int, q: int) -> int:
    """k_q: cumulative sum over u <= q of ceil(n / (ln n)^(e^u))."""
    return sum(_ceil_log_ratio(n, math.exp(u)) for u in range(1, q + 1))


def schedule_size(n: int, q: int) -> int:
    """s_q: ceil(n / (ln n)^(3^q))."""
    return _ceil_log_ratio(n, float(3**q))


@dataclass(frozen=True)
class ScheduleEntry:
    """Stage q of the widening-gap schedule: expect a spread of width >= q
    and size >= s no later than time k."""

    q: int
    k: int
    s: int


def spread_schedule(n: int, q_max: int) -> list[ScheduleEntry]:
    """Schedule entries for q = 1 .. min(q_max, ln ln n / (2 ln 3))."""
    if n < 16:
        raise ValueError("n must be >= 16")
    limit = math.floor(math.log(math.log(n)) / (2.0 * math.log(3.0)))
    return [
        ScheduleEntry(q=q, k=schedule_time(n, q), s=schedule_size(n, q))
        for q in range(1, min(q_max, limit) + 1)
    ]


def _category_zero_entries(instance: Instance, sigma_tilde: np.ndarray, tau: float) -> np.ndarray:
    """First time each row's running product against the seed signs exceeds
    tau/2 in absolute value (strict); -1 where it never does."""
    n, T, d = instance.n, instance.T, instance.d
    entry = np.full(n, -1, dtype=np.int64)
    if T == 0:
        return entry
    rows = instance.supports0.ravel().astype(np.int64)
    times = np.repeat(np.arange(1, T + 1, dtype=np.int64), d)
    vals = np.repeat(np.asarray(sigma_tilde, dtype=np.int64), d)
    order = np.lexsort((times, rows))
    rs, ts, vs = rows[order], times[order], vals[order]
    csum = np.cumsum(vs)
    new_group = np.r_[True, rs[1:] != rs[:-1]]
    group_id = np.cumsum(new_group) - 1
    starts = np.flatnonzero(new_group)
    base = np.where(starts > 0, csum[starts - 1], 0)
    running = csum - base[group_id]
    exceed = np.abs(running) > tau / 2.0
    idx = np.flatnonzero(exceed)
    if idx.size:
        uniq, first = np.unique(rs[idx], return_index=True)
        entry[uniq] = ts[idx[first]]
    return entry


def _next_category_entries(instance: Instance, prev_entry: np.ndarray) -> np.ndarray:
    """Entry times for the next category, given the previous one's.

    A row enters at the second distinct column (among the columns containing
    it) that also contains some previously categorized row, categorized
    strictly before that column, other than the row itself.
    """
    n, T, d = instance.n, instance.T, instance.d
    entry = np.full(n, -1, dtype=np.int64)
    if T == 0:
        return entry
    sup = instance.supports0
    E = prev_entry[sup]
    tcol = np.arange(1, T + 1, dtype=np.int64)[:, None]
    witness = (E >= 0) & (E < tcol)
    cnt = witness.sum(axis=1)
    hit = (cnt[:, None] - witness) >= 1
    idx = np.flatnonzero(hit.ravel())
    if idx.size == 0:
        return entry
    rr = sup.ravel()[idx].astype(np.int64)
    tt = np.repeat(tcol.ravel(), d)[idx]
    order = np.argsort(rr, kind="stable")  # ravel order is already by time
    rs, ts = rr[order], tt[order]
    new_group = np.r_[True, rs[1:] != rs[:-1]]
    starts = np.flatnonzero(new_group)
    sizes = np.diff(np.r_[starts, len(rs)])
    second = starts[sizes >= 2] + 1
    entry[rs[second]] = ts[second]
    return entry


def compute_categories(
    instance: Instance,
    sigma_tilde,
    signs,
    tau: float,
    w_max: int | None = None,
) -> dict[int, tuple[int, int]]:
    """Classify how each row's running product could have become large.

    Category 0 holds rows whose running product against the seed signs alone
    strictly exceeds tau/2 at some time. Category w holds rows hit by two
    distinct columns, each of which also contained some category-(w-1) row
    (categorized strictly before that column) other than the row itself.
    Returns {1-based row: (smallest category w, entry time)} for every row
    that lands in any category up to ``w_max`` (default ceil(6 ln ln n)).

    The classification depends only on the instance and the seed signs;
    ``signs`` is validated for shape to guard against mixing up runs.
    O(w_max * T * d) plus sorting.
    """
    sigma_tilde = np.asarray(sigma_tilde)
    signs = np.asarray(signs)
    if sigma_tilde.shape != (instance.T,) or signs.shape != (instance.T,):
        raise ValueError("sigma_tilde and signs must have one entry per column")
    if w_max is None:
        w_max = max(1, math.ceil(6.0 * math.log(math.log(max(instance.n, 3)))))
    best_w = np.full(instance.n, -1, dtype=np.int64)
    best_t = np.full(instance.n, -1, dtype=np.int64)
    prev = _category_zero_entries(instance, sigma_tilde, tau)
    w = 0
    while True:
        fresh = (prev >= 0) & (best_w < 0)
        best_w[fresh] = w
        best_t[fresh] = prev[fresh]
        if w >= w_max or not (prev >= 0).any():
            break
        w += 1
        prev = _next_category_entries(instance, prev)
    return {
        int(i) + 1: (int(best_w[i]), int(best_t[i]))
        for i in np.flatnonzero(best_w >= 0)
    }


def count_m_set(row_abs_max, base: float, k: int) -> int:
    """|{rows whose running max |partial| ever reached base + 3k}|."""
    if k < 0:
        raise ValueError("k must be >= 0")
    arr = np.asarray(row_abs_max)
    return int(np.count_nonzero(arr >= base + 3 * k))


def count_untouched_rows(instance: Instance, from_t: int = 0, to_t: int | None = None) -> int:
    """Rows absent from every support of columns from_t+1 .. to_t."""
    T = instance.T
    if to_t is None:
        to_t = T
    if not 0 <= from_t <= to_t <= T:
        raise ValueError(f"need 0 <= from_t <= to_t <= {T}")
    touched = np.zeros(instance.n, dtype=bool)
    touched[instance.supports0[from_t:to_t].ravel()] = True
    return int(instance.n - touched.sum())


def exceptional_stats(trace: Trace, ledger: RowLedger) -> list[tuple[int, int, int]]:
    """The sampled (t, |E_t|, corrected_count_t) series, final state included."""
    if trace.exceptional_series is None:
        raise ValueError("run was executed without stats recording")
    series = list(trace.exceptional_series)
    final = (ledger.t, ledger.exceptional_count, ledger.corrected_count)
    if not series or series[-1][0] != ledger.t:
        series.append(final)
    return series
