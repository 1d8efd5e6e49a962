"""Core domain types: sparse columns, instances, the row ledger, run traces.

Rows are indexed 1..n in every public surface (column supports, exceptional
sets). Internally everything lives in contiguous 0-based numpy arrays; the
shift happens only at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SparseColumn",
    "Instance",
    "RowLedger",
    "Trace",
    "ledger_new",
    "ledger_apply",
    "prefix_disc",
    "replay",
]


@dataclass(frozen=True)
class SparseColumn:
    """A d-sparse binary column, stored as its support.

    ``support`` is the strictly increasing tuple of 1-based row indices that
    carry a one. The upper range check (index <= n) happens wherever an n is
    known: in `Instance` and in `ledger_apply`.
    """

    support: tuple[int, ...]

    def __post_init__(self) -> None:
        sup = tuple(int(i) for i in self.support)
        if not sup:
            raise ValueError("support must contain at least one row index")
        if sup[0] < 1:
            raise ValueError(f"row indices are 1-based, got {sup[0]}")
        for a, b in zip(sup, sup[1:]):
            if a >= b:
                raise ValueError("support indices must be strictly increasing")
        object.__setattr__(self, "support", sup)

    @property
    def d(self) -> int:
        return len(self.support)

    def indices0(self) -> np.ndarray:
        """0-based support indices, for array work."""
        return np.asarray(self.support, dtype=np.int64) - 1


class Instance:
    """An ordered sequence of T d-sparse columns over n rows.

    Storage is a single read-only (T, d) array of 0-based, per-row sorted
    supports, so memory is O(Td + n) with no dense matrix anywhere. Columns
    are materialized as `SparseColumn` on demand via indexing/iteration.
    """

    __slots__ = ("n", "d", "_supports")

    def __init__(self, n: int, d: int, supports: np.ndarray) -> None:
        """Build an instance from the canonical 0-based support array.

        ``supports`` must have shape (T, d) with each row strictly increasing
        and all entries in [0, n). Use `from_columns` for the 1-based path.
        """
        n = int(n)
        d = int(d)
        if n < 1:
            raise ValueError("n must be >= 1")
        if not 1 <= d <= n:
            raise ValueError(f"d must be in [1, n], got d={d}, n={n}")
        arr = np.ascontiguousarray(supports, dtype=np.int32)
        if arr.ndim != 2 or arr.shape[1] != d:
            raise ValueError(f"supports must have shape (T, {d}), got {arr.shape}")
        if arr.size:
            if arr.min() < 0 or arr.max() >= n:
                raise ValueError("support index out of range [0, n)")
            if d > 1 and not (arr[:, 1:] > arr[:, :-1]).all():
                raise ValueError("each support must be strictly increasing")
        arr.setflags(write=False)
        self.n = n
        self.d = d
        self._supports = arr

    @classmethod
    def from_columns(cls, n: int, d: int, columns) -> "Instance":
        cols = list(columns)
        arr = np.empty((len(cols), d), dtype=np.int32)
        for t, col in enumerate(cols):
            if col.d != d:
                raise ValueError(f"column {t} has sparsity {col.d}, expected {d}")
            arr[t] = col.indices0()
        return cls(n, d, arr)

    @property
    def T(self) -> int:
        return self._supports.shape[0]

    @property
    def supports0(self) -> np.ndarray:
        """The read-only (T, d) array of 0-based supports."""
        return self._supports

    @property
    def columns(self) -> tuple[SparseColumn, ...]:
        """All columns as `SparseColumn` objects (materializes T objects)."""
        return tuple(self)

    def __len__(self) -> int:
        return self.T

    def __getitem__(self, t: int) -> SparseColumn:
        row = self._supports[t]
        return SparseColumn(tuple(int(i) + 1 for i in row))

    def __iter__(self):
        for t in range(self.T):
            yield self[t]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.n == other.n
            and self.d == other.d
            and np.array_equal(self._supports, other._supports)
        )

    __hash__ = None  # mutable-array equality semantics

    def __repr__(self) -> str:
        return f"Instance(n={self.n}, d={self.d}, T={self.T})"


class RowLedger:
    """Per-row running inner products plus exceptional-set membership.

    ``partial[i]`` is the signed count of consumed columns whose support
    contains row i+1. A row becomes exceptional the first time its partial
    reaches ``tau`` in absolute value, and stays exceptional forever after.
    Single writer: one ledger belongs to one run.
    """

    __slots__ = (
        "n",
        "tau",
        "t",
        "partial",
        "exc_mask",
        "entry_time",
        "exceptional_count",
        "corrected_count",
    )

    def __init__(self, n: int, tau: float) -> None:
        n = int(n)
        tau = float(tau)
        if n < 1:
            raise ValueError("n must be >= 1")
        if not tau > 0:
            raise ValueError("tau must be > 0")
        self.n = n
        self.tau = tau
        self.t = 0
        self.partial = np.zeros(n, dtype=np.int64)
        self.exc_mask = np.zeros(n, dtype=bool)
        self.entry_time = np.full(n, -1, dtype=np.int64)
        self.exceptional_count = 0
        self.corrected_count = 0

    @property
    def exceptional(self) -> frozenset[int]:
        """Current exceptional set as 1-based row indices (O(n) to build)."""
        return frozenset(int(i) + 1 for i in np.flatnonzero(self.exc_mask))

    def final_disc(self) -> int:
        """||A sigma||_inf of the consumed prefix, i.e. max |partial|."""
        return int(np.abs(self.partial).max()) if self.n else 0

    def __repr__(self) -> str:
        return (
            f"RowLedger(n={self.n}, t={self.t}, tau={self.tau}, "
            f"|E|={self.exceptional_count}, corrected={self.corrected_count})"
        )


def ledger_new(n: int, tau: float) -> RowLedger:
    """Fresh ledger: t=0, all partials zero, empty exceptional set."""
    return RowLedger(n, tau)


def ledger_apply(ledger: RowLedger, col: SparseColumn, sign: int) -> RowLedger:
    """Consume one signed column, updating partials and the exceptional set.

    Mutates and returns the ledger. Rows whose |partial| reaches tau join the
    exceptional set; membership is never revoked.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if col.support[-1] > ledger.n:
        raise ValueError(
            f"support index {col.support[-1]} out of range for n={ledger.n}"
        )
    ledger.t += 1
    partial = ledger.partial
    mask = ledger.exc_mask
    for i in col.support:
        i0 = i - 1
        v = partial[i0] + sign
        partial[i0] = v
        if abs(v) >= ledger.tau and not mask[i0]:
            mask[i0] = True
            ledger.entry_time[i0] = ledger.t
            ledger.exceptional_count += 1
    return ledger


@dataclass
class Trace:
    """Record of a completed (or in-progress) online run.

    ``max_prefix_disc`` is the running max over all consumed prefixes of the
    infinity norm of the signed column sum. ``snapshots`` maps a time t to a
    copy of the partial array after t steps; they are opt-in so memory stays
    bounded at n ~ 10^6. ``row_abs_max`` holds per-row running maxima of
    |partial|, maintained online so threshold-count diagnostics need no
    stored history.
    """

    signs: np.ndarray
    max_prefix_disc: int
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    row_abs_max: np.ndarray | None = None
    exceptional_series: list[tuple[int, int, int]] | None = None
    corrected_nonzero: int = 0
    corrected_shrink_violations: int = 0

    @property
    def t(self) -> int:
        return len(self.signs)


def prefix_disc(trace: Trace) -> int:
    """Max over s <= t of ||sum_{j<=s} sigma_j col_j||_inf; 0 when empty."""
    return int(trace.max_prefix_disc)


def replay(instance: Instance, signs, snapshot_times=()) -> Trace:
    """Re-execute a sign sequence step by step and rebuild its trace.

    Reference implementation used to cross-check incrementally maintained
    state: it recomputes max_prefix_disc, per-row running maxima and any
    requested snapshots from scratch.
    """
    signs = np.asarray(signs, dtype=np.int8)
    T = len(signs)
    if T != instance.T:
        raise ValueError(f"got {T} signs for {instance.T} columns")
    snap_times = sorted(set(int(s) for s in snapshot_times))
    for s in snap_times:
        if not 0 <= s <= T:
            raise ValueError(f"snapshot time {s} outside [0, {T}]")
    sup = instance.supports0
    partial = np.zeros(instance.n, dtype=np.int64)
    row_abs_max = np.zeros(instance.n, dtype=np.int64)
    snapshots: dict[int, np.ndarray] = {}
    maxdisc = 0
    if snap_times and snap_times[0] == 0:
        snapshots[0] = partial.copy()
        snap_times = snap_times[1:]
    for t in range(T):
        s = int(signs[t])
        if s not in (1, -1):
            raise ValueError(f"sign at step {t} must be +1 or -1, got {s}")
        for i0 in sup[t]:
            v = partial[i0] + s
            partial[i0] = v
            a = -v if v < 0 else v
            if a > row_abs_max[i0]:
                row_abs_max[i0] = a
            if a > maxdisc:
                maxdisc = int(a)
        if snap_times and snap_times[0] == t + 1:
            snapshots[t + 1] = partial.copy()
            snap_times = snap_times[1:]
    return Trace(
        signs=signs,
        max_prefix_disc=maxdisc,
        snapshots=snapshots,
        row_abs_max=row_abs_max,
    )
