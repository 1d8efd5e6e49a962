"""Reproducible generation of uniform d-sparse columns and sign seeds.

All randomness flows through a `SeedSpec`: a (master_seed, trial_index,
stream) triple mapped onto an independent counter-based generator (Philox).
Distinct triples give statistically independent, deterministic streams, so
concurrent trials never share mutable generator state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .model import Instance, SparseColumn

__all__ = [
    "Stream",
    "SeedSpec",
    "sample_column",
    "sample_instance",
    "sample_sigma_tilde",
]

_MASK64 = (1 << 64) - 1


class Stream(IntEnum):
    """Named substreams of one trial's randomness."""

    COLUMNS = 0
    SIGMA_TILDE = 1
    STRATEGY_AUX = 2


@dataclass(frozen=True)
class SeedSpec:
    """Addresses one deterministic random stream.

    Operations select their own stream id (columns for instance sampling,
    sigma_tilde for the algorithm seed), so passing the same SeedSpec to
    different operations can never alias their randomness.
    """

    master_seed: int
    trial_index: int = 0
    stream: Stream | None = None

    def __post_init__(self) -> None:
        if self.trial_index < 0:
            raise ValueError("trial_index must be >= 0")

    def with_stream(self, stream: Stream) -> "SeedSpec":
        return replace(self, stream=Stream(stream))

    def generator(self) -> np.random.Generator:
        """The Philox generator for this (master, trial, stream) triple."""
        if self.stream is None:
            raise ValueError("stream not set; use with_stream() first")
        seq = np.random.SeedSequence(
            entropy=self.master_seed & _MASK64,
            spawn_key=(self.trial_index, int(self.stream)),
        )
        return np.random.Generator(np.random.Philox(seq))


def _fisher_yates_prefix(n: int, draws) -> list[int]:
    """First-k entries of a partial Fisher-Yates shuffle of range(n).

    ``draws[j]`` must lie in [j, n). Only displaced pool entries are stored,
    so the work is O(k) regardless of n.
    """
    displaced: dict[int, int] = {}
    out = []
    for j, r in enumerate(draws):
        vj = displaced.get(j, j)
        vr = displaced.get(r, r)
        displaced[j] = vr
        displaced[r] = vj
        out.append(vr)
    return out


def _draw_subset(n: int, k: int, rng: np.random.Generator) -> list[int]:
    """Uniform k-subset of range(n), consuming exactly k bounded draws."""
    draws = [int(rng.integers(j, n)) for j in range(k)]
    return _fisher_yates_prefix(n, draws)


def sample_column(n: int, d: int, rng: np.random.Generator) -> SparseColumn:
    """One uniform d-sparse column over rows 1..n.

    Partial Fisher-Yates for d <= n/2, complement sampling otherwise, so the
    expected work and the number of bounded integer draws (d, respectively
    n - d) depend only on (n, d).
    """
    n = int(n)
    d = int(d)
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= d <= n:
        raise ValueError(f"d must be in [1, n], got d={d}, n={n}")
    if d <= n // 2:
        rows0 = _draw_subset(n, d, rng)
    else:
        excluded = set(_draw_subset(n, n - d, rng))
        rows0 = [i for i in range(n) if i not in excluded]
    return SparseColumn(tuple(sorted(i + 1 for i in rows0)))


def _subsets_from_draws(n: int, k: int, draws: np.ndarray) -> np.ndarray:
    """Vectorized batch version of `_fisher_yates_prefix` + sort.

    ``draws`` has shape (T, k) with draws[t, j] in [j, n). A row needs the
    explicit pool simulation only if some draw lands inside the prefix
    [0, k) or collides with another draw in the same row; everywhere else
    the sorted draws already are the subset.
    """
    T = draws.shape[0]
    if k == 0:
        return np.empty((T, 0), dtype=np.int32)
    out = np.sort(draws, axis=1).astype(np.int32, copy=False)
    clean = draws.min(axis=1) >= k
    if k > 1:
        clean &= (out[:, 1:] != out[:, :-1]).all(axis=1)
    for t in np.flatnonzero(~clean):
        out[t] = sorted(_fisher_yates_prefix(n, [int(r) for r in draws[t]]))
    return out


def sample_instance(n: int, d: int, T: int, seed: SeedSpec) -> Instance:
    """T i.i.d. uniform d-sparse columns, bit-for-bit reproducible.

    Consumes the COLUMNS stream of ``seed``. Draw order is batched by swap
    position (all first draws, then all second draws, ...), which keeps the
    per-column distribution exactly uniform while letting numpy do the heavy
    lifting.
    """
    n = int(n)
    d = int(d)
    T = int(T)
    if T < 0:
        raise ValueError("T must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= d <= n:
        raise ValueError(f"d must be in [1, n], got d={d}, n={n}")
    rng = seed.with_stream(Stream.COLUMNS).generator()
    complement = d > n // 2
    k = n - d if complement else d
    draws = np.empty((T, k), dtype=np.int64)
    for j in range(k):
        draws[:, j] = rng.integers(j, n, size=T)
    subset = _subsets_from_draws(n, k, draws)
    if not complement:
        return Instance(n, d, subset)
    sup = np.empty((T, d), dtype=np.int32)
    rows = np.arange(n, dtype=np.int32)
    keep = np.ones(n, dtype=bool)
    for t in range(T):
        keep[subset[t]] = False
        sup[t] = rows[keep]
        keep[subset[t]] = True
    return Instance(n, d, sup)


def sample_sigma_tilde(T: int, seed: SeedSpec) -> np.ndarray:
    """T i.i.d. uniform signs in {-1, +1} from the SIGMA_TILDE stream."""
    T = int(T)
    if T < 0:
        raise ValueError("T must be >= 0")
    rng = seed.with_stream(Stream.SIGMA_TILDE).generator()
    signs = (rng.integers(0, 2, size=T, dtype=np.int8) << 1) - 1
    signs.setflags(write=False)
    return signs
