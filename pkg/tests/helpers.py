"""Shared reference implementations and builders for the test suite.

Everything here is deliberately naive: dense matrices, quadratic scans,
direct definitions. These are the independent oracles the fast paths are
checked against.
"""

from __future__ import annotations

import numpy as np

from discbal.model import Instance, SparseColumn


def make_instance(n: int, cols) -> Instance:
    """Instance from 1-based support tuples, e.g. make_instance(3, [(1,), (1, 2)])."""
    cols = [SparseColumn(tuple(c)) for c in cols]
    return Instance.from_columns(n, cols[0].d, cols)


def dense_matrix(instance: Instance) -> np.ndarray:
    """(T, n) dense 0/1 matrix of the instance."""
    out = np.zeros((instance.T, instance.n), dtype=np.int64)
    for t in range(instance.T):
        out[t, instance.supports0[t]] = 1
    return out


def brute_prefix_disc(instance: Instance, signs) -> int:
    """max over prefixes of the infinity norm, from a dense cumulative sum."""
    if instance.T == 0:
        return 0
    signed = dense_matrix(instance) * np.asarray(signs, dtype=np.int64)[:, None]
    return int(np.abs(np.cumsum(signed, axis=0)).max())


def brute_partials(instance: Instance, signs) -> np.ndarray:
    """(T+1, n) array of partial sums after 0..T steps."""
    signed = dense_matrix(instance) * np.asarray(signs, dtype=np.int64)[:, None]
    out = np.zeros((instance.T + 1, instance.n), dtype=np.int64)
    out[1:] = np.cumsum(signed, axis=0)
    return out
