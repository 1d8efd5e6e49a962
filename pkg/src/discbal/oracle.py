"""Exact offline discrepancy by exhaustive search, for small instances.

The search fixes the first sign to +1 (negating every sign leaves the
objective unchanged) and walks the remaining 2^(T-1) assignments in
Gray-code order, so each state is one sign flip and an O(d) incremental
norm update away from the previous one.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .model import Instance

__all__ = [
    "DEFAULT_CAP",
    "SearchCapExceeded",
    "offline_min_disc",
    "min_disc_naive",
    "eval_disc",
]

DEFAULT_CAP = 26


class SearchCapExceeded(ValueError):
    """Refusal to enumerate 2^(T-1) states for T past the configured cap."""


def eval_disc(instance: Instance, signs) -> int:
    """||sum_j sigma_j col_j||_inf for a full sign assignment."""
    signs = np.asarray(signs, dtype=np.int64)
    if signs.shape != (instance.T,):
        raise ValueError(f"expected {instance.T} signs, got shape {signs.shape}")
    if instance.T == 0:
        return 0
    if not np.isin(signs, (-1, 1)).all():
        raise ValueError("signs must be +1 or -1")
    y = np.zeros(instance.n, dtype=np.int64)
    np.add.at(y, instance.supports0.ravel(), np.repeat(signs, instance.d))
    return int(np.abs(y).max())


def offline_min_disc(
    instance: Instance, cap: int = DEFAULT_CAP, force: bool = False
) -> tuple[int, tuple[int, ...]]:
    """Exact min over sign assignments of ||A sigma||_inf, with a witness.

    The witness has its first sign +1. Refuses T > cap unless ``force`` is
    set, since the search is exponential in T.
    """
    T = instance.T
    if T < 1:
        raise ValueError("need at least one column")
    if T > cap and not force:
        raise SearchCapExceeded(
            f"T={T} exceeds the enumeration cap {cap}; pass force=True to override"
        )
    if _kernels.HAVE_NUMBA:
        best, signs = _kernels.gray_min_disc(instance.supports0, instance.n)
        return int(best), tuple(int(s) for s in signs)
    return _gray_min_disc_py(instance)


def _gray_min_disc_py(instance: Instance) -> tuple[int, tuple[int, ...]]:
    """Pure-Python twin of the compiled Gray-code search."""
    T, n = instance.T, instance.n
    sup = instance.supports0
    y = np.zeros(n, dtype=np.int64)
    for t in range(T):
        y[sup[t]] += 1
    hist = [0] * (T + 1)
    for v in y:
        hist[v] += 1
    cur = T
    while cur > 0 and hist[cur] == 0:
        cur -= 1
    signs = [1] * T
    best, best_signs = cur, list(signs)
    for step in range(1, 1 << (T - 1)):
        c = (step & -step).bit_length()  # flip column index; column 0 fixed
        s = -signs[c]
        signs[c] = s
        delta = 2 * s
        for i in sup[c]:
            v = int(y[i])
            nv = v + delta
            y[i] = nv
            hist[abs(v)] -= 1
            hist[abs(nv)] += 1
            if abs(nv) > cur:
                cur = abs(nv)
        while cur > 0 and hist[cur] == 0:
            cur -= 1
        if cur < best:
            best, best_signs = cur, list(signs)
            if best == 0:
                break
    return int(best), tuple(best_signs)


def min_disc_naive(instance: Instance) -> tuple[int, tuple[int, ...]]:
    """Independent reference: evaluate all 2^T sign vectors densely.

    No symmetry reduction, no incremental updates; only suitable for tiny T.
    """
    T, n = instance.T, instance.n
    if T < 1:
        raise ValueError("need at least one column")
    if T > 16:
        raise ValueError("naive enumeration is limited to T <= 16")
    dense = np.zeros((T, n), dtype=np.int64)
    for t in range(T):
        dense[t, instance.supports0[t]] = 1
    codes = np.arange(1 << T, dtype=np.uint32)
    bits = (codes[:, None] >> np.arange(T, dtype=np.uint32)) & 1
    signs = 1 - 2 * bits.astype(np.int64)
    values = np.abs(signs @ dense).max(axis=1)
    best = int(values.argmin())
    return int(values[best]), tuple(int(s) for s in signs[best])
