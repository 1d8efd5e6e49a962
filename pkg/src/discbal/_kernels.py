"""Compiled hot loops. Everything here has a pure-Python twin that the test
suite checks it against; callers fall back to the twin when numba is absent
(set DISCBAL_PURE_PYTHON=1 to force that)."""

from __future__ import annotations

import os

HAVE_NUMBA = False
if not os.environ.get("DISCBAL_PURE_PYTHON"):
    try:
        import numpy as np
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover
        pass

# strategy codes shared with strategies.py
ALG1, RANDOM, GREEDY, MAJORITY = 0, 1, 2, 3

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def run_strategy(
        supports,  # (T, d) int32, 0-based sorted rows
        n,
        sigma,  # (T,) int8 seed signs
        tau,  # float64; inf disables the exceptional set
        strategy,  # ALG1 | RANDOM | GREEDY | MAJORITY
        snap_times,  # sorted int64 times in [0, T]
        snap_out,  # (len(snap_times), n) int64
        stats_times,  # sorted int64 times in [0, T]
        stats_out,  # (len(stats_times), 3) int64 rows (t, |E_t|, corrected_t)
    ):
        T, d = supports.shape
        partial = np.zeros(n, dtype=np.int64)
        row_abs_max = np.zeros(n, dtype=np.int64)
        exc = np.zeros(n, dtype=np.uint8)
        entry_time = np.full(n, -1, dtype=np.int64)
        signs = np.empty(T, dtype=np.int8)
        maxdisc = 0
        e_count = 0
        corrected = 0
        corrected_nonzero = 0
        violations = 0
        si = 0
        while si < snap_times.shape[0] and snap_times[si] == 0:
            si += 1  # snapshot at t=0 is the zero state snap_out starts with
        gi = 0
        while gi < stats_times.shape[0] and stats_times[gi] == 0:
            gi += 1
        for t in range(T):
            s = np.int8(0)
            fired = False
            target = np.int64(0)
            if strategy == ALG1:
                hit = -1
                nhit = 0
                for k in range(d):
                    i = supports[t, k]
                    if exc[i]:
                        nhit += 1
                        if nhit > 1:
                            break
                        hit = i
                if nhit == 1:
                    target = partial[hit]
                    s = np.int8(-1) if target >= 0 else np.int8(1)
                    fired = True
                else:
                    s = sigma[t]
            elif strategy == RANDOM:
                s = sigma[t]
            elif strategy == GREEDY:
                worst_plus = np.int64(0)
                worst_minus = np.int64(0)
                for k in range(d):
                    p = partial[supports[t, k]]
                    a = p + 1
                    if a < 0:
                        a = -a
                    if a > worst_plus:
                        worst_plus = a
                    b = p - 1
                    if b < 0:
                        b = -b
                    if b > worst_minus:
                        worst_minus = b
                s = np.int8(1) if worst_plus <= worst_minus else np.int8(-1)
            else:  # MAJORITY
                tot = np.int64(0)
                for k in range(d):
                    tot += partial[supports[t, k]]
                if tot > 0:
                    s = np.int8(-1)
                elif tot < 0:
                    s = np.int8(1)
                else:
                    s = sigma[t]
            signs[t] = s
            for k in range(d):
                i = supports[t, k]
                v = partial[i] + s
                partial[i] = v
                a = -v if v < 0 else v
                if a > row_abs_max[i]:
                    row_abs_max[i] = a
                if a > maxdisc:
                    maxdisc = a
                if exc[i] == 0 and a >= tau:
                    exc[i] = 1
                    entry_time[i] = t + 1
                    e_count += 1
            if fired:
                corrected += 1
                if target != 0:
                    corrected_nonzero += 1
                    before = -target if target < 0 else target
                    after = partial[hit]
                    if after < 0:
                        after = -after
                    if after != before - 1:
                        violations += 1
            tt = t + 1
            if si < snap_times.shape[0] and snap_times[si] == tt:
                snap_out[si] = partial
                si += 1
            if gi < stats_times.shape[0] and stats_times[gi] == tt:
                stats_out[gi, 0] = tt
                stats_out[gi, 1] = e_count
                stats_out[gi, 2] = corrected
                gi += 1
        return (
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
        )

    @njit(cache=True, nogil=True)
    def gray_min_disc(supports, n):
        """Min over sign vectors with sigma_1 = +1 of ||A sigma||_inf.

        Gray-code order flips one sign per state; the infinity norm is
        maintained through a histogram of |partial| values, so each of the
        2^(T-1) states costs O(d) amortized.
        """
        T, d = supports.shape
        y = np.zeros(n, dtype=np.int64)
        for t in range(T):
            for k in range(d):
                y[supports[t, k]] += 1
        hist = np.zeros(T + 1, dtype=np.int64)
        for i in range(n):
            hist[y[i]] += 1
        cur = T
        while cur > 0 and hist[cur] == 0:
            cur -= 1
        signs = np.ones(T, dtype=np.int8)
        best = cur
        best_signs = signs.copy()
        total = np.int64(1) << (T - 1)
        for step in range(1, total):
            x = step
            j = 0
            while x & 1 == 0:
                x >>= 1
                j += 1
            c = j + 1  # column 0 stays +1 (global flip symmetry)
            s = -signs[c]
            signs[c] = s
            delta = 2 * s
            for k in range(d):
                i = supports[c, k]
                v = y[i]
                nv = v + delta
                y[i] = nv
                av = -v if v < 0 else v
                anv = -nv if nv < 0 else nv
                hist[av] -= 1
                hist[anv] += 1
                if anv > cur:
                    cur = anv
            while cur > 0 and hist[cur] == 0:
                cur -= 1
            if cur < best:
                best = cur
                best_signs = signs.copy()
                if best == 0:
                    break
        return best, best_signs
