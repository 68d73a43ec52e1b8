"""Jitted inner loops.

Everything in here is deliberately scalar and allocation-free so numba can
compile it once and the pure-python code paths can reproduce it bit for bit.
The random draw order is fixed: n uniforms for the first individual, then n
for the second, one per position, whether or not a position is pinned at a
border. That makes seeded runs replay exactly across the jitted and the
traced (python) execution paths.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# fitness dispatch codes used by run_kernel
FIT_CONSTANT = 0
FIT_LEADING = 1
FIT_LEADING_GENERAL = 2


@njit(cache=True, nogil=True)
def restrict_row_inplace(q, lo, hi):
    """Clamp a frequency row into [lo, hi] and restore its sum to 1.

    Out-of-border entries are clamped to the violated border; the resulting
    surplus/deficit is then spread over the entries strictly inside the
    borders, proportionally to their current values. Entries pushed out of
    the borders by that correction are clamped on the next pass, so the
    interior set shrinks and the loop terminates. If no interior entry is
    left, the residue goes to whichever border entries can still absorb it.
    """
    r = q.shape[0]
    for _ in range(64):
        s = 0.0
        for j in range(r):
            v = q[j]
            if v < lo:
                q[j] = lo
            elif v > hi:
                q[j] = hi
            s += q[j]
        imb = 1.0 - s
        if -1e-15 < imb < 1e-15:
            return
        wsum = 0.0
        for j in range(r):
            if lo < q[j] < hi:
                wsum += q[j]
        if wsum > 0.0:
            for j in range(r):
                if lo < q[j] < hi:
                    q[j] += imb * q[j] / wsum
        elif imb > 0.0:
            for j in range(r):
                if q[j] < hi:
                    wsum += q[j]
            if wsum <= 0.0:
                return
            for j in range(r):
                if q[j] < hi:
                    q[j] += imb * q[j] / wsum
        else:
            for j in range(r):
                if q[j] > lo:
                    wsum += q[j]
            if wsum <= 0.0:
                return
            for j in range(r):
                if q[j] > lo:
                    q[j] += imb * q[j] / wsum


@njit(cache=True, nogil=True)
def sample_into(p, out, rng):
    """Fill `out` with one categorical draw per row of `p` (inverse CDF)."""
    n, r = p.shape
    for i in range(n):
        u = rng.random()
        j = 0
        acc = p[i, 0]
        while u >= acc and j < r - 1:
            j += 1
            acc += p[i, j]
        out[i] = j


@njit(cache=True, nogil=True)
def _evaluate(kind, x, a, sigma):
    n = x.shape[0]
    if kind == FIT_LEADING:
        f = 0
        while f < n and x[f] == 0:
            f += 1
        return f
    if kind == FIT_LEADING_GENERAL:
        f = 0
        while f < n and x[sigma[f]] == a[sigma[f]]:
            f += 1
        return f
    return 0


@njit(cache=True, nogil=True)
def run_kernel(p, inv_k, max_iters, fit_kind, a, sigma, optimum, lo, hi,
               border_tol, rng, flags, min_p0, hist_t, hist_m, counts):
    """Main optimizer loop on the frequency matrix `p` (mutated in place).

    `flags` and `min_p0` must be pre-initialized from the starting state;
    `hist_t`/`hist_m` receive the change points of the critical position
    (first entry already written by the caller). `counts` accumulates
    [inactive, biased, random-walk, rw one-zero up, rw one-zero down,
    biased one-zero]. Returns (iterations executed, found flag, number of
    history entries).
    """
    n, r = p.shape
    x = np.empty(n, dtype=np.int64)
    y = np.empty(n, dtype=np.int64)
    hist_len = 1
    m_idx = 0
    while m_idx < n and flags[m_idx]:
        m_idx += 1
    iters = 0
    found = False
    for t in range(1, max_iters + 1):
        sample_into(p, x, rng)
        sample_into(p, y, rng)
        fx = _evaluate(fit_kind, x, a, sigma)
        fy = _evaluate(fit_kind, y, a, sigma)
        iters = t
        if fx == optimum or fy == optimum:
            found = True
            break
        swapped = fx < fy
        if swapped:
            w, l = y, x
        else:
            w, l = x, y
        # classification: leading prefix sampled (0, 0) in both individuals
        lead = 0
        while lead < n and x[lead] == 0 and y[lead] == 0:
            lead += 1
        for i in range(n):
            if x[i] == y[i]:
                counts[0] += 1
            elif i == lead:
                counts[1] += 1
                if (x[i] == 0) != (y[i] == 0):
                    counts[5] += 1
            else:
                counts[2] += 1
                if (x[i] == 0) != (y[i] == 0):
                    if w[i] == 0:
                        counts[3] += 1
                    else:
                        counts[4] += 1
        for i in range(n):
            if w[i] != l[i]:
                p[i, w[i]] += inv_k
                p[i, l[i]] -= inv_k
                restrict_row_inplace(p[i], lo, hi)
                if p[i, 0] < min_p0[i]:
                    min_p0[i] = p[i, 0]
                if not flags[i] and p[i, 0] >= hi - border_tol:
                    flags[i] = True
        while m_idx < n and flags[m_idx]:
            m_idx += 1
        if m_idx + 1 != hist_m[hist_len - 1]:
            hist_t[hist_len] = t
            hist_m[hist_len] = m_idx + 1
            hist_len += 1
    return iters, found, hist_len


@njit(cache=True, nogil=True)
def neutral_deviation_kernel(p, inv_k, max_iters, dev_threshold, lo, hi, rng):
    """Run on a constant (all-neutral) fitness, tracking frequency deviation.

    Every comparison ties, so the first individual always wins. Returns
    (violated, max deviation from the initial 1/r, iteration of violation).
    Stops early as soon as any |p[i, j] - 1/r| reaches `dev_threshold`.
    """
    n, r = p.shape
    base = 1.0 / r
    x = np.empty(n, dtype=np.int64)
    y = np.empty(n, dtype=np.int64)
    max_dev = 0.0
    for t in range(1, max_iters + 1):
        sample_into(p, x, rng)
        sample_into(p, y, rng)
        for i in range(n):
            if x[i] != y[i]:
                p[i, x[i]] += inv_k
                p[i, y[i]] -= inv_k
                restrict_row_inplace(p[i], lo, hi)
                for j in range(r):
                    dev = abs(p[i, j] - base)
                    if dev > max_dev:
                        max_dev = dev
                if max_dev >= dev_threshold:
                    return True, max_dev, t
    return False, max_dev, max_iters
