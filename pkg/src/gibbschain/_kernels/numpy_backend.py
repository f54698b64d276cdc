"""Pure-numpy implementations of the hot kernels.

Semantics match the numba backend: scaled vector sweeps renormalize by the
running maximum at every step, and enumeration kernels accumulate a
streaming log-sum-exp in lexicographic configuration order (last site
fastest).  Selected via the GIBBSCHAIN_NUMBA environment flag.
"""

import numpy as np

NAME = "numpy"

_CHUNK = 1 << 16


def _norm_step(v, acc):
    mx = float(v.max())
    if mx == 0.0:
        return np.zeros_like(v), -np.inf
    return v / mx, acc + np.log(mx)


def sweep_row_final(mant, logs, idx, v0):
    """Row sweep v <- v @ M over steps idx; returns (mantissa, log scale)."""
    v, acc = _norm_step(np.asarray(v0, dtype=np.float64), 0.0)
    if not np.isfinite(acc):
        return v, acc
    for k in idx:
        v, acc = _norm_step(v @ mant[k], acc + logs[k])
        if not np.isfinite(acc):
            return v, acc
    return v, acc


def sweep_col_final(mant, logs, idx, v0):
    """Column sweep v <- M @ v over steps idx; returns (mantissa, log scale)."""
    v, acc = _norm_step(np.asarray(v0, dtype=np.float64), 0.0)
    if not np.isfinite(acc):
        return v, acc
    for k in idx:
        v, acc = _norm_step(mant[k] @ v, acc + logs[k])
        if not np.isfinite(acc):
            return v, acc
    return v, acc


def sweep_row_collect(mant, logs, idx, v0):
    """Row sweep keeping every intermediate vector.

    Returns (V, L) with V[0] the normalized v0 and V[s] the vector after
    step s; L are the matching log scales.
    """
    steps = idx.shape[0]
    n = v0.shape[0]
    out = np.empty((steps + 1, n))
    acc = np.empty(steps + 1)
    v, a = _norm_step(np.asarray(v0, dtype=np.float64), 0.0)
    out[0], acc[0] = v, a
    for s, k in enumerate(idx, start=1):
        v, a = _norm_step(v @ mant[k], a + logs[k])
        out[s], acc[s] = v, a
    return out, acc


def sweep_col_collect(mant, logs, idx, v0):
    """Column sweep keeping every intermediate vector."""
    steps = idx.shape[0]
    n = v0.shape[0]
    out = np.empty((steps + 1, n))
    acc = np.empty(steps + 1)
    v, a = _norm_step(np.asarray(v0, dtype=np.float64), 0.0)
    out[0], acc[0] = v, a
    for s, k in enumerate(idx, start=1):
        v, a = _norm_step(mant[k] @ v, a + logs[k])
        out[s], acc[s] = v, a
    return out, acc


def _merge_lse(m1, s1, m2, s2):
    """Merge two (running max, scaled sum) log-sum-exp accumulators."""
    if s1 == 0.0:
        return m2, s2
    if s2 == 0.0:
        return m1, s1
    if m1 >= m2:
        return m1, s1 + s2 * np.exp(m2 - m1)
    return m2, s2 + s1 * np.exp(m1 - m2)


def brute_chain(h_stack, idx, n_states, length):
    """log sum over all configurations of exp(sum of per-step table entries).

    h_stack holds the distinct log tables, idx maps step s (0-based) to its
    table.  Configurations are processed in lexicographic order, chunked.
    """
    total = n_states ** length
    weights = n_states ** np.arange(length - 1, -1, -1, dtype=np.int64)
    m_run, s_run = -np.inf, 0.0
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        codes = np.arange(lo, hi, dtype=np.int64)
        digits = (codes[:, None] // weights[None, :]) % n_states
        e = np.zeros(hi - lo)
        for s in range(length - 1):
            e += h_stack[idx[s]][digits[:, s], digits[:, s + 1]]
        mx = float(e.max())
        ssum = float(np.exp(e - mx).sum())
        m_run, s_run = _merge_lse(m_run, s_run, mx, ssum)
    return m_run + np.log(s_run)


def brute_rrange(flat_stack, idx, n_states, length, r):
    """Enumeration constant for factors over (r+1)-site windows."""
    total = n_states ** length
    weights = n_states ** np.arange(length - 1, -1, -1, dtype=np.int64)
    win = n_states ** np.arange(r, -1, -1, dtype=np.int64)
    m_run, s_run = -np.inf, 0.0
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        codes = np.arange(lo, hi, dtype=np.int64)
        digits = (codes[:, None] // weights[None, :]) % n_states
        e = np.zeros(hi - lo)
        for s in range(length - r):
            code = digits[:, s:s + r + 1] @ win
            e += flat_stack[idx[s]][code]
        mx = float(e.max())
        ssum = float(np.exp(e - mx).sum())
        m_run, s_run = _merge_lse(m_run, s_run, mx, ssum)
    return m_run + np.log(s_run)


def _column_log_factor(cols, m, alpha, beta):
    """Per-column field weight: alpha*(spin sum) + beta*(vertical agreements)."""
    n_plus = np.bitwise_count(cols.astype(np.uint64)).astype(np.float64)
    e = alpha * (2.0 * n_plus - m)
    if m > 1:
        vmask = (1 << (m - 1)) - 1
        diff = np.bitwise_count(((cols ^ (cols >> 1)) & vmask).astype(np.uint64))
        v_plus = (m - 1) - diff.astype(np.float64)
        e += beta * (2.0 * v_plus - (m - 1))
    return e


def brute_spatial(m, length, alpha, beta, delta):
    """Site-level enumeration of the lattice constant over 2^(m*T) spin grids."""
    total = 1 << (m * length)
    mask = np.int64((1 << m) - 1)
    m_run, s_run = -np.inf, 0.0
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        codes = np.arange(lo, hi, dtype=np.int64)
        e = np.zeros(hi - lo)
        prev = None
        for t in range(length):
            col = (codes >> (t * m)) & mask
            e += _column_log_factor(col, m, alpha, beta)
            if prev is not None:
                agree = m - np.bitwise_count((col ^ prev).astype(np.uint64)).astype(np.float64)
                e += delta * (2.0 * agree - m)
            prev = col
        mx = float(e.max())
        ssum = float(np.exp(e - mx).sum())
        m_run, s_run = _merge_lse(m_run, s_run, mx, ssum)
    return m_run + np.log(s_run)
