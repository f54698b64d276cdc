"""Numba-compiled hot kernels.

Same contracts as numpy_backend; explicit loops keep the per-step
renormalization and the lexicographic enumeration order deterministic.
"""

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def sweep_row_final(mant, logs, idx, v0):
    n = v0.shape[0]
    v = np.empty(n)
    mx = 0.0
    for i in range(n):
        v[i] = v0[i]
        if v[i] > mx:
            mx = v[i]
    if mx == 0.0:
        return np.zeros(n), -np.inf
    for i in range(n):
        v[i] /= mx
    acc = np.log(mx)
    out = np.empty(n)
    for s in range(idx.shape[0]):
        k = idx[s]
        mk = mant[k]
        mx = 0.0
        for j in range(n):
            tot = 0.0
            for i in range(n):
                tot += v[i] * mk[i, j]
            out[j] = tot
            if tot > mx:
                mx = tot
        if mx == 0.0:
            return np.zeros(n), -np.inf
        for j in range(n):
            v[j] = out[j] / mx
        acc += np.log(mx) + logs[k]
    return v, acc


@njit(cache=True)
def sweep_col_final(mant, logs, idx, v0):
    n = v0.shape[0]
    v = np.empty(n)
    mx = 0.0
    for i in range(n):
        v[i] = v0[i]
        if v[i] > mx:
            mx = v[i]
    if mx == 0.0:
        return np.zeros(n), -np.inf
    for i in range(n):
        v[i] /= mx
    acc = np.log(mx)
    out = np.empty(n)
    for s in range(idx.shape[0]):
        k = idx[s]
        mk = mant[k]
        mx = 0.0
        for i in range(n):
            tot = 0.0
            for j in range(n):
                tot += mk[i, j] * v[j]
            out[i] = tot
            if tot > mx:
                mx = tot
        if mx == 0.0:
            return np.zeros(n), -np.inf
        for i in range(n):
            v[i] = out[i] / mx
        acc += np.log(mx) + logs[k]
    return v, acc


@njit(cache=True)
def sweep_row_collect(mant, logs, idx, v0):
    steps = idx.shape[0]
    n = v0.shape[0]
    vecs = np.zeros((steps + 1, n))
    accs = np.empty(steps + 1)
    mx = 0.0
    for i in range(n):
        if v0[i] > mx:
            mx = v0[i]
    if mx == 0.0:
        accs[:] = -np.inf
        return vecs, accs
    for i in range(n):
        vecs[0, i] = v0[i] / mx
    accs[0] = np.log(mx)
    for s in range(steps):
        k = idx[s]
        mk = mant[k]
        mx = 0.0
        for j in range(n):
            tot = 0.0
            for i in range(n):
                tot += vecs[s, i] * mk[i, j]
            vecs[s + 1, j] = tot
            if tot > mx:
                mx = tot
        if mx == 0.0:
            for t in range(s + 1, steps + 1):
                accs[t] = -np.inf
            return vecs, accs
        for j in range(n):
            vecs[s + 1, j] /= mx
        accs[s + 1] = accs[s] + np.log(mx) + logs[k]
    return vecs, accs


@njit(cache=True)
def sweep_col_collect(mant, logs, idx, v0):
    steps = idx.shape[0]
    n = v0.shape[0]
    vecs = np.zeros((steps + 1, n))
    accs = np.empty(steps + 1)
    mx = 0.0
    for i in range(n):
        if v0[i] > mx:
            mx = v0[i]
    if mx == 0.0:
        accs[:] = -np.inf
        return vecs, accs
    for i in range(n):
        vecs[0, i] = v0[i] / mx
    accs[0] = np.log(mx)
    for s in range(steps):
        k = idx[s]
        mk = mant[k]
        mx = 0.0
        for i in range(n):
            tot = 0.0
            for j in range(n):
                tot += mk[i, j] * vecs[s, j]
            vecs[s + 1, i] = tot
            if tot > mx:
                mx = tot
        if mx == 0.0:
            for t in range(s + 1, steps + 1):
                accs[t] = -np.inf
            return vecs, accs
        for i in range(n):
            vecs[s + 1, i] /= mx
        accs[s + 1] = accs[s] + np.log(mx) + logs[k]
    return vecs, accs


@njit(cache=True, inline="always")
def _lse_push(m_run, s_run, e):
    # streaming log-sum-exp with running-max rescale
    if e <= m_run:
        return m_run, s_run + np.exp(e - m_run)
    return e, s_run * np.exp(m_run - e) + 1.0


@njit(cache=True)
def brute_chain(h_stack, idx, n_states, length):
    z = np.zeros(length, np.int64)
    total = 1
    for _ in range(length):
        total *= n_states
    m_run, s_run = -np.inf, 0.0
    for _ in range(total):
        e = 0.0
        for s in range(length - 1):
            e += h_stack[idx[s], z[s], z[s + 1]]
        m_run, s_run = _lse_push(m_run, s_run, e)
        t = length - 1
        while t >= 0:
            z[t] += 1
            if z[t] == n_states:
                z[t] = 0
                t -= 1
            else:
                break
    return m_run + np.log(s_run)


@njit(cache=True)
def brute_rrange(flat_stack, idx, n_states, length, r):
    z = np.zeros(length, np.int64)
    total = 1
    for _ in range(length):
        total *= n_states
    m_run, s_run = -np.inf, 0.0
    for _ in range(total):
        e = 0.0
        for s in range(length - r):
            code = 0
            for i in range(r + 1):
                code = code * n_states + z[s + i]
            e += flat_stack[idx[s], code]
        m_run, s_run = _lse_push(m_run, s_run, e)
        t = length - 1
        while t >= 0:
            z[t] += 1
            if z[t] == n_states:
                z[t] = 0
                t -= 1
            else:
                break
    return m_run + np.log(s_run)


@njit(cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> 1) & 0x5555555555555555)
    x = (x & 0x3333333333333333) + ((x >> 2) & 0x3333333333333333)
    x = (x + (x >> 4)) & 0x0F0F0F0F0F0F0F0F
    return (x * 0x0101010101010101) >> 56


@njit(cache=True)
def brute_spatial(m, length, alpha, beta, delta):
    total = np.int64(1) << (m * length)
    mask = np.int64((1 << m) - 1)
    vmask = np.int64((1 << (m - 1)) - 1)
    m_run, s_run = -np.inf, 0.0
    for g in range(total):
        e = 0.0
        prev = np.int64(-1)
        for t in range(length):
            col = (g >> (t * m)) & mask
            n_plus = _popcount(np.uint64(col))
            e += alpha * (2.0 * n_plus - m)
            if m > 1:
                v_plus = (m - 1) - _popcount(np.uint64((col ^ (col >> 1)) & vmask))
                e += beta * (2.0 * v_plus - (m - 1))
            if t > 0:
                agree = m - _popcount(np.uint64(col ^ prev))
                e += delta * (2.0 * agree - m)
            prev = col
        m_run, s_run = _lse_push(m_run, s_run, e)
    return m_run + np.log(s_run)
