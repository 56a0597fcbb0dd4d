"""Pure-Python versions of the hot kernels.

These mirror ``_kernels.pyx`` line for line (same recursion, same random
number stream) so both backends give identical results up to rounding.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def _splitmix_next(state):
    state = (state + GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _stream_seed(seed, index):
    # decorrelate per-sample streams
    _, s = _splitmix_next((seed ^ ((index * 0xD1B54A32D192ED03) & MASK64)) & MASK64)
    return s


def _exp1(state):
    state, x = _splitmix_next(state)
    u = (x >> 11) * (1.0 / 9007199254740992.0)
    return state, -math.log1p(-u)


def _uniform_int(state, n):
    state, x = _splitmix_next(state)
    return state, ((x >> 11) * n) >> 53


def hitting_table_w(y, v):
    """Rescaled hitting table W[m, z - y_N - 1] = values(z, m) (2v+2)^(z+1)."""
    y = [int(t) for t in y]
    n = len(y)
    lo = y[-1] + 1
    span = y[0] - y[-1]
    v = complex(v)
    ratio = -v / (v + 1)
    a = v + 1
    w = np.zeros((n, span), dtype=complex)
    nxt = [0j] * span
    for m in range(n - 1, -1, -1):
        cur = [0j] * span
        stop = 2 * ratio**m
        s = 0j
        for k in range(span):
            z = lo + k
            if z > y[m]:
                cur[k] = stop
            else:
                cur[k] = s
            s = a * (s + nxt[k])
        w[m, :] = cur
        nxt = cur
    return w


def ch_matrix(y, vs, us):
    y = [int(t) for t in y]
    vs = np.asarray(vs, dtype=complex)
    us = np.asarray(us, dtype=complex)
    lo = y[-1] + 1
    span = y[0] - y[-1]
    out = np.empty((len(vs), len(us)), dtype=complex)
    for i, v in enumerate(vs):
        w0 = hitting_table_w(y, v)[0] if span > 0 else np.zeros(0, complex)
        for j, u in enumerate(us):
            r = (u + 1) / (v + 1)
            lr = np.log(r)
            acc = 0j
            p = np.exp(lo * lr)
            for k in range(span):
                acc += p * w0[k]
                p *= r
            out[i, j] = np.exp((y[0] + 1) * lr) / (v - u) + acc / (2 * (v + 1))
    return out


def simulate_tasep(y, times, n_samples, seed, start=0):
    """Event-driven TASEP; returns positions of shape (n_samples, len(times), N)."""
    y = [int(t) for t in y]
    n = len(y)
    times = [float(t) for t in times]
    out = np.empty((n_samples, len(times), n), dtype=np.int64)
    for s in range(n_samples):
        st = _stream_seed(seed, start + s)
        x = list(y)
        t = 0.0
        q = 0
        while q < len(times):
            st, e = _exp1(st)
            t += e / n
            while q < len(times) and times[q] < t:
                out[s, q, :] = x
                q += 1
            if q == len(times):
                break
            st, i = _uniform_int(st, n)
            if i == 0 or x[i - 1] > x[i] + 1:
                x[i] += 1
    return out


def lpp_jump_times(y, jumps, n_samples, seed, start=0):
    """Times T(k, j) of the j-th jump of particle k via the exclusion recursion.

    ``jumps[k]`` is the number of jumps to generate for particle k (must be
    consistent with what particle k+1 needs).  Returns a list of arrays, one
    per particle, of shape (n_samples, jumps[k] + 1) with column 0 equal to 0.
    """
    y = [int(t) for t in y]
    n = len(jumps)
    res = [np.zeros((n_samples, jumps[k] + 1)) for k in range(n)]
    for s in range(n_samples):
        st = _stream_seed(seed, start + s)
        for k in range(n):
            row = res[k][s]
            prev = res[k - 1][s] if k > 0 else None
            for j in range(1, jumps[k] + 1):
                t = row[j - 1]
                if k > 0:
                    jp = j + y[k] + 1 - y[k - 1]
                    if jp > 0:
                        t = max(t, prev[jp])
                st, e = _exp1(st)
                row[j] = t + e
    return res
