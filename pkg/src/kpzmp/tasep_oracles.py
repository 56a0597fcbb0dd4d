"""Independent ground truth for TASEP.

Monte Carlo simulation, an exact uniformized Markov-chain solver for a few
particles, height-function encoding, and the particle configurations that
approximate multi-narrow-wedge data under 1:2:3 scaling.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.stats import poisson

from . import _backend
from .tasep_char import TasepInitial, as_initial
from .tasep_multipoint import as_queries

CHUNK = 1 << 16


class DiscretizationError(ValueError):
    pass


class StateSpaceError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    n_samples: int = 100_000

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


def simulate(y, times, seed=0, n_samples=1, start=0):
    """Positions x_k(t) of every particle, shape (n_samples, len(times), N)."""
    init = as_initial(y)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("times must be sorted and nonnegative")
    return _backend.kernels.simulate_tasep(
        np.array(init.y, dtype=np.int64), times, int(n_samples), int(seed) & ((1 << 64) - 1), int(start)
    )


def _event_mask(pos, q, times):
    ok = np.ones(pos.shape[0], dtype=bool)
    for e in q:
        ti = times.index(e.t)
        ok &= pos[:, ti, e.k - 1] >= e.a
    return ok


def mc_joint_cdf(y, q, cfg=None):
    """Monte Carlo estimate of P(x_{k_l}(t_l) >= a_l) with its standard error."""
    cfg = cfg or SimConfig()
    init = as_initial(y)
    q = as_queries(q, init.n)
    kmax = max(e.k for e in q)
    sub = TasepInitial(init.y[:kmax])
    times = sorted({e.t for e in q})
    hits = 0
    done = 0
    while done < cfg.n_samples:
        n = min(CHUNK, cfg.n_samples - done)
        pos = simulate(sub, times, cfg.seed, n, start=done)
        hits += int(np.count_nonzero(_event_mask(pos, q, times)))
        done += n
    p = hits / cfg.n_samples
    return p, math.sqrt(max(p * (1 - p), 0.0) / cfg.n_samples)


def _cap(t, tol):
    return int(poisson.isf(tol, t)) + 1 if t > 0 else 0


def ctmc_joint_cdf(y, q, tol=1e-13, max_states=2_000_000, with_error=False):
    """Exact probability by uniformization on a displacement-capped lattice.

    Each particle moves only when its own rate-1 clock rings, so capping every
    displacement at D loses at most K P(Poisson(t_m) > D) mass, which is
    collected in an absorbing sink and reported as the error bound.
    """
    init = as_initial(y)
    q = as_queries(q, init.n)
    kmax = max(e.k for e in q)
    if kmax > 4:
        raise StateSpaceError("exact solver supports at most 4 relevant particles")
    y0 = init.y[:kmax]
    horizon = q[-1].t
    cap = _cap(horizon, tol / kmax)

    index = {y0: 0}
    states = [y0]
    rows, cols = [], []
    sink_from = []
    i = 0
    while i < len(states):
        x = states[i]
        for p in range(kmax):
            if p == 0 or x[p - 1] > x[p] + 1:
                nxt = x[:p] + (x[p] + 1,) + x[p + 1 :]
                if nxt[p] - y0[p] > cap:
                    sink_from.append(i)
                    continue
                j = index.get(nxt)
                if j is None:
                    j = len(states)
                    if j >= max_states:
                        raise StateSpaceError("state space exceeds the budget")
                    index[nxt] = j
                    states.append(nxt)
                rows.append(j)
                cols.append(i)
        i += 1
    ns = len(states)
    sink = ns
    rows += [sink] * len(sink_from)
    cols += sink_from
    # transition matrix of the uniformized chain, rate kmax; columns are sources
    out_rate = np.bincount(cols, minlength=ns + 1).astype(float)
    lam = float(kmax)
    data = np.full(len(rows), 1.0 / lam)
    P = sparse.csr_matrix((data, (rows, cols)), shape=(ns + 1, ns + 1))
    P = P + sparse.diags(1.0 - out_rate / lam)
    P = P.tolil()
    P[sink, sink] = 1.0
    P = P.tocsr()

    arr = np.array(states + [tuple([0] * kmax)])
    vec = np.zeros(ns + 1)
    vec[0] = 1.0
    t_prev = 0.0
    lost = 0.0
    for e in q:
        dt = e.t - t_prev
        if dt > 0:
            vec = _uniformize(P, vec, lam * dt, tol)
        lost = vec[sink]
        keep = arr[:, e.k - 1] >= e.a
        keep[sink] = False
        vec = np.where(keep, vec, 0.0)
        t_prev = e.t
    val = float(vec.sum())
    return (val, float(lost) + tol) if with_error else val


def _uniformize(P, vec, mu, tol):
    # sum_j Poisson(mu)(j) P^j vec, truncated where the Poisson tail < tol
    jmax = int(poisson.isf(tol, mu)) + 2
    out = np.zeros_like(vec)
    term = vec.copy()
    logw = -mu
    for j in range(jmax + 1):
        out += math.exp(logw) * term
        term = P @ term
        logw += math.log(mu) - math.log(j + 1)
    return out


# height functions


@dataclass(frozen=True)
class HeightFunction:
    """Integer-point values H(x) for x_min <= x <= x_max with H(0) = 0."""

    x_min: int
    x_max: int
    values: tuple

    def __call__(self, x):
        if not self.x_min <= x <= self.x_max:
            raise IndexError("outside the window")
        return self.values[x - self.x_min]

    @property
    def slopes(self):
        v = self.values
        return tuple(v[i + 1] - v[i] for i in range(len(v) - 1))


def height_encode(y, window):
    """H(0) = 0 and H(x+1) = H(x) + 1 if site x is occupied, else - 1."""
    init = as_initial(y)
    lo, hi = int(window[0]), int(window[1])
    if hi <= lo:
        raise ValueError("empty window")
    occ = set(init.y)
    base_lo = min(lo, 0)
    base_hi = max(hi, 0)
    h = {0: 0}
    for x in range(0, base_hi):
        h[x + 1] = h[x] + (1 if x in occ else -1)
    for x in range(-1, base_lo - 1, -1):
        h[x] = h[x + 1] - (1 if x in occ else -1)
    return HeightFunction(lo, hi, tuple(h[x] for x in range(lo, hi + 1)))


def height_decode(h):
    """Particles at the sites where H increases."""
    sl = h.slopes
    if any(abs(s) != 1 for s in sl):
        raise ValueError("height increments must be +-1")
    y = [h.x_min + i for i, s in enumerate(sl) if s == 1]
    return TasepInitial(tuple(sorted(y, reverse=True)))


# multi-narrow-wedge discretization


def _wedges(mnw):
    w = getattr(mnw, "wedges", mnw)
    return [(float(a), float(b)) for a, b in w]


def discretize_mnw(mnw, eps, tail=None):
    """Dense clusters of particles approximating a normalized multi-wedge.

    Cluster i starts at index t_i = -floor(omega_i/eps) - floor(theta_i/(2 sqrt eps)) + 1
    with its rightmost particle at 2 floor(omega_i/eps), and is packed to the
    left until the next cluster starts.  The last cluster is infinite and is
    cut after ``tail`` particles (default ceil(20/sqrt(eps)) + 10).
    """
    w = _wedges(mnw)
    if not w:
        raise DiscretizationError("need at least one wedge")
    if w[0] != (0.0, 0.0):
        raise DiscretizationError("wedges must be normalized: (omega_0, theta_0) = (0, 0)")
    if any(a <= b for (a, _), (b, _) in zip(w, w[1:])):
        raise DiscretizationError("wedge positions must be strictly decreasing")
    if tail is None:
        tail = math.ceil(20 / math.sqrt(eps)) + 10
    idx = [-math.floor(om / eps) - math.floor(0.5 * th / math.sqrt(eps)) + 1 for om, th in w]
    top = [2 * math.floor(om / eps) for om, _ in w]
    ys = []
    for i in range(len(w)):
        end = idx[i + 1] if i + 1 < len(w) else idx[i] + tail
        if end <= idx[i]:
            raise DiscretizationError(f"cluster {i} is empty at eps = {eps}")
        cluster = [top[i] - (j - idx[i]) for j in range(idx[i], end)]
        if ys and cluster[0] >= ys[-1]:
            raise DiscretizationError(f"clusters {i - 1} and {i} overlap at eps = {eps}")
        ys.extend(cluster)
    return TasepInitial(tuple(ys))


def scaled_query(alpha, tau, beta, eps):
    """(k, t, a) for the KPZ point (alpha, tau, beta), rounding every O(1) to nearest."""
    k = round(0.5 * eps**-1.5 * tau - alpha / eps - 0.5 * beta / math.sqrt(eps))
    a = round(2 * alpha / eps)
    t = 2 * eps**-1.5 * tau
    return int(k), float(t), int(a)


def lpp_cdf(y, k, t, a, n_samples, seed=0):
    """Monte Carlo P(x_k(t) >= a) from last-passage times; returns (est, stderr).

    Particle j needs jumps[j] jumps so that particle k can make a - y_k.
    """
    init = as_initial(y)
    yy = init.y
    need = a - yy[k - 1]
    if need <= 0:
        return 1.0, 0.0
    jumps = [0] * k
    jumps[k - 1] = need
    for j in range(k - 1, 0, -1):
        jumps[j - 1] = max(jumps[j] + yy[j] + 1 - yy[j - 1], 0)
    # every jump time is stored, so keep a chunk near 2e7 doubles
    chunk = max(1, min(CHUNK, 20_000_000 // max(sum(jumps), 1)))
    hits = 0
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        res = _backend.kernels.lpp_jump_times(
            np.array(yy[:k], dtype=np.int64), np.array(jumps, dtype=np.int64), n, int(seed), done
        )
        hits += int(np.count_nonzero(res[k - 1][:, need] <= t))
        done += n
    p = hits / n_samples
    return p, math.sqrt(max(p * (1 - p), 0.0) / n_samples)
