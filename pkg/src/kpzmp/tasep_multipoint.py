"""Finite-time multipoint distribution of TASEP through its determinant series.

    P(x_{k_l}(t_l) >= a_l, l = 1..m)
        = oint prod dz_l / (2 pi i z_l (1 - z_l)) sum_n D^(n)(z) / (n!)^2

with D^(n) the nested-contour integral evaluated by ``series.SeriesEngine``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .contours import BASE, IN, LEFT, OUT, RIGHT, build_tasep_contours, build_z_cycle
from .series import SeriesEngine, compositions, series_with_shells
from .tasep_char import as_initial, ch_matrix

# Right circles run counterclockwise around 0, which is the reverse of the
# direction the determinant expansion assumes; each (u, v) pair flips sign.
TASEP_PAIR_SIGN = -1


class QueryError(ValueError):
    pass


class ToleranceError(RuntimeError):
    pass


@dataclass(frozen=True)
class TasepQuery:
    k: int
    t: float
    a: int


def as_queries(q, n_particles=None):
    qs = []
    for e in q:
        if isinstance(e, TasepQuery):
            qs.append(e)
        else:
            k, t, a = e
            qs.append(TasepQuery(int(k), float(t), int(a)))
    if not qs:
        raise QueryError("need at least one query")
    for i, e in enumerate(qs):
        if e.k < 1:
            raise QueryError(f"query {i + 1}: particle index must be >= 1")
        if n_particles is not None and e.k > n_particles:
            raise QueryError(f"query {i + 1}: particle index {e.k} exceeds N = {n_particles}")
        if not e.t > 0:
            raise QueryError(f"query {i + 1}: time must be positive")
    for i in range(1, len(qs)):
        if qs[i].t < qs[i - 1].t:
            raise QueryError(f"query times must be nondecreasing (t_{i} > t_{i + 1})")
    if len({(e.k, e.t) for e in qs}) != len(qs):
        raise QueryError("repeated (k, t) pair in the query list")
    return tuple(qs)


@dataclass(frozen=True)
class TruncationParams:
    n_total_max: int = 4
    circle_order: int = 128
    ray_order: int = 24
    z_radius: float = 0.5
    z_order: int = 64
    kpz_truncation_R: float = 8.0
    base_radius: float = 0.25
    spacing: float = 0.06
    tolerance: float = field(default=math.inf)

    def __post_init__(self):
        if self.n_total_max < 0:
            raise ValueError("n_total_max must be >= 0")
        if not 0 < self.z_radius < 1:
            raise ValueError("z_radius must lie in (0, 1)")


def _diffs(q):
    out = []
    prev = TasepQuery(0, 0.0, 0)
    for e in q:
        out.append((e.k - prev.k, e.a - prev.a, e.t - prev.t))
        prev = e
    return out


def log_f_factor(i, w, q):
    q = as_queries(q)
    dk, da, dt = _diffs(q)[i - 1]
    w = np.asarray(w, dtype=complex)
    if np.any(w == 0) or np.any(w == -1):
        raise ValueError("f is singular at w = 0 and w = -1")
    return dk * np.log(w) - (da + dk) * np.log(w + 1) + dt * w


def f_factor(i, w, q):
    """f_i(w) = w^dk (w+1)^(-da-dk) e^(dt w) with level-i differences."""
    q = as_queries(q)
    if not 1 <= i <= len(q):
        raise IndexError("level out of range")
    val = np.exp(log_f_factor(i, w, q))
    return complex(val) if np.ndim(val) == 0 else val


def cauchy_det(w, wp):
    """det[1/(w_i - w'_j)] from the closed product formula."""
    w = np.asarray(w, dtype=complex).ravel()
    wp = np.asarray(wp, dtype=complex).ravel()
    n = len(w)
    if len(wp) != n:
        raise ValueError("Cauchy determinant needs equal lengths")
    if n == 0:
        return 1.0 + 0j
    diff = w[:, None] - wp[None, :]
    if np.any(diff == 0):
        raise ZeroDivisionError("coincident points in Cauchy determinant")
    logv = -np.sum(np.log(diff))
    sign = (-1) ** (n * (n - 1) // 2)
    iu = np.triu_indices(n, 1)
    dw = w[iu[1]] - w[iu[0]]
    dwp = wp[iu[1]] - wp[iu[0]]
    if np.any(dw == 0) or np.any(dwp == 0):
        return 0j
    logv = logv + np.sum(np.log(dw)) + np.sum(np.log(dwp))
    return complex(sign * np.exp(logv))


def engine_nodes(family, fvals):
    """Node sets with weights base * f (left) or base / f (right)."""
    nodes = {}
    for c in family.contours:
        kind = "u" if c.side == LEFT else "v"
        logf = fvals(c.level, c.points)
        w = c.weights * np.exp(logf if kind == "u" else -logf)
        nodes[(kind, c.level, c.nesting)] = (c.points, w)
    return nodes


def build_engine(y, q, family):
    init = as_initial(y)
    q = as_queries(q, init.n)
    if family.m != len(q):
        raise ValueError("contour family and query list disagree on m")
    nodes = engine_nodes(family, lambda lev, pts: log_f_factor(lev, pts, q))
    return SeriesEngine(len(q), nodes, lambda vs, us: ch_matrix(init, vs, us), TASEP_PAIR_SIGN)


def term_eval(n, z, family, y, q, engine=None):
    if engine is None:
        engine = build_engine(y, q, family)
    return complex(engine.term(n, z))


def series_eval(z, family, y, q, n_total_max=4, engine=None):
    if engine is None:
        engine = build_engine(y, q, family)
    total = 0j
    for s in range(n_total_max + 1):
        for n in compositions(s, engine.m):
            total += engine.term(n, z) / np.prod([math.factorial(k) for k in n]) ** 2
    return complex(total)


@dataclass(frozen=True)
class SeriesResult:
    value: float
    truncation: float
    imag: float
    shells: tuple

    def __float__(self):
        return self.value


def finish(total, shells, tolerance=math.inf):
    trunc = float(abs(shells[-1])) if len(shells) > 1 else 0.0
    if abs(total.imag) > max(1e-8, 10 * trunc):
        raise ToleranceError(f"imaginary residue {abs(total.imag):.3g} of the z-integral is too large")
    if trunc > tolerance:
        raise ToleranceError(f"truncation estimate {trunc:.3g} exceeds tolerance {tolerance:.3g}")
    return SeriesResult(float(total.real), trunc, float(total.imag), tuple(shells))


def joint_cdf(y, q, tp=None):
    """P(x_{k_l}(t_l) >= a_l for all l) with a truncation estimate."""
    tp = tp or TruncationParams()
    init = as_initial(y)
    q = as_queries(q, init.n)
    m = len(q)
    family = build_tasep_contours(m, tp.base_radius, tp.spacing, tp.circle_order)
    engine = build_engine(init, q, family)
    cycles = [build_z_cycle(tp.z_radius, tp.z_order) for _ in range(m - 1)]
    total, shells = series_with_shells(engine, cycles, tp.n_total_max)
    return finish(total, shells, tp.tolerance)
