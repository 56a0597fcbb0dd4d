"""Multipoint distribution of the KPZ fixed point through its determinant series.

The series has the same structure as the TASEP one, with ch replaced by chi,
the circles replaced by truncated rays and

    f_l(zeta) = exp(-(tau_l - tau_{l-1}) zeta^3 / 3 + (alpha_l - alpha_{l-1}) zeta^2
                    + (beta_l - beta_{l-1}) zeta).

The series is expensive beyond a few terms; equal-time probabilities are
better computed with the Fredholm determinants of ``equal_time``.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .contours import LEFT, build_kpz_contours, build_z_cycle, ray_reach
from .kpz_char import ChiParams, MultiNarrowWedge, as_mnw, chi_mnw_matrix
from .series import SeriesEngine, compositions, series_with_shells
from .tasep_char import ch_matrix
from .tasep_multipoint import QueryError, ToleranceError, engine_nodes, finish

# Both Gamma contours run upward, which is the orientation the series assumes.
KPZ_PAIR_SIGN = 1


@dataclass(frozen=True)
class KpzQuery:
    alpha: float
    tau: float
    beta: float


def as_kpz_queries(q):
    qs = []
    for e in q:
        if isinstance(e, KpzQuery):
            qs.append(e)
        else:
            a, t, b = e
            qs.append(KpzQuery(float(a), float(t), float(b)))
    if not qs:
        raise QueryError("need at least one query")
    for i, e in enumerate(qs):
        if not e.tau > 0:
            raise QueryError(f"query {i + 1}: time must be positive")
        if not all(math.isfinite(x) for x in (e.alpha, e.tau, e.beta)):
            raise QueryError(f"query {i + 1}: non-finite entry")
    for i in range(1, len(qs)):
        p, c = qs[i - 1], qs[i]
        if not (p.tau < c.tau or (p.tau == c.tau and p.alpha < c.alpha)):
            raise QueryError(
                f"queries {i} and {i + 1} violate the order: need tau_{i} < tau_{i + 1}, "
                f"or equal times with alpha_{i} < alpha_{i + 1}"
            )
    return tuple(qs)


@dataclass(frozen=True)
class LimitFunctions:
    """Differenced (tau, alpha, beta) per level, with zeros before level 1."""

    diffs: tuple

    @classmethod
    def from_queries(cls, q):
        q = as_kpz_queries(q)
        out = []
        prev = KpzQuery(0.0, 0.0, 0.0)
        for e in q:
            out.append((e.tau - prev.tau, e.alpha - prev.alpha, e.beta - prev.beta))
            prev = e
        return cls(tuple(out))

    @property
    def m(self):
        return len(self.diffs)

    def log_f(self, level, z):
        dt, da, db = self.diffs[level - 1]
        z = np.asarray(z, dtype=complex)
        return -dt * z**3 / 3 + da * z**2 + db * z


def flim_factor(level, z, lf):
    if not isinstance(lf, LimitFunctions):
        lf = LimitFunctions.from_queries(lf)
    if not 1 <= level <= lf.m:
        raise IndexError("level out of range")
    val = np.exp(lf.log_f(level, z))
    return complex(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class KpzTruncation:
    n_total_max: int = 3
    ray_order: int = 48
    right_ray_order: int = 192
    R: float = 8.0
    segments: int = 4
    spacing: float = 0.35
    z_radius: float = 0.5
    z_order: int = 64
    tolerance: float = math.inf
    rescale: bool = True
    chi: ChiParams = field(default_factory=ChiParams)

    def __post_init__(self):
        if self.n_total_max < 0:
            raise ValueError("n_total_max must be >= 0")
        if not 0 < self.z_radius < 1:
            raise ValueError("z_radius must lie in (0, 1)")


def build_family(m, tp, lf=None, shift=(0.0, 0.0)):
    """Ray contours; with ``lf`` each ray stops where its weight is below e^-40.

    R stays the upper bound.  Large time increments make the weights decay
    within a short radius, and the nodes are then packed into that radius.
    ``shift`` = (alpha, beta) is the growth e^{alpha(eta^2 - xi^2) + beta(xi - eta)}
    carried by chi for non-normalized data.
    """
    reach = None
    if lf is not None:
        a, b = shift

        def reach(lev, side, c, angle):
            if side == LEFT:
                logw = lambda x: lf.log_f(lev, x) - a * x * x + b * x
            else:
                logw = lambda x: -lf.log_f(lev, x) + a * x * x - b * x
            try:
                return min(tp.R, ray_reach(logw, c, angle, min(1.0, tp.R), rmax=tp.R))
            except ValueError:  # no decay inside R
                return tp.R

    return build_kpz_contours(
        m, spacing=tp.spacing, R=tp.R, order=tp.ray_order, segments=tp.segments, right_order=tp.right_ray_order,
        reach=reach,
    )


def chi_handle(h, p=None):
    """Matrix characteristic function [chi(eta_i, xi_j)] for mNW data or a callable."""
    if callable(h) and not hasattr(h, "wedges"):
        return h
    h = as_mnw(h)
    return lambda etas, xis: chi_mnw_matrix(h, etas, xis, p)


def build_engine(h, q, family, chi_params=None):
    lf = q if isinstance(q, LimitFunctions) else LimitFunctions.from_queries(q)
    if family.m != lf.m:
        raise ValueError("contour family and query list disagree on m")
    nodes = engine_nodes(family, lf.log_f)
    return SeriesEngine(lf.m, nodes, chi_handle(h, chi_params), KPZ_PAIR_SIGN)


def term_eval(n, z, family, h, q, engine=None):
    if engine is None:
        engine = build_engine(h, q, family)
    return complex(engine.term(n, z))


def series_eval(z, family, h, q, n_total_max=3, engine=None):
    if engine is None:
        engine = build_engine(h, q, family)
    total = 0j
    for s in range(n_total_max + 1):
        for n in compositions(s, engine.m):
            total += engine.term(n, z) / np.prod([math.factorial(k) for k in n]) ** 2
    return complex(total)


def rescale_time(h, q, c):
    """(h_c, q_c) with H(alpha, tau; h) = c^(1/3) H(c^(-2/3) alpha, tau / c; h_c) in law.

    h_c(x) = c^(-1/3) h(c^(2/3) x), so every event {H <= beta} maps to
    {H <= c^(-1/3) beta} for the rescaled data.
    """
    s, r = c ** (-2 / 3), c ** (-1 / 3)
    hc = MultiNarrowWedge(tuple((w * s, t * r) for w, t in as_mnw(h).wedges))
    qc = tuple(KpzQuery(e.alpha * s, e.tau / c, e.beta * r) for e in as_kpz_queries(q))
    return hc, qc


def joint_cdf(h, q, tp=None):
    """P(H(alpha_l, tau_l; h) <= beta_l for all l) with a truncation estimate.

    Narrow-wedge data are first rescaled so that tau_1 = 1, which keeps the
    fixed contour vertices at the natural scale of the integrands.
    """
    tp = tp or KpzTruncation()
    q = as_kpz_queries(q)
    m = len(q)
    if tp.rescale and (not callable(h) or hasattr(h, "wedges")):
        h, q = rescale_time(h, q, q[0].tau)
    lf = LimitFunctions.from_queries(q)
    shift = (0.0, 0.0)
    if not callable(h) or hasattr(h, "wedges"):
        _, sa, sb = as_mnw(h).normalized()
        shift = (sa, sb)
    family = build_family(m, tp, lf, shift)
    engine = build_engine(h, lf, family, tp.chi)
    cycles = [build_z_cycle(tp.z_radius, tp.z_order) for _ in range(m - 1)]
    total, shells = series_with_shells(engine, cycles, tp.n_total_max)
    return finish(total, shells, tp.tolerance)


# TASEP -> KPZ scaling


def rescaled_ch(y, eps, etas, xis):
    """(1/2) eps^(1/2) ch_Y(-1/2 + eps^(1/2) eta / 2, -1/2 + eps^(1/2) xi / 2)."""
    r = math.sqrt(eps)
    vs = -0.5 + 0.5 * r * np.asarray(etas, dtype=complex)
    us = -0.5 + 0.5 * r * np.asarray(xis, dtype=complex)
    return 0.5 * r * ch_matrix(y, vs, us)


@dataclass(frozen=True)
class ConvergenceRow:
    eps: float
    n_particles: int
    tasep: float
    stderr: float
    kpz: float
    error: float
    wall_time: float


def convergence_study(h, q, eps_list, tp=None, n_samples=100_000, seed=0, max_work=5e9):
    """TASEP Monte Carlo at 1:2:3 scaling against the KPZ value, one row per eps."""
    from .tasep_oracles import discretize_mnw, lpp_cdf, mc_joint_cdf, scaled_query, SimConfig

    h = as_mnw(h)
    q = as_kpz_queries(q)
    h0, shift_a, shift_b = h.normalized()
    # the discretization uses normalized data; undo the shift on the queries
    qn = [KpzQuery(e.alpha - shift_a, e.tau, e.beta + shift_b) for e in q]
    target = float(joint_cdf(h0, qn, tp))
    eps_list = list(eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be decreasing")
    rows = []
    for eps in eps_list:
        t0 = time.perf_counter()
        y = discretize_mnw(h0, eps)
        sq = [scaled_query(e.alpha, e.tau, e.beta, eps) for e in qn]
        kmax = max(k for k, _, _ in sq)
        if kmax > y.n or min(k for k, _, _ in sq) < 1:
            raise ValueError(f"scaled particle index outside 1..{y.n} at eps = {eps}")
        if len(sq) == 1:
            # last-passage cost: about k jump counts of size a - y_k each
            k, _, a = sq[0]
            work = n_samples * k * max(a - y.y[k - 1], 1)
        else:
            work = n_samples * kmax * max(t for _, t, _ in sq)
        if work > max_work:
            raise ValueError(f"eps = {eps} exceeds the work budget ({work:.3g} > {max_work:.3g})")
        if len(sq) == 1:
            k, t, a = sq[0]
            p, se = lpp_cdf(y, k, t, a, n_samples, seed)
        else:
            p, se = mc_joint_cdf(y, sq, SimConfig(seed, n_samples))
        rows.append(ConvergenceRow(eps, y.n, p, se, target, abs(p - target), time.perf_counter() - t0))
    return rows
