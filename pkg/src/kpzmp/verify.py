"""Invariant suite run by ``kpzmp verify``.

Each check returns (error, tolerance); a check passes when error <= tolerance.
The quick budget takes well under five minutes, the full budget adds the Monte
Carlo comparisons and the scaling-convergence tables.
"""

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .equal_time import airy, airy_series, fredholm_mqr, fredholm_new, tw_gue
from .kpz_char import (
    ChiParams,
    MultiNarrowWedge,
    chi_mnw,
    chi_mnw_matrix,
    chi_shifted,
    heat_shift_identity_check,
    shift_factor,
    verify_bound,
)
from .kpz_multipoint import KpzTruncation, convergence_study, rescaled_ch
from .kpz_multipoint import joint_cdf as kpz_joint_cdf
from .tasep_char import TasepInitial, binom_identity_check, ch_matrix, verify_residue
from .tasep_multipoint import TruncationParams, joint_cdf
from .tasep_oracles import ctmc_joint_cdf, discretize_mnw, height_decode, height_encode, mc_joint_cdf, SimConfig


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    error: float
    tolerance: float
    wall_time: float
    table: tuple = ()


def chi_m2_closed_form(w1, t1, eta, xi):
    """chi for wedges (0, 0) and (w1, t1), w1 < 0, in closed form."""
    from scipy.special import erfc

    g = -w1
    c = eta - xi
    b = 2 * g * eta - t1
    A = 2 * math.sqrt(g)
    return 1 / c + (1 / c) * (-0.5 * erfc(b / A) + np.exp(c * c * A * A / 4 - c * b) * 0.5 * erfc((b - c * A * A / 2) / A))


def residue(rng=None):
    rng = rng or np.random.default_rng(1)
    err = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 7))
        y = sorted(rng.choice(np.arange(-8, 8), n, replace=False), reverse=True)
        # u outside the residue circle |v| = 0.3 with |u + 1| < 0.7
        u = complex(rng.uniform(-0.6, -0.45), rng.uniform(-0.2, 0.2))
        i = int(rng.integers(1, n + 1))
        err = max(err, abs(verify_residue(y, u, i)))
    return err, 1e-10


def step_ic():
    v = np.array([0.8, 1 + 0.5j, 0.6 - 0.7j])
    u = np.array([-0.2, 0.1 + 0.1j, -0.1j])
    err = 0.0
    for n in (1, 5, 20):
        ch = ch_matrix(TasepInitial.step(n), v, u)
        err = max(err, np.max(np.abs(ch - 1 / (v[:, None] - u[None, :]))))
    return err, 1e-12


def induction():
    err = 0.0
    for y in [(0,), (3, 1, -2), (5, 4, 0, -1)]:
        for i in range(1, len(y) + 1):
            for z in range(y[-1] + 1, y[0] + 3):
                lhs, rhs = binom_identity_check(y, z, i)
                err = max(err, abs(float(lhs - rhs)))
    return err, 1e-12


def poisson_one_point():
    err = 0.0
    for t in (0.5, 2.0):
        for a in (0, 2):
            v = joint_cdf((0,), [(1, t, a)]).value
            err = max(err, abs(v - poisson.sf(a - 1, t)))
    return err, 1e-6


def tasep_vs_ctmc():
    err = 0.0
    for y, q in [((-1, -2, -3), [(1, 1.0, 0), (3, 2.0, -1)]), ((2, 0, -3), [(2, 1.5, 1), (3, 1.5, -2)])]:
        r = joint_cdf(y, q)
        err = max(err, abs(r.value - ctmc_joint_cdf(y, q)) - max(1e-6, r.truncation))
    return max(err, 0.0), 1e-12


def z_radius_invariance():
    y, q = (2, 0, -3), [(2, 1.5, 1), (3, 1.5, -2)]
    a = joint_cdf(y, q, TruncationParams(z_radius=0.3))
    b = joint_cdf(y, q, TruncationParams(z_radius=0.6))
    return abs(a.value - b.value), max(1e-8, a.truncation)


def height_round_trip():
    bad = 0
    for y in [(0,), (3, 1, -2), (5, 4, 0, -1)]:
        h = height_encode(y, (y[-1] - 3, y[0] + 3))
        bad += height_decode(h).y != tuple(y)
    step = height_encode(TasepInitial.step(4), (-4, 0))
    bad += step.values != (-4, -3, -2, -1, 0)
    return float(bad), 0.0


def chi_closed_form():
    err = 0.0
    h = MultiNarrowWedge(((0.0, 0.0), (-0.7, 0.4)))
    for eta, xi in [(0.6, -0.4), (1 + 0.8j, -0.5 - 0.3j)]:
        err = max(err, abs(chi_mnw(h, eta, xi) - chi_m2_closed_form(-0.7, 0.4, eta, xi)))
    return err, 1e-10


def chi_anchor():
    h = MultiNarrowWedge(((0.2, 0.1), (-0.3, -0.2), (-0.9, 0.5)))
    eta, xi = 0.7 + 0.4j, -0.6 - 0.2j
    ref = chi_mnw(h, eta, xi)
    err = max(abs(chi_shifted(h, a, eta, xi) - ref) for a in (0.5, 0.2, -0.1, -0.3, -0.6))
    return err, 1e-8


def chi_shift_covariance():
    h = MultiNarrowWedge(((0.0, 0.0), (-0.5, 0.3)))
    a, b = 0.35, -0.4
    hs = MultiNarrowWedge(tuple((w + a, t - b) for w, t in h.wedges))
    eta, xi = 0.8 - 0.3j, -0.5 + 0.6j
    lhs = chi_mnw(hs, eta, xi)
    rhs = shift_factor(a, b, eta, xi) * chi_mnw(h, eta, xi)
    return abs(lhs - rhs), 1e-10


def chi_bound():
    h = MultiNarrowWedge(((0.4, 0.2), (-0.3, -0.1), (-0.8, 0.6)))
    etas = np.array([0.3, 0.9 + 0.7j, 1.5 - 1.2j])
    xis = np.array([-0.3, -0.8 + 0.5j, -1.4 - 1j])
    vals = chi_mnw_matrix(h, etas, xis)
    bad = sum(
        not verify_bound(h.support_half_width, h.height_bound, e, x, vals[i, j])
        for i, e in enumerate(etas)
        for j, x in enumerate(xis)
    )
    return float(bad), 0.0


def heat_identity():
    err = 0.0
    for w, t, r in [(0.5 + 1j, 0.3, -0.2), (-1 + 0.2j, 1.0, 0.7)]:
        lhs, rhs = heat_shift_identity_check(w, t, r)
        err = max(err, abs(lhs - rhs) / abs(rhs))
    return err, 1e-10


def airy_oracle():
    x = np.array([-2.0, 0.0, 1.5])
    return float(np.max(np.abs(airy(x) - airy_series(x)))), 1e-12


def tw_one_point():
    err = max(abs(fredholm_new([(0.0, b)], [(0.0, 0.0)]) - tw_gue(b)) for b in (-2.0, 0.0, 2.0))
    return err, 1e-6


def new_vs_mqr():
    err = 0.0
    for h, q in [
        ([(0.0, 0.0)], [(0.0, -1.0), (0.6, -0.5)]),
        ([(0.0, 0.0), (-0.5, 0.3)], [(0.0, -0.5), (0.5, 0.0)]),
    ]:
        err = max(err, abs(fredholm_new(q, h) - fredholm_mqr(q, h)))
    return err, 1e-6


def marginal():
    h = [(0.0, 0.0)]
    two = fredholm_new([(0.0, -0.5), (0.7, 8.0)], h)
    one = fredholm_new([(0.0, -0.5)], h)
    return abs(two - one), 1e-3


def kpz_series_vs_tw():
    r = kpz_joint_cdf([(0.0, 0.0)], [(0.0, 1.0, -1.0)])
    return abs(r.value - tw_gue(-1.0)), max(1e-6, r.truncation)


def kpz_truncation_R():
    q = [(0.0, 1.0, -0.5), (0.3, 2.0, 0.5)]
    a = kpz_joint_cdf([(0.0, 0.0)], q, KpzTruncation(n_total_max=2))
    b = kpz_joint_cdf([(0.0, 0.0)], q, KpzTruncation(n_total_max=2, R=12.0, right_ray_order=288))
    return abs(a.value - b.value), max(1e-8, a.truncation)


def tasep_vs_mc():
    y, q = (2, 0, -3), [(2, 1.5, 1), (3, 1.5, -2)]
    p, se = mc_joint_cdf(y, q, SimConfig(7, 200_000))
    return abs(p - ctmc_joint_cdf(y, q)) / se, 3.0


def rescaled_ch_trend():
    h = MultiNarrowWedge(((0.0, 0.0), (-0.3, -0.2), (-0.8, 0.5)))
    etas = np.array([0.8, 1.0 + 0.5j])
    xis = np.array([-0.7, -0.9 + 0.3j])
    ref = chi_mnw_matrix(h, etas, xis, ChiParams())
    errs = []
    for eps in (0.02, 0.01, 0.005):
        y = discretize_mnw(h, eps)
        errs.append(float(np.max(np.abs(rescaled_ch(y, eps, etas, xis) - ref))))
    ok = all(b < a for a, b in zip(errs, errs[1:]))
    # trend check only; no rate is asserted
    return (errs[-1] if ok else math.inf), 1.0, tuple(zip((0.02, 0.01, 0.005), errs))


def lpp_convergence_trend():
    rows = convergence_study([(0.0, 0.0)], [(0.0, 1.0, -1.0)], [0.1, 0.05, 0.025], n_samples=100_000, seed=11)
    errs = [r.error for r in rows]
    ok = all(b < a for a, b in zip(errs, errs[1:]))
    return (errs[-1] if ok else math.inf), 1.0, tuple(rows)


QUICK = [
    ("residue_identity", residue),
    ("step_ic", step_ic),
    ("induction_identity", induction),
    ("poisson_one_point", poisson_one_point),
    ("tasep_vs_ctmc", tasep_vs_ctmc),
    ("z_radius_invariance", z_radius_invariance),
    ("height_round_trip", height_round_trip),
    ("chi_closed_form", chi_closed_form),
    ("chi_anchor_independence", chi_anchor),
    ("chi_shift_covariance", chi_shift_covariance),
    ("chi_bound", chi_bound),
    ("heat_shift_identity", heat_identity),
    ("airy_oracle", airy_oracle),
    ("tw_one_point", tw_one_point),
    ("new_vs_mqr", new_vs_mqr),
    ("marginal_consistency", marginal),
    ("kpz_series_vs_tw", kpz_series_vs_tw),
]

FULL = QUICK + [
    ("kpz_truncation_R", kpz_truncation_R),
    ("tasep_vs_mc", tasep_vs_mc),
    ("rescaled_ch_trend", rescaled_ch_trend),
    ("lpp_convergence_trend", lpp_convergence_trend),
]


def run_check(name, fn):
    t0 = time.perf_counter()
    try:
        out = fn()
    except Exception:  # a crashing check is a failing check
        out = (math.inf, 0.0)
    err, tol = out[:2]
    table = out[2] if len(out) > 2 else ()
    return CheckResult(name, bool(err <= tol), float(err), float(tol), time.perf_counter() - t0, table)


def verify_all(budget="quick", only=None):
    if budget not in ("quick", "full"):
        raise ValueError("budget must be 'quick' or 'full'")
    suite = QUICK if budget == "quick" else FULL
    if only is not None:
        suite = [c for c in suite if c[0] in only]
    return [run_check(name, fn) for name, fn in suite]
