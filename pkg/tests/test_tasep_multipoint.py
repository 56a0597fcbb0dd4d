import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import poisson

from kpzmp.contours import build_tasep_contours
from kpzmp.tasep_char import ch_matrix
from kpzmp.tasep_multipoint import (
    QueryError,
    ToleranceError,
    TruncationParams,
    build_engine,
    cauchy_det,
    engine_nodes,
    f_factor,
    joint_cdf,
    log_f_factor,
    series_eval,
    term_eval,
)
from kpzmp.tasep_oracles import ctmc_joint_cdf


def test_query_validation():
    with pytest.raises(QueryError, match="nondecreasing"):
        joint_cdf((0, -1), [(1, 2.0, 0), (2, 1.0, 0)])
    with pytest.raises(QueryError, match="exceeds"):
        joint_cdf((0,), [(2, 1.0, 0)])
    with pytest.raises(QueryError, match="repeated"):
        joint_cdf((0,), [(1, 1.0, 0), (1, 1.0, 1)])
    with pytest.raises(QueryError):
        joint_cdf((0,), [])


def test_f_factor():
    q = [(1, 1.0, 0), (2, 1.5, 1)]
    w = 0.3 + 0.2j
    assert abs(f_factor(2, w, q) - w * (w + 1) ** -2 * np.exp(0.5 * w)) < 1e-14
    with pytest.raises(ValueError):
        f_factor(1, -1.0, q)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_cauchy_det_product_formula(n, seed):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    wp = rng.normal(size=n) + 1j * rng.normal(size=n) + 3
    dense = np.linalg.det(1 / (w[:, None] - wp[None, :]))
    assert abs(cauchy_det(w, wp) - dense) <= 1e-10 * max(1.0, abs(dense))


def test_cauchy_det_degenerate():
    assert cauchy_det([1.0, 1.0], [3.0, 4.0]) == 0
    assert cauchy_det([], []) == 1


def test_poisson_frozen():
    # P(x_1(1) >= 1) for a single particle at 0 is 1 - e^-1
    r = joint_cdf((0,), [(1, 1.0, 1)])
    assert abs(r.value - 0.6321205588285577) < 1e-12
    assert abs(r.value - poisson.sf(0, 1.0)) < 1e-12


def test_terms_against_dense_quadrature():
    # order-n term of the one-point series equals the tensor quadrature of
    # det[ch(v_i, u_j)] det[1/(u_i - v_j)] with the orientation sign (-1)^n
    y, q = (1, -1), [(2, 1.0, 0)]
    fam = build_tasep_contours(1, 0.25, 0.06, 12)
    eng = build_engine(y, q, fam)
    (U, wu), (V, wv) = engine_nodes(fam, lambda lev, p: log_f_factor(lev, p, q)).values()
    ch = ch_matrix(y, V, U)
    for n in (1, 2):
        dense = 0j
        for iu in itertools.product(range(len(U)), repeat=n):
            for iv in itertools.product(range(len(V)), repeat=n):
                w = np.prod(wu[list(iu)]) * np.prod(wv[list(iv)])
                dense += w * np.linalg.det(ch[np.ix_(iv, iu)]) * cauchy_det(U[list(iu)], V[list(iv)])
        assert abs(term_eval((n,), [], fam, y, q, eng) - (-1) ** n * dense) < 1e-14


def test_series_eval_matches_joint_cdf():
    y, q = (2, 0, -3), [(3, 1.5, -2)]
    fam = build_tasep_contours(1, 0.25, 0.06, 128)
    assert abs(series_eval([], fam, y, q).real - joint_cdf(y, q).value) < 1e-12


@pytest.mark.parametrize(
    "y,q",
    [
        ((1, -1), [(1, 1.0, 2), (2, 1.5, 0)]),
        ((2, 0, -3), [(2, 1.5, 1), (3, 1.5, -2)]),
        ((0,), [(1, 0.7, 1), (1, 1.8, 2)]),
    ],
)
def test_two_point_against_uniformization(y, q):
    r = joint_cdf(y, q)
    assert abs(r.value - ctmc_joint_cdf(y, q)) <= max(1e-6, r.truncation)


def test_z_radius_invariance():
    y, q = (1, -1), [(1, 1.0, 2), (2, 1.5, 0)]
    a = joint_cdf(y, q, TruncationParams(z_radius=0.3))
    b = joint_cdf(y, q, TruncationParams(z_radius=0.6))
    assert abs(a.value - b.value) < max(1e-8, a.truncation)


def test_truncation_shells_reported():
    r = joint_cdf((2, 0, -3), [(3, 1.5, -2)], TruncationParams(n_total_max=2))
    assert len(r.shells) == 3
    assert r.truncation == abs(r.shells[-1])


def test_tolerance_failure():
    with pytest.raises(ToleranceError):
        joint_cdf((2, 0, -3), [(3, 1.5, -2)], TruncationParams(n_total_max=1, tolerance=1e-12))


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 2.5), st.integers(0, 4))
def test_one_point_poisson(t, a):
    assert abs(joint_cdf((0,), [(1, t, a)]).value - poisson.sf(a - 1, t)) < 1e-8
