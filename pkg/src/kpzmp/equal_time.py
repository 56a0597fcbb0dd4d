"""Equal-time multipoint distribution of the KPZ fixed point as a Fredholm determinant.

Two discretizations of the same probability:

* ``fredholm_new``: det(I + T) on {1..m} x Gamma_{1,R}, the nested xi
  integrals running over truncated rays;
* ``fredholm_mqr``: det(I + S) on the real line, with the nested xi integrals
  on vertical lines c_l + iR.

``tw_gue`` is an independent Airy-kernel determinant used as the m = 1 oracle.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import airy as _scipy_airy

from .contours import (
    ray_reach,
    IN,
    LEFT,
    LEFT_ANGLE,
    RIGHT,
    RIGHT_ANGLE,
    LabeledContour,
    TruncatedRays,
    build_kpz_contours,
    gauss_legendre,
    ray_nodes,
)
from .kpz_char import _panels
from .kpz_multipoint import chi_handle
from .tasep_multipoint import QueryError, ToleranceError


@dataclass(frozen=True)
class EqualTimeQuery:
    alphas: tuple
    betas: tuple

    def __post_init__(self):
        a = tuple(float(x) for x in self.alphas)
        b = tuple(float(x) for x in self.betas)
        if not a or len(a) != len(b):
            raise QueryError("need matching, nonempty alpha and beta lists")
        if any(y <= x for x, y in zip(a, a[1:])):
            raise QueryError("alphas must be strictly increasing at equal times")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "betas", b)

    @property
    def m(self):
        return len(self.alphas)

    def log_F(self, i, z):
        """log F_i: the level-i factor, cubic only at level 1."""
        z = np.asarray(z, dtype=complex)
        if i == 1:
            return -(z**3) / 3 + self.alphas[0] * z**2 + self.betas[0] * z
        da = self.alphas[i - 1] - self.alphas[i - 2]
        db = self.betas[i - 1] - self.betas[i - 2]
        return da * z**2 + db * z

    def log_f(self, j, z):
        z = np.asarray(z, dtype=complex)
        return -(z**3) / 3 + self.alphas[j - 1] * z**2 + self.betas[j - 1] * z


def as_equal_time(q):
    if isinstance(q, EqualTimeQuery):
        return q
    q = list(q)
    return EqualTimeQuery(tuple(a for a, _ in q), tuple(b for _, b in q))


@dataclass(frozen=True)
class EqualTimeParams:
    ray_order: int = 96
    right_ray_order: int = 320
    R: float = 8.0
    segments: int = 4
    spacing: float = 0.35
    vertex: float = 0.5
    grid_half_width: float = 10.0
    grid_panel: float = 0.25
    grid_order: int = 12
    line_spacing: float = 0.3
    line_half_height: float = 12.0
    line_panel: float = 0.2
    line_order: int = 12


def _shift_of(chi):
    w = getattr(chi, "wedges", None)
    return tuple(w[0]) if w else (0.0, 0.0)


class _Contours:
    """Gamma_{1,L}, the nested Gamma^in_{l,L} and Gamma_{1,R}.

    Level-1 rays are extended past R when the quadratic factors of the query
    and of the wedge shift slow down the cubic decay.  The nested contours
    only carry the Gaussian factors F_l, so each is cut where its own F_l is
    negligible.  Node counts scale with length to keep the density of R.
    """

    def __init__(self, m, p, q=None, shift=(0.0, 0.0)):
        # only Gamma_{1,L}, the in-contours and Gamma_{1,R} enter, so the
        # level-1 vertices stay at +-vertex whatever m is; pushing them out
        # inflates e^{-f_j} on the pi/5 rays and costs digits
        v = p.vertex
        fam = build_kpz_contours(
            1, base_offset=v, R=p.R, order=p.ray_order, segments=p.segments, right_order=p.right_ray_order
        )
        c1 = fam.get(1, LEFT)
        self.right = fam.get(1, RIGHT)
        RL = RR = p.R
        if q is not None:
            om, th = shift
            RL = ray_reach(lambda x: q.log_F(1, x) - om * x * x - th * x, c1.shape.vertex, LEFT_ANGLE, p.R)
            RR = max(
                ray_reach(lambda x: -q.log_f(j, x) + om * x * x + th * x, self.right.shape.vertex, RIGHT_ANGLE, p.R)
                for j in range(1, m + 1)
            )
        if RL > p.R:
            c1 = _rays(c1, LEFT_ANGLE, RL, math.ceil(p.ray_order * RL / p.R), p.segments)
        self.left = [c1]
        for lev in range(2, m + 1):
            vert = -v - (lev - 1) * p.spacing
            R = p.R
            if q is not None:
                da = q.alphas[lev - 1] - q.alphas[lev - 2]
                db = q.betas[lev - 1] - q.betas[lev - 2]
                R = ray_reach(lambda x: da * x * x + db * x, vert, LEFT_ANGLE, p.R)
            pts, wts = ray_nodes(vert, LEFT_ANGLE, R, math.ceil(p.ray_order * R / p.R), p.segments)
            self.left.append(LabeledContour(lev, LEFT, IN, TruncatedRays(vert, LEFT_ANGLE, R), pts, wts))
        if RR > p.R:
            self.right = _rays(self.right, RIGHT_ANGLE, RR, math.ceil(p.right_ray_order * RR / p.R), p.segments)


def _rays(c, angle, R, order, segments):
    pts, wts = ray_nodes(c.shape.vertex, angle, R, order, segments)
    return LabeledContour(c.level, c.side, c.nesting, TruncatedRays(c.shape.vertex, angle, R), pts, wts)


def _chain(q, nodes, level_to):
    """M_1 M_2 ... M_{i-1}: weighted Cauchy chain from xi_1 to xi_i.

    ``nodes[l]`` holds (points, weights) of the level-(l+1) xi contour; the
    result maps level-1 points to level-i points with the weights and F
    factors of levels 2..i folded in.
    """
    acc = None
    for lev in range(2, level_to + 1):
        a_pts = nodes[lev - 2][0]
        b_pts, b_w = nodes[lev - 1]
        step = (b_w * np.exp(q.log_F(lev, b_pts)))[None, :] / (a_pts[:, None] - b_pts[None, :])
        acc = step if acc is None else acc @ step
    return acc


def t_kernel_matrix(q, chi, p=None, contours=None):
    """Blocks T[(i, a), (j, b)] = T(i, zeta_a; j, eta_b) on the Gamma_{1,R} nodes."""
    p = p or EqualTimeParams()
    q = as_equal_time(q)
    c = contours or _Contours(q.m, p, q, _shift_of(chi))
    chi = chi_handle(chi)
    eta = c.right.points
    xi1, w1 = c.left[0].points, c.left[0].weights
    X = chi(eta, xi1)  # (eta, xi1)
    A = X * (w1 * np.exp(q.log_F(1, xi1)))[None, :]
    nodes = [(cc.points, cc.weights) for cc in c.left]
    n = len(eta)
    T = np.zeros((q.m * n, q.m * n), dtype=complex)
    for i in range(1, q.m + 1):
        last = nodes[i - 1][0]
        C = 1.0 / (last[:, None] - eta[None, :])  # (xi_i, zeta)
        chain = _chain(q, nodes, i)
        R = C if chain is None else chain @ C  # (xi1, zeta)
        base = (A @ R).T  # (zeta, eta)
        for j in range(1, q.m + 1):
            T[(i - 1) * n : i * n, (j - 1) * n : j * n] = base * np.exp(-q.log_f(j, eta))[None, :]
    return T, c


def t_kernel(i, zeta, j, eta, q, chi, p=None):
    """Single value T(i, zeta; j, eta) for points zeta, eta right of the left contours."""
    p = p or EqualTimeParams()
    q = as_equal_time(q)
    if not (1 <= i <= q.m and 1 <= j <= q.m):
        raise IndexError("level out of range")
    c = _Contours(q.m, p, q, _shift_of(chi))
    chi = chi_handle(chi)
    xi1, w1 = c.left[0].points, c.left[0].weights
    if max(np.real(xi1[np.abs(np.imag(xi1)) < 1e-12]), default=-1) >= np.real(zeta):
        raise ValueError("zeta must lie to the right of the left contours")
    nodes = [(cc.points, cc.weights) for cc in c.left]
    x = chi(np.array([eta]), xi1)[0] * w1 * np.exp(q.log_F(1, xi1))
    last = nodes[i - 1][0]
    C = 1.0 / (last - zeta)
    chain = _chain(q, nodes, i)
    r = C if chain is None else chain @ C
    return complex(np.sum(x * r) * np.exp(-q.log_f(j, eta)))


def _real_det(M, what):
    d = np.linalg.det(M)
    if abs(d.imag) > 1e-8:
        raise ToleranceError(f"{what}: imaginary residue {abs(d.imag):.3g}")
    return float(d.real)


def fredholm_new(q, chi, p=None):
    """det(I + T) with square-root weight symmetrization."""
    p = p or EqualTimeParams()
    q = as_equal_time(q)
    T, c = t_kernel_matrix(q, chi, p)
    w = np.tile(c.right.weights, q.m)
    s = np.sqrt(w)
    M = np.eye(len(w)) + s[:, None] * T * s[None, :]
    return _real_det(M, "fredholm_new")


# MQR path-integral form


def k_hypo(p_, q_, alpha1, chi, params=None):
    """Double contour integral of e^{-xi^3/3+alpha1 xi^2+q xi} / e^{-eta^3/3+alpha1 eta^2+p eta} chi."""
    params = params or EqualTimeParams()
    c = _Contours(1, params)
    chi = chi_handle(chi)
    xi, wx = c.left[0].points, c.left[0].weights
    eta, we = c.right.points, c.right.weights
    fx = wx * np.exp(-(xi**3) / 3 + alpha1 * xi**2 + q_ * xi)
    fe = we * np.exp(eta**3 / 3 - alpha1 * eta**2 - p_ * eta)
    return complex(fe @ chi(eta, xi) @ fx)


def _vertical_line(c, half, width, order):
    y, w = _panels(-half, half, [], width, order)
    return c + 1j * y, w / (2 * math.pi)


def _real_grid(p):
    W = p.grid_half_width
    return _panels(-W, W, [0.0], p.grid_panel, p.grid_order)


def s_hat_matrix(q, chi, p=None, grid=None):
    """S-hat(lambda_k, mu_l) on a real grid with nested xi's on vertical lines.

    S-hat(lambda, mu) = S(mu + beta_1, lambda + beta_1); the first term lives on
    mu > 0, the nested terms i >= 2 on mu <= 0.
    """
    p = p or EqualTimeParams()
    q = as_equal_time(q)
    c = _Contours(1, p, q, _shift_of(chi))
    chi = chi_handle(chi)
    lam, wl = grid if grid is not None else _real_grid(p)
    xi1, w1 = c.left[0].points, c.left[0].weights
    eta, we = c.right.points, c.right.weights
    # A[lambda, eta] = int F_1(xi) e^{lambda xi} chi(eta, xi)
    X = chi(eta, xi1)
    A = (np.exp(np.outer(lam, xi1)) * (w1 * np.exp(q.log_F(1, xi1)))[None, :]) @ X.T
    A = A * we[None, :]
    pos = lam > 0
    S = np.zeros((len(lam), len(lam)), dtype=complex)
    first = A * np.exp(-q.log_f(1, eta))[None, :]
    S[:, pos] = -first @ np.exp(-np.outer(eta, lam[pos]))
    if q.m >= 2:
        lines = []
        for lev in range(2, q.m + 1):
            cl = -p.line_spacing * lev
            da = q.alphas[lev - 1] - q.alphas[lev - 2]
            db = q.betas[lev - 1] - q.betas[lev - 2]
            half = max(p.line_half_height, math.sqrt((40.0 + da * cl * cl + abs(db * cl)) / da))
            lines.append(_vertical_line(cl, half, p.line_panel, p.line_order))
        neg = ~pos
        for i in range(2, q.m + 1):
            # chain from xi_2 to xi_i on the lines, then 1/(xi_i - eta)
            x2, w2 = lines[0]
            head = (w2 * np.exp(q.log_F(2, x2)))[:, None] * np.exp(-np.outer(x2, lam[neg]))  # (xi2, mu)
            acc = None
            for lev in range(3, i + 1):
                a_pts = lines[lev - 3][0]
                b_pts, b_w = lines[lev - 2]
                step = (b_w * np.exp(q.log_F(lev, b_pts)))[None, :] / (a_pts[:, None] - b_pts[None, :])
                acc = step if acc is None else acc @ step
            last = lines[i - 2][0]
            tail = 1.0 / (last[:, None] - eta[None, :])  # (xi_i, eta)
            mid = tail if acc is None else acc @ tail  # (xi2, eta)
            B = mid.T @ head  # (eta, mu)
            S[:, neg] += (A * np.exp(-q.log_f(i, eta))[None, :]) @ B
    return S, lam, wl


def s_kernel(lam, mu, q, chi, p=None):
    """S(lambda, mu) of the path-integral form at one pair of real points."""
    q = as_equal_time(q)
    b1 = q.betas[0]
    grid = (np.array([mu - b1, lam - b1]), np.ones(2))
    S, _, _ = s_hat_matrix(q, chi, p, grid)
    return complex(S[0, 1])


def fredholm_mqr(q, chi, p=None):
    p = p or EqualTimeParams()
    q = as_equal_time(q)
    S, lam, wl = s_hat_matrix(q, chi, p)
    s = np.sqrt(wl)
    M = np.eye(len(lam)) + s[:, None] * S * s[None, :]
    return _real_det(M, "fredholm_mqr")


# Airy function and the GUE Tracy-Widom distribution


def airy(x, order=96, R=10.0):
    """Ai(x) from int e^{-xi^3/3 + x xi} d xi / 2 pi i over the left contour."""
    pts, wts = ray_nodes(-0.5, LEFT_ANGLE, R, order, segments=4)
    x = np.asarray(x, dtype=float)
    val = np.exp(-(pts[None, :] ** 3) / 3 + np.multiply.outer(x.ravel(), pts)) @ wts
    out = val.real.reshape(x.shape)
    return float(out) if out.ndim == 0 else out


def airy_series(x, terms=120):
    """Maclaurin series of Ai; accurate for moderate |x|."""
    c1 = 3 ** (-2 / 3) / math.gamma(2 / 3)
    c2 = 3 ** (-1 / 3) / math.gamma(1 / 3)
    x = np.asarray(x, dtype=float)
    f, g = np.ones_like(x), x.copy()
    sf, sg = f, g
    for k in range(1, terms):
        f = f * x**3 / ((3 * k - 1) * (3 * k))
        g = g * x**3 / ((3 * k) * (3 * k + 1))
        sf = sf + f
        sg = sg + g
    return c1 * sf - c2 * sg


def tw_gue(beta, order=80):
    """F_GUE(beta) = det(I - K_Ai) on (beta, inf), x = beta + log(1/(1-u))."""
    u, w = gauss_legendre(0.0, 1.0, order)
    x = beta - np.log1p(-u)
    w = w / (1 - u)
    ai, aip, _, _ = _scipy_airy(x)
    d = x[:, None] - x[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (ai[:, None] * aip[None, :] - aip[:, None] * ai[None, :]) / d
    K[np.diag_indices_from(K)] = aip**2 - x * ai**2
    s = np.sqrt(w)
    return float(np.linalg.det(np.eye(order) - s[:, None] * K * s[None, :]))
