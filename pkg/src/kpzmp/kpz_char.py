"""Characteristic function chi_h(eta, xi) of a KPZ initial condition.

For multi-narrow-wedge data h = sum theta_k 1{omega = omega_k} - inf elsewhere
(omega decreasing) the Brownian hitting expectations reduce to Gaussian
integrals over the heights s_i at the wedge positions.  They are evaluated
as a chain: the last step of every chain is a closed form in erfc, and the
intermediate steps propagate a sampled function through the heat kernel
restricted to s_i >= theta_i with composite Gauss-Legendre rules.

Two chains exist: the backward one (in eta) runs from a wedge to the wedges
on its left, the forward one (in xi) to the wedges on its right.  chi_mnw
uses only the backward chain; chi_shifted combines both around an arbitrary
anchor and serves as an independent check.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx

from .contours import gauss_legendre


class WedgeError(ValueError):
    pass


@dataclass(frozen=True)
class MultiNarrowWedge:
    wedges: tuple

    def __post_init__(self):
        w = tuple((float(a), float(b)) for a, b in self.wedges)
        if not w:
            raise WedgeError("need at least one wedge")
        for i in range(1, len(w)):
            if not w[i][0] < w[i - 1][0]:
                raise WedgeError("wedge positions must be strictly decreasing (gap <= 0)")
        if not all(math.isfinite(a) and math.isfinite(b) for a, b in w):
            raise WedgeError("wedge data must be finite")
        object.__setattr__(self, "wedges", w)

    @property
    def m(self):
        return len(self.wedges)

    def normalized(self):
        """(h0, alpha, beta) with h0 = h(. + alpha) + beta normalized to (0, 0)."""
        a, t = self.wedges[0]
        h0 = MultiNarrowWedge(tuple((w - a, th - t) for w, th in self.wedges))
        return h0, a, -t

    @property
    def support_half_width(self):
        return max(abs(w) for w, _ in self.wedges)

    @property
    def height_bound(self):
        return max(t for _, t in self.wedges)


@dataclass(frozen=True)
class ChiParams:
    panel_width: float = 0.5
    panel_order: int = 16
    n_sigma: float = 10.0
    dyadic_depth: int = 4
    samples_per_cell: int = 128


def as_mnw(h):
    if isinstance(h, MultiNarrowWedge):
        return h
    return MultiNarrowWedge(tuple(h))


def chi_narrow_wedge(eta, xi):
    return 1.0 / (np.asarray(eta) - np.asarray(xi))


def shift_factor(alpha, beta, eta, xi):
    """chi_h = e^(alpha(eta^2 - xi^2) + beta(xi - eta)) chi_{h(. + alpha) + beta}."""
    return np.exp(alpha * (eta**2 - xi**2) + beta * (xi - eta))


def chi_single_wedge(omega, theta, eta, xi):
    return np.exp(omega * (eta**2 - xi**2) + theta * (eta - xi)) / (eta - xi)


def _heat(g, d):
    """Transition density of Brownian motion with diffusivity 2 over time g."""
    return np.exp(-(d**2) / (4 * g)) / math.sqrt(4 * math.pi * g)


def _exp_erfc(a, z):
    """e^a erfc(z) / 2 without overflow in the intermediate factors."""
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    a, z = np.broadcast_arrays(a, z)
    out = np.empty(a.shape, dtype=complex)
    pos = z.real >= 0
    out[pos] = 0.5 * np.exp(a[pos] - z[pos] ** 2) * erfcx(z[pos])
    neg = ~pos
    out[neg] = 0.5 * np.exp(a[neg]) * erfc(z[neg])
    return out


def _panels(lo, hi, breaks, width, order):
    pts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    xs, ws = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, math.ceil((b - a) / width))
        edges = np.linspace(a, b, n + 1)
        for c, d in zip(edges[:-1], edges[1:]):
            x, w = gauss_legendre(c, d, order)
            xs.append(x)
            ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


class _Layout:
    """Common node grids X_i on [theta_i, top] for every wedge."""

    def __init__(self, wedges, reach, p, extra_gap=None):
        om = np.array([w for w, _ in wedges])
        th = np.array([t for _, t in wedges])
        self.om, self.th = om, th
        total = max(om[0] - om[-1], 1e-3)
        if extra_gap is not None:
            total = total + extra_gap
        gaps = -np.diff(om)
        gmin = min(gaps.min() if gaps.size else total, extra_gap or total)
        self.width = min(p.panel_width, math.sqrt(2 * gmin))
        self.order = p.panel_order
        self.top = th.max() + 2 * total * reach + p.n_sigma * math.sqrt(2 * total) + 1.0
        self.bottom_pad = 2 * total * reach + p.n_sigma * math.sqrt(2 * total) + 1.0
        self.grids = [_panels(t, self.top, [], self.width, self.order) for t in th]


def _reach(etas, xis):
    r = 0.0
    if np.size(etas):
        r += np.max(np.abs(np.real(etas)))
    if np.size(xis):
        r += np.max(np.abs(np.real(xis)))
    return r + 1.0


def _backward(lay, wedges, etas, upto):
    """R_i(b; eta) on X_i for i = upto .. M-1, i.e. the no-hit-at-i continuation."""
    m = len(wedges)
    eta = etas[:, None]
    R = [None] * m
    R[m - 1] = np.zeros((len(etas), len(lay.grids[m - 1][0])), dtype=complex)
    for i in range(m - 2, upto - 1, -1):
        X, _ = lay.grids[i]
        g = wedges[i][0] - wedges[i + 1][0]
        om1, th1 = wedges[i + 1]
        z = (X[None, :] + 2 * g * eta - th1) / (2 * math.sqrt(g))
        val = _exp_erfc(om1 * eta**2 + X[None, :] * eta + g * eta**2, z)
        Xn, Wn = lay.grids[i + 1]
        K = _heat(g, Xn[:, None] - X[None, :])
        val = val + (R[i + 1] * Wn[None, :]) @ K
        R[i] = val
    return R


def _forward(lay, wedges, xis, upto):
    """R+_i(b; xi) on X_i for i = 0 .. upto, the no-hit-at-i continuation to the right."""
    xi = xis[:, None]
    R = [None] * len(wedges)
    R[0] = np.zeros((len(xis), len(lay.grids[0][0])), dtype=complex)
    for i in range(1, upto + 1):
        X, _ = lay.grids[i]
        h = wedges[i - 1][0] - wedges[i][0]
        om1, th1 = wedges[i - 1]
        z = (X[None, :] - 2 * h * xi - th1) / (2 * math.sqrt(h))
        val = _exp_erfc(-om1 * xi**2 - X[None, :] * xi + h * xi**2, z)
        Xp, Wp = lay.grids[i - 1]
        K = _heat(h, Xp[:, None] - X[None, :])
        val = val + (R[i - 1] * Wp[None, :]) @ K
        R[i] = val
    return R


def _pole(om, th, eta, xi):
    return np.exp(om * (eta**2 - xi**2) + th * (eta - xi)) / (eta - xi)


def _term_left(lay, wedges, R, j, etas, xis):
    # e^{-a xi^2} int e^{-s xi} E^-(a, s) ds for the first wedge j left of a
    om, th = wedges[j]
    X, W = lay.grids[j]
    E = np.exp(-np.outer(X, xis) - om * xis[None, :] ** 2)
    return _pole(om, th, etas[:, None], xis[None, :]) + (R[j] * W[None, :]) @ E


def _term_right(lay, wedges, Rp, k, etas, xis):
    # e^{a eta^2} int e^{s eta} E^+(a, s) ds for the first wedge k right of a
    om, th = wedges[k]
    X, W = lay.grids[k]
    E = np.exp(np.outer(etas, X) + om * etas[:, None] ** 2)
    return _pole(om, th, etas[:, None], xis[None, :]) + E @ (Rp[k] * W[None, :]).T


def _chi_normalized(wedges, etas, xis, p):
    etas = np.atleast_1d(np.asarray(etas, dtype=complex))
    xis = np.atleast_1d(np.asarray(xis, dtype=complex))
    if len(wedges) == 1:
        return 1.0 / (etas[:, None] - xis[None, :])
    lay = _Layout(wedges, _reach(etas, xis), p)
    R = _backward(lay, wedges, etas, 0)
    return _term_left(lay, wedges, R, 0, etas, xis)


def _check_domain(etas, xis):
    if np.any(np.real(etas) <= 0) or np.any(np.real(xis) >= 0):
        raise ValueError("need Re(eta) > 0 and Re(xi) < 0")


def chi_mnw_matrix(h, etas, xis, p=None):
    """[chi_h(eta_i, xi_j)] for multi-narrow-wedge h."""
    p = p or ChiParams()
    h = as_mnw(h)
    etas = np.atleast_1d(np.asarray(etas, dtype=complex)).ravel()
    xis = np.atleast_1d(np.asarray(xis, dtype=complex)).ravel()
    _check_domain(etas, xis)
    h0, alpha, beta = h.normalized()
    base = _chi_normalized(h0.wedges, etas, xis, p)
    return shift_factor(alpha, beta, etas[:, None], xis[None, :]) * base


def chi_mnw(h, eta, xi, p=None):
    return complex(chi_mnw_matrix(h, [eta], [xi], p)[0, 0])


def chi_shifted_matrix(h, a, etas, xis, p=None):
    """chi_h from Brownian motions started at time a (three-term form)."""
    p = p or ChiParams()
    h = as_mnw(h)
    etas = np.atleast_1d(np.asarray(etas, dtype=complex)).ravel()
    xis = np.atleast_1d(np.asarray(xis, dtype=complex)).ravel()
    _check_domain(etas, xis)
    h0, alpha, beta = h.normalized()
    wedges = h0.wedges
    a = float(a) - alpha
    om = [w for w, _ in wedges]
    left = [i for i in range(len(om)) if om[i] <= a]
    right = [i for i in range(len(om)) if om[i] >= a]
    j = left[0] if left else None
    k = right[-1] if right else None
    gaps = []
    if j is not None and om[j] < a:
        gaps.append(a - om[j])
    if k is not None and om[k] > a:
        gaps.append(om[k] - a)
    span = max(om) - min(om) + (max(gaps) if gaps else 0.0)
    lay = _Layout(wedges, _reach(etas, xis), p, extra_gap=(min(gaps) if gaps else None))
    lay_total = max(span, 1e-3)
    ee, xx = etas[:, None], xis[None, :]

    R = _backward(lay, wedges, etas, j) if j is not None else None
    Rp = _forward(lay, wedges, xis, k) if k is not None else None
    t1 = _term_right(lay, wedges, Rp, k, etas, xis) if k is not None else 0.0
    t2 = _term_left(lay, wedges, R, j, etas, xis) if j is not None else 0.0
    if j is None or k is None:
        t3 = 0.0
    elif j == k:
        X, W = lay.grids[j]
        t3 = _pole(*wedges[j], ee, xx) + (R[j] * W[None, :]) @ Rp[j].T
    else:
        gl, gr = a - om[j], om[k] - a
        thj, thk = wedges[j][1], wedges[k][1]
        reach = _reach(etas, xis)
        s_lo = min(thj, thk) - 2 * lay_total * reach - p.n_sigma * math.sqrt(2 * lay_total) - 1.0
        s_hi = lay.top
        S, WS = _panels(s_lo, s_hi, [thj, thk], lay.width, lay.order)
        # E^-(a, s; eta): hit at wedge j in closed form plus continuation
        zj = (S[None, :] + 2 * gl * ee - thj) / (2 * math.sqrt(gl))
        Em = _exp_erfc(a * ee**2 + S[None, :] * ee, zj)
        Xj, Wj = lay.grids[j]
        Em = Em + (R[j] * Wj[None, :]) @ _heat(gl, Xj[:, None] - S[None, :])
        xc = xis[:, None]
        zk = (S[None, :] - 2 * gr * xc - thk) / (2 * math.sqrt(gr))
        Ep = _exp_erfc(-a * xc**2 - S[None, :] * xc, zk)
        Xk, Wk = lay.grids[k]
        Ep = Ep + (Rp[k] * Wk[None, :]) @ _heat(gr, Xk[:, None] - S[None, :])
        tail = np.exp(a * (ee**2 - xx**2) + s_lo * (ee - xx)) / (ee - xx)
        t3 = tail + (Em * WS[None, :]) @ Ep.T
    val = t1 + t2 - t3
    return shift_factor(alpha, beta, ee, xx) * val


def chi_shifted(h, a, eta, xi, p=None):
    return complex(chi_shifted_matrix(h, a, [eta], [xi], p)[0, 0])


def heat_shift_identity_check(w, t, r, order=64):
    """(lhs, rhs) of int e^{s w} p_t(r - s) ds = e^{t w^2 + r w}."""
    w = complex(w)
    if not t > 0:
        raise ValueError("t must be positive")
    center = r + 2 * t * w.real
    half = 2 * t * abs(w.imag) + 14 * math.sqrt(2 * t) + 1.0
    width = min(0.5, math.sqrt(2 * t))
    s, ws = _panels(center - half, center + half, [], width, order // 4 if order >= 16 else order)
    lhs = complex(np.sum(ws * np.exp(s * w) * _heat(t, r - s)))
    rhs = complex(np.exp(t * w * w + r * w))
    return lhs, rhs


def verify_bound(L, beta, eta, xi, value):
    """Check |chi| against the Gaussian-type a priori bound for supp in [-L, L], h <= beta."""
    eta, xi = complex(eta), complex(xi)
    if eta.real <= 0 or xi.real >= 0:
        raise ValueError("need Re(eta) > 0 and Re(xi) < 0")
    expo = (beta + 1) * (eta - xi).real + 2 * L * (abs(xi) ** 2 + abs(eta) ** 2)
    poly = 2 / eta.real + 2 / (-xi.real) + 8 * L + 2**2.5 * L**1.5 / math.sqrt(math.pi)
    return bool(abs(value) <= math.exp(expo) * poly * (1 + 1e-12))


# general compactly supported data


@dataclass(frozen=True, eq=False)
class CompactUC:
    """Upper semicontinuous h, -inf outside [-L, L], bounded above by beta_max.

    ``candidates`` lists points that must be tested in addition to the
    regular samples (isolated atoms such as narrow wedges).
    """

    support_half_width: float
    height_bound: float
    evaluator: object
    candidates: tuple = ()


def dyadic_mnw(h, depth, samples_per_cell=128):
    """One wedge per dyadic cell of [-L, L] at a sampled argmax."""
    L = float(h.support_half_width)
    cells = 2**depth
    edges = np.linspace(-L, L, cells + 1)
    found = {}
    for c in range(cells):
        lo, hi = edges[c], edges[c + 1]
        xs = list(np.linspace(lo, hi, samples_per_cell + 2))
        xs += [x for x in h.candidates if lo <= x <= hi]
        best_x, best_v = None, -math.inf
        for x in xs:
            v = float(h.evaluator(float(x)))
            if v > h.height_bound + 1e-12:
                raise WedgeError(f"evaluator exceeds the declared height bound at x = {x}")
            if v > best_v:
                best_x, best_v = float(x), v
        if best_v > -math.inf:
            key = round(best_x, 12)
            if key not in found or found[key] < best_v:
                found[key] = best_v
    if not found:
        raise WedgeError("initial condition is identically -inf on the samples")
    wedges = sorted(found.items(), key=lambda kv: -kv[0])
    return MultiNarrowWedge(tuple(wedges))


def chi_uc(h, eta, xi, p=None):
    """chi of the depth-n dyadic approximant and the increment from depth n-1."""
    p = p or ChiParams()
    n = p.dyadic_depth
    if n < 1:
        raise ValueError("dyadic depth must be >= 1")
    cur = chi_mnw(dyadic_mnw(h, n, p.samples_per_cell), eta, xi, p)
    prev = chi_mnw(dyadic_mnw(h, n - 1, p.samples_per_cell), eta, xi, p)
    return cur, abs(cur - prev)
