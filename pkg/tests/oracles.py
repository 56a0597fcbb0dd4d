"""Independent reference computations used by the tests."""

import math

import numpy as np


def brute_ch(y, v, u):
    """ch_Y(v, u) by enumerating every walk path.

    From a start z <= y_1 the walk is strictly decreasing and can only stop
    at a site above y_N, so all contributing paths live in (y_N, y_1].
    Starts above y_1 stop at once and sum to a geometric series.
    """
    y = tuple(y)
    n = len(y)
    v, u = complex(v), complex(u)
    stop = lambda g, m: 2 * (2 * v + 2) ** (-g - 1) * (-v / (v + 1)) ** m

    def paths(g, m, prob):
        # G_m = g has not stopped yet; try every next site
        if m >= n:
            return 0j
        if g > y[m]:
            return prob * stop(g, m)
        total = 0j
        for nxt in range(g - 1, y[-1], -1):
            total += paths(nxt, m + 1, prob * 2.0 ** (nxt - g))
        return total

    total = 0j
    for z in range(y[-1] + 1, y[0] + 1):
        total += (2 * u + 2) ** z * paths(z, 0, 1.0)
    r = (u + 1) / (v + 1)
    total += 2 / (2 * v + 2) * r ** (y[0] + 1) / (1 - r)
    return total


def chi_two_wedge_box(w1, t1, eta, xi, n=200):
    """chi for wedges (0, 0), (w1, t1) at real eta > 0 > xi by 2D quadrature.

    chi - 1/(eta - xi) = int_0^inf db e^{b(eta - xi)} P(t1 + sqrt(2g) Z > b + 2 g eta),
    g = -w1, with the probability written as a Gaussian integral over s; the
    (b, s) box is cut where the integrand is below 1e-18.
    """
    g = -w1
    c = eta - xi
    sd = math.sqrt(2 * g)
    x, w = np.polynomial.legendre.leggauss(n)
    # b-range: the Gaussian tail beats e^{bc} once b is large
    bmax = max(0.0, t1 - 2 * g * eta) + 2 * g * c + 10 * sd + 5.0
    bs, bw = _map(x, w, 0.0, bmax)
    total = 0.0
    for b, wb in zip(bs, bw):
        lo = b + 2 * g * eta
        hi = max(lo, t1) + 12 * sd
        ss, sw = _map(x, w, lo, hi)
        dens = np.exp(-((ss - t1) ** 2) / (2 * sd * sd)) / (sd * math.sqrt(2 * math.pi))
        total += wb * math.exp(b * c) * np.dot(sw, dens)
    return 1 / c + total


def _map(x, w, a, b):
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w
