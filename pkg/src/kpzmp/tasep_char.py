"""TASEP characteristic function from the geometric random walk hitting problem.

The walk G starts at z, jumps down to x < G with probability 2^(x-G), and
stops at tau = min{m : G_m > y_(m+1)}.  The characteristic function is

    ch_Y(v, u) = sum_z (2u+2)^z E_z[ 2 (2v+2)^(-G_tau-1) (-v/(v+1))^tau ; tau < N ].

Only the finitely many start points y_N < z <= y_1 need the walk; above y_1
the sum is geometric and is done in closed form.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _backend
from .contours import circle_nodes


class InitialConditionError(ValueError):
    pass


@dataclass(frozen=True)
class TasepInitial:
    y: tuple

    def __post_init__(self):
        y = tuple(int(t) for t in self.y)
        if len(y) < 1:
            raise InitialConditionError("need at least one particle")
        if any(a <= b for a, b in zip(y, y[1:])):
            raise InitialConditionError(f"positions must be strictly decreasing, got {y}")
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return len(self.y)

    @classmethod
    def step(cls, n):
        return cls(tuple(range(-1, -n - 1, -1)))


def as_initial(y):
    return y if isinstance(y, TasepInitial) else TasepInitial(tuple(y))


@dataclass(frozen=True, eq=False)
class HittingTable:
    """values(z, m) = E[2 (2v+2)^(-G_tau-1) (-v/(v+1))^tau ; tau < N | G_m = z].

    Stored rescaled as w[m, z - y_N - 1] = values(z, m) (2v+2)^(z+1) for
    y_N < z <= y_1, which keeps the entries of order one.
    """

    init: TasepInitial
    v: complex
    w: np.ndarray

    def value(self, z, m):
        y = self.init.y
        if not 0 <= m < len(y):
            raise IndexError("step m out of range")
        if z <= y[-1]:
            return 0j
        if z > y[0]:
            return 2 * (-self.v / (self.v + 1)) ** m / (2 * self.v + 2) ** (z + 1)
        return complex(self.w[m, z - y[-1] - 1]) / (2 * self.v + 2) ** (z + 1)


def build_hitting_table(y, v):
    init = as_initial(y)
    v = complex(v)
    w = _backend.kernels.hitting_table_w(np.array(init.y, dtype=np.int64), v)
    return HittingTable(init, v, w)


def _check_args(v, u):
    if u == -1:
        raise ValueError("u = -1 is a singular point of ch")
    if v == u:
        raise ValueError("v = u is a pole of ch")
    if abs(u + 1) >= abs(v + 1):
        raise ValueError("need |u+1| < |v+1| for the closed-form tail")


def ch_eval(y, v, u):
    init = as_initial(y)
    v, u = complex(v), complex(u)
    _check_args(v, u)
    return complex(ch_matrix(init, [v], [u])[0, 0])


def ch_matrix(y, vs, us):
    """Matrix ch_Y(vs[i], us[j]); preconditions are checked on every pair."""
    init = as_initial(y)
    vs = np.asarray(vs, dtype=complex).ravel()
    us = np.asarray(us, dtype=complex).ravel()
    if np.any(us == -1):
        raise ValueError("u = -1 is a singular point of ch")
    if vs.size and us.size:
        if np.max(np.abs(us + 1)) >= np.min(np.abs(vs + 1)):
            raise ValueError("need |u+1| < |v+1| for the closed-form tail")
    out = _backend.kernels.ch_matrix(np.array(init.y, dtype=np.int64), vs, us)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("ch evaluation overflowed")
    return out


def verify_residue(y, u, i, circle_order=128, radius=0.3):
    """LHS - RHS of  oint_0 v^-i (v+1)^(y_i+i) ch(v,u) dv/2pi i = -u^-i (u+1)^(y_i+i)."""
    init = as_initial(y)
    if not 1 <= i <= init.n:
        raise IndexError("need 1 <= i <= N")
    u = complex(u)
    yi = init.y[i - 1]
    pts, wts = circle_nodes(0.0, radius, circle_order)
    ch = ch_matrix(init, pts, [u])[:, 0]
    lhs = np.sum(wts * pts ** (-i) * (pts + 1) ** (yi + i) * ch)
    rhs = -(u ** (-i)) * (u + 1) ** (yi + i)
    return complex(lhs - rhs)


def _comb(n, k):
    if k < 0 or n < k:
        return 0
    return math.comb(n, k)


def binom_identity_check(y, z, i):
    """Both sides of the induction identity, in exact rational arithmetic.

    lhs = 2^z E_z[-C(G_tau - y_i - 1, i - tau - 1) 2^(-G_tau) ; tau < i]
    rhs = -1{z >= y_i + i} C(z - y_i - 1, i - 1)
    """
    init = as_initial(y)
    yy = init.y
    n = init.n
    if not 1 <= i <= n:
        raise IndexError("need 1 <= i <= N")
    yi = yy[i - 1]
    lo = yy[-1] + 1

    memo = {}

    def g(x, m):
        # expectation given G_m = x
        key = (x, m)
        if key in memo:
            return memo[key]
        if x > yy[m]:
            val = -_comb(x - yi - 1, i - m - 1) / Fraction(2) ** x if m < i else Fraction(0)
        elif m + 1 >= i or x < lo:
            val = Fraction(0)
        else:
            val = sum((g(xp, m + 1) / 2 ** (x - xp) for xp in range(lo, x)), Fraction(0))
        memo[key] = val
        return val

    lhs = Fraction(2) ** z * g(z, 0) if z >= lo else Fraction(0)
    rhs = -_comb(z - yi - 1, i - 1) if z >= yi + i else 0
    return lhs, Fraction(rhs)
