"""Term-by-term evaluation of the determinant series shared by TASEP and KPZ.

A term of order n = (n_1, ..., n_m) integrates, over left variables U^(l) and
right variables V^(l), the product

    det[ch(v_i^1, u_j^1)] * prod_{l<m} C(U^l + V^(l+1); V^l + U^(l+1)) * C(U^m; V^m)

against weights f_l(u)/f_l(v).  Every variable is a row of exactly one of
these determinants and a column of exactly one, so expanding all of them
turns the product into a signed sum over permutations of the variables,
and the integral of each summand factors into traces over its cycles.  The
traces only depend on which contour each variable sits on and are cached.
The value is the exact tensor-product quadrature of the term, at a cost
polynomial in the node count.

Left and right variables of level >= 2 live on an out and an in contour with
z-dependent densities a = -z/(1-z) and b = 1/(1-z).  By symmetry the integral
only depends on how many variables of each level sit on the out contour, so
a term is stored as polynomial coefficients in (a_l, b_l).
"""

import math
from itertools import permutations, product

import numpy as np

from .contours import BASE, IN, OUT


def _perm_sign(p):
    p = list(p)
    sign = 1
    seen = [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _perms_with_sign(n):
    return [(p, _perm_sign(p)) for p in permutations(range(n))]


def _min_rotation(seq):
    k = len(seq)
    return min(tuple(seq[i:] + seq[:i]) for i in range(k))


class SeriesEngine:
    """Cycle-trace evaluator for one query list and one contour family.

    ``nodes`` maps a node-set key (kind, level, nesting) with kind 'u' (left)
    or 'v' (right) to (points, weights); weights must already contain the
    base quadrature weight times f_l (for u) or 1/f_l (for v).
    ``char`` returns the matrix [ch(v_i, u_j)] for level-1 right points v and
    level-1 left points u.  ``pair_sign`` multiplies the order-n term by
    pair_sign^(n_1+...+n_m) (orientation of the right contours).
    """

    def __init__(self, m, nodes, char, pair_sign=1):
        self.m = m
        self.nodes = nodes
        self.pair_sign = pair_sign
        self._char = char
        self._kern = {}
        self._traces = {}
        self._coef = {}

    # kernel and traces
    def kernel(self, a, b):
        key = (a, b)
        k = self._kern.get(key)
        if k is None:
            pa = self.nodes[a][0]
            pb = self.nodes[b][0]
            if a[0] == "v" and a[1] == 1 and b[0] == "u" and b[1] == 1:
                k = np.asarray(self._char(pa, pb), dtype=complex)
            else:
                k = 1.0 / (pa[:, None] - pb[None, :])
            self._kern[key] = k
        return k

    def trace(self, cycle):
        """sum over nodes of prod_i w(x_i) K(x_i, x_(i+1)) around the cycle."""
        key = _min_rotation(list(cycle))
        val = self._traces.get(key)
        if val is None:
            mat = None
            k = len(key)
            for i in range(k):
                a, b = key[i], key[(i + 1) % k]
                step = self.nodes[a][1][:, None] * self.kernel(a, b)
                mat = step if mat is None else mat @ step
            val = complex(np.trace(mat))
            self._traces[key] = val
        return val

    # one assignment of variables to contours
    def _integral(self, n, setkey):
        """Integral with a fixed contour for every variable.

        ``setkey[(kind, level, idx)]`` is the node-set key of that variable.
        """
        m = self.m
        blocks = []
        if n[0] > 0:
            rows = [("v", 1, i) for i in range(n[0])]
            cols = [("u", 1, j) for j in range(n[0])]
            blocks.append((rows, cols))
        for lev in range(1, m):
            rows = [("u", lev, i) for i in range(n[lev - 1])] + [("v", lev + 1, i) for i in range(n[lev])]
            cols = [("v", lev, i) for i in range(n[lev - 1])] + [("u", lev + 1, i) for i in range(n[lev])]
            if rows:
                blocks.append((rows, cols))
        if n[m - 1] > 0:
            rows = [("u", m, i) for i in range(n[m - 1])]
            cols = [("v", m, i) for i in range(n[m - 1])]
            blocks.append((rows, cols))

        perm_lists = [_perms_with_sign(len(r)) for r, _ in blocks]
        total = 0j
        for choice in product(*perm_lists):
            nxt = {}
            sign = 1
            for (rows, cols), (p, s) in zip(blocks, choice):
                sign *= s
                for i, j in enumerate(p):
                    nxt[rows[i]] = cols[j]
            val = sign + 0j
            seen = set()
            for start in nxt:
                if start in seen:
                    continue
                cyc = []
                x = start
                while x not in seen:
                    seen.add(x)
                    cyc.append(setkey[x])
                    x = nxt[x]
                val *= self.trace(cyc)
                if val == 0:
                    break
            total += val
        return total

    def coefficients(self, n):
        """Map s = (s_2..s_m) -> coefficient of prod a_l^s_l b_l^(2 n_l - s_l).

        s_l counts level-l variables (left and right together) on out contours.
        """
        n = tuple(int(k) for k in n)
        if len(n) != self.m:
            raise ValueError("n must have one entry per level")
        if n in self._coef:
            return self._coef[n]
        coef = {}
        ranges = []
        for lev in range(2, self.m + 1):
            k = n[lev - 1]
            ranges.append([(p, q) for p in range(k + 1) for q in range(k + 1)])
        for pq in product(*ranges):
            setkey = {}
            for i in range(n[0]):
                setkey[("u", 1, i)] = ("u", 1, BASE)
                setkey[("v", 1, i)] = ("v", 1, BASE)
            mult = 1
            s = []
            for lev, (p, q) in zip(range(2, self.m + 1), pq):
                k = n[lev - 1]
                for i in range(k):
                    setkey[("u", lev, i)] = ("u", lev, OUT if i < p else IN)
                    setkey[("v", lev, i)] = ("v", lev, OUT if i < q else IN)
                mult *= math.comb(k, p) * math.comb(k, q)
                s.append(p + q)
            val = mult * self._integral(n, setkey)
            key = tuple(s)
            coef[key] = coef.get(key, 0j) + val
        sgn = self.pair_sign ** sum(n)
        coef = {k: sgn * v for k, v in coef.items()}
        self._coef[n] = coef
        return coef

    def term(self, n, z):
        """D^(n)(z); ``z`` is a sequence of m-1 complex numbers or arrays."""
        n = tuple(int(k) for k in n)
        z = [np.asarray(zz, dtype=complex) for zz in z]
        if len(z) != self.m - 1:
            raise ValueError("need m-1 z values")
        pref = 1.0 + 0j
        for lev in range(self.m - 1):
            pref = pref * (1 - z[lev]) ** n[lev] * (1 - 1 / z[lev]) ** n[lev + 1]
        a = [-zz / (1 - zz) for zz in z]
        b = [1 / (1 - zz) for zz in z]
        total = 0j
        for s, c in self.coefficients(n).items():
            mon = c
            for lev in range(2, self.m + 1):
                k = n[lev - 1]
                sl = s[lev - 2]
                mon = mon * a[lev - 2] ** sl * b[lev - 2] ** (2 * k - sl)
            total = total + mon
        return pref * total


def compositions(total, m):
    """All n in Z_{>=0}^m with n_1+...+n_m = total."""
    if m == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, m - 1):
            yield (first,) + rest


def shell_sum(engine, s, z):
    """sum_{|n| = s} D^(n)(z) / (n!)^2."""
    out = 0j
    for n in compositions(s, engine.m):
        fact = 1
        for k in n:
            fact *= math.factorial(k)
        out = out + engine.term(n, z) / fact**2
    return out


def series_with_shells(engine, cycles, n_total_max):
    """z-integrated series; returns (total, list of integrated shell values)."""
    m = engine.m
    if m == 1:
        shells = [complex(shell_sum(engine, s, [])) for s in range(n_total_max + 1)]
        return sum(shells), shells
    grids = np.meshgrid(*[c.points for c in cycles], indexing="ij")
    wts = np.ones_like(grids[0])
    for k, c in enumerate(cycles):
        wk = c.weights / (c.points * (1 - c.points))
        shape = [1] * len(cycles)
        shape[k] = -1
        wts = wts * wk.reshape(shape)
    shells = []
    for s in range(n_total_max + 1):
        vals = shell_sum(engine, s, grids)
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("non-finite series term")
        shells.append(complex(np.sum(wts * vals)))
    return sum(shells), shells
