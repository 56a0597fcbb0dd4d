"""Nested integration contours, quadrature nodes and the z-dependent measure.

Circles carry trapezoid nodes, truncated rays carry composite Gauss-Legendre
nodes.  Every node stores ``point`` and ``base_weight`` where the weight
already includes the parametrization derivative and the 1/(2 pi i) factor, so
that ``sum(w * f(p))`` approximates the contour integral of f dw/(2 pi i).
"""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

LEFT, RIGHT = "L", "R"
BASE, IN, OUT = "base", "in", "out"

TWO_PI_I = 2j * np.pi
LEFT_ANGLE = 2 * np.pi / 3
RIGHT_ANGLE = np.pi / 5


class ContourError(ValueError):
    pass


@dataclass(frozen=True)
class ContourNode:
    point: complex
    base_weight: complex


@dataclass(frozen=True)
class Circle:
    center: float
    radius: float


@dataclass(frozen=True)
class TruncatedRays:
    vertex: float
    angle: float
    truncation_radius: float


@dataclass(frozen=True, eq=False)
class LabeledContour:
    level: int
    side: str
    nesting: str
    shape: object
    points: np.ndarray
    weights: np.ndarray

    @property
    def label(self):
        return (self.level, self.side, self.nesting)

    @property
    def nodes(self):
        return [ContourNode(complex(p), complex(w)) for p, w in zip(self.points, self.weights)]

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True, eq=False)
class ContourFamily:
    m: int
    contours: tuple
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for c in self.contours:
            self._index[c.label] = c

    def get(self, level, side, nesting=None):
        if nesting is None:
            nesting = BASE if level == 1 else None
        if nesting is None:
            raise ContourError("levels >= 2 need an explicit nesting")
        try:
            return self._index[(level, side, nesting)]
        except KeyError:
            raise ContourError(f"no contour {(level, side, nesting)}") from None

    def level_parts(self, level, side):
        """Contours making up Gamma_{level,side}: [base] or [out, in]."""
        if level == 1:
            return [self.get(1, side, BASE)]
        return [self.get(level, side, OUT), self.get(level, side, IN)]


@dataclass(frozen=True, eq=False)
class ZCycle:
    radius: float
    points: np.ndarray
    weights: np.ndarray

    @property
    def nodes(self):
        return [ContourNode(complex(p), complex(w)) for p, w in zip(self.points, self.weights)]


def circle_nodes(center, radius, order):
    """Trapezoid nodes on a counterclockwise circle."""
    theta = 2 * np.pi * (np.arange(order) + 0.5) / order
    e = np.exp(1j * theta)
    pts = center + radius * e
    # dw/(2 pi i) = radius e^{i theta} dtheta / (2 pi)
    wts = radius * e / order
    return pts, wts


def gauss_legendre(a, b, order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def ray_nodes(vertex, angle, R, order, segments=2, breaks=None):
    """Nodes on the two-ray contour through ``vertex``, ``order`` per ray.

    The contour runs in along the ray at angle -angle and out along the ray at
    angle +angle, which is the orientation of both the left and right Gamma
    contours.  Each ray is split into Gauss-Legendre panels graded toward the
    vertex, where the integrands vary fastest.
    """
    if breaks is None:
        breaks = R * np.linspace(0.0, 1.0, segments + 1) ** 1.5
    k = len(breaks) - 1
    counts = [order // k + (1 if i < order % k else 0) for i in range(k)]
    rs, ws = [], []
    for a, b, n in zip(breaks[:-1], breaks[1:], counts):
        r, w = gauss_legendre(a, b, n)
        rs.append(r)
        ws.append(w)
    r = np.concatenate(rs)
    w = np.concatenate(ws)
    lo = np.exp(-1j * angle)
    hi = np.exp(1j * angle)
    pts = np.concatenate([vertex + r[::-1] * lo, vertex + r * hi])
    wts = np.concatenate([-lo * w[::-1], hi * w]) / TWO_PI_I
    return pts, wts


def _nest_values(m, base, spacing, outward_sign):
    """Map (level, nesting) to a radius or vertex position."""
    vals = {(1, BASE): base}
    for lev in range(2, m + 1):
        vals[(lev, OUT)] = base + outward_sign * (lev - 1) * spacing
        vals[(lev, IN)] = base - outward_sign * (lev - 1) * spacing
    return vals


def _labels(m):
    yield 1, BASE
    for lev in range(2, m + 1):
        yield lev, OUT
        yield lev, IN


def build_tasep_contours(m, base_radius=0.25, spacing=0.06, order=64, right_base_radius=None):
    """Circles around -1 (left) and 0 (right) nested as out_m > ... > base > ... > in_m."""
    if m < 1:
        raise ContourError("m must be >= 1")
    if right_base_radius is None:
        right_base_radius = base_radius
    contours = []
    radii_all = {}
    for side, center, rb in ((LEFT, -1.0, base_radius), (RIGHT, 0.0, right_base_radius)):
        radii = _nest_values(m, rb, spacing, +1.0)
        for (lev, nest), r in radii.items():
            if not 0.0 < r < 0.5:
                raise ContourError(f"radius {r:.4g} of contour {(lev, side, nest)} outside (0, 1/2)")
        if m > 1 and spacing <= 0:
            raise ContourError("spacing must be positive")
        radii_all[side] = radii
        for lev, nest in _labels(m):
            r = radii[(lev, nest)]
            pts, wts = circle_nodes(center, r, order)
            contours.append(LabeledContour(lev, side, nest, Circle(center, r), pts, wts))
    if max(radii_all[LEFT].values()) + max(radii_all[RIGHT].values()) >= 1.0:
        raise ContourError("left and right circles intersect (need r_L + r_R < 1)")
    return ContourFamily(m, tuple(contours))


def ray_reach(logw, vertex, angle, floor, cut=40.0, rmax=200.0):
    """Radius beyond which Re logw < -cut on both rays from ``vertex``."""
    r = np.arange(0.0, rmax, 0.125)
    vals = np.real(logw(vertex + r * np.exp(1j * angle)))
    big = np.nonzero(vals >= -cut)[0]
    if big.size and big[-1] == len(r) - 1:
        raise ValueError("contour weight does not decay along the ray")
    # rays are mirror images and the weights have real coefficients
    return max(floor, (r[big[-1]] + 0.5) if big.size else floor)


def build_kpz_contours(m, base_offset=None, spacing=0.35, R=8.0, order=24, segments=2, right_order=None, reach=None):
    """Truncated-ray contours; left at angles +-2pi/3, right at +-pi/5.

    Out-contours sit closer to the imaginary axis than the level-1 contour,
    in-contours farther away.  ``base_offset`` is the distance of the level-1
    vertices from the origin; by default the outermost vertices sit at +-0.5.
    ``order`` is the node count per ray; ``right_order`` overrides it on the
    right contours, whose integrands oscillate faster along the pi/5 rays.
    ``reach(level, side, vertex, angle)``, if given, returns the ray length of
    each contour in place of ``R``.
    """
    if m < 1:
        raise ContourError("m must be >= 1")
    if R <= 0:
        raise ContourError("truncation radius must be positive")
    if order < 4 * segments:
        raise ContourError("need at least 4 nodes per ray panel")
    if base_offset is None:
        base_offset = 0.5 + (m - 1) * spacing
    if m > 1 and spacing <= 0:
        raise ContourError("vertex collision: spacing must be positive")
    contours = []
    for side, sign, angle in ((LEFT, -1.0, LEFT_ANGLE), (RIGHT, 1.0, RIGHT_ANGLE)):
        # outward = toward the imaginary axis
        verts = _nest_values(m, sign * base_offset, spacing, -sign)
        for (lev, nest), c in verts.items():
            if sign * c <= 0:
                raise ContourError(f"vertex {c:.4g} of contour {(lev, side, nest)} on the wrong half-plane")
        if len(set(np.round(list(verts.values()), 12))) != len(verts):
            raise ContourError("vertex collision")
        for lev, nest in _labels(m):
            c = verts[(lev, nest)]
            q = order if side == LEFT or right_order is None else right_order
            Rc = R if reach is None else reach(lev, side, c, angle)
            pts, wts = ray_nodes(c, angle, Rc, q, segments)
            contours.append(LabeledContour(lev, side, nest, TruncatedRays(c, angle, Rc), pts, wts))
    return ContourFamily(m, tuple(contours))


def z_measure_factor(label, z):
    """Density of d mu_z relative to dw/(2 pi i) on the contour ``label``."""
    level, _side, nesting = label
    if level == 1:
        if nesting != BASE:
            raise ContourError("level-1 contours carry no in/out label")
        return 1.0
    if nesting == BASE:
        raise ContourError("only level 1 has a base contour")
    zl = z[level - 2]
    if nesting == OUT:
        return -zl / (1 - zl)
    if nesting == IN:
        return 1 / (1 - zl)
    raise ContourError(f"unknown nesting {nesting!r}")


def _check_finite(vals):
    vals = np.asarray(vals)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite integrand value at a quadrature node")
    return vals


def contour_integrate(contour, f):
    """Quadrature of f(w) dw/(2 pi i) along ``contour``; f must accept arrays."""
    vals = _check_finite(f(contour.points))
    return complex(np.sum(contour.weights * vals))


def build_z_cycle(radius=0.5, order=32):
    if not 0.0 < radius < 1.0:
        raise ContourError("z-cycle radius must lie in (0, 1)")
    if order < 8:
        raise ContourError("z-cycle needs at least 8 nodes")
    pts, wts = circle_nodes(0.0, radius, order)
    return ZCycle(radius, pts, wts)


def z_cycle_integrate(cycles, g):
    """prod_l oint dz_l / (2 pi i z_l (1 - z_l)) g(z) by the tensor trapezoid rule.

    ``g`` receives a tuple of m-1 complex numbers.
    """
    if len(cycles) == 0:
        return complex(g(()))
    grids = [c.points for c in cycles]
    wgrids = [c.weights / (c.points * (1 - c.points)) for c in cycles]
    total = 0j
    for idx in product(*(range(len(p)) for p in grids)):
        zs = tuple(complex(grids[k][i]) for k, i in enumerate(idx))
        w = 1.0 + 0j
        for k, i in enumerate(idx):
            w *= wgrids[k][i]
        val = complex(g(zs))
        if not np.isfinite(val):
            raise FloatingPointError("non-finite z-integrand")
        total += w * val
    return total
