"""Random planar domains inside the box [0, 2]^2 and their cutoff fields.

Each domain carries a smooth function that is positive inside, zero on the
boundary and negative (or of mixed sign) outside.  The cutoff ``c`` is that
function inside the domain and 0 elsewhere:

* ellipse:   ``1 - (u/a)^2 - (v/b)^2`` in rotated coordinates ``(u, v)``
* rectangle: ``(x - x_min)(x_max - x)(y - y_min)(y_max - y)``
* triangle:  product of the three edge lines, each oriented positive inside
  (signed distances, so relabelling the vertices leaves ``c`` unchanged)
"""
from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from .errors import UnsupportedOrderError
from .features import make_rng
from .model import FieldValues

BOX = (0.0, 2.0)
SHAPES = ("ellipse", "rectangle", "triangle")


def _xy(x, y):
    return np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))


def _check_order(order):
    if order not in (0, 1, 2):
        raise UnsupportedOrderError(f"order must be 0, 1 or 2, got {order}")


def _linear_product(normals, offsets, x, y, order):
    """Value/gradient/Hessian of ``prod_i (n_i . (x, y) + o_i)``."""
    X = np.stack([x.ravel(), y.ravel()], axis=1)
    L = X @ normals.T + offsets                      # (n, F)
    F = L.shape[1]
    val = np.prod(L, axis=1)
    grad = hess = None
    if order >= 1:
        # product of all factors except i
        others = np.stack([np.prod(np.delete(L, i, axis=1), axis=1) for i in range(F)], axis=1)
        grad = others @ normals
    if order >= 2:
        hess = np.zeros((X.shape[0], 2, 2))
        for i in range(F):
            for j in range(F):
                if i == j:
                    continue
                rest = np.prod(np.delete(L, [i, j], axis=1), axis=1)
                hess += rest[:, None, None] * np.outer(normals[i], normals[j])[None]
    return val, grad, hess


def _segment_hits_linear(normals, offsets, p, q):
    """Fraction along p -> q at which the first factor reaches zero (1.0 if none)."""
    lp = p @ normals.T + offsets
    lq = q @ normals.T + offsets
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(lq <= 0.0, lp / (lp - lq), np.inf)
    return np.clip(np.min(t, axis=1), 0.0, 1.0)


_ARC_GRID = 4096


def _polyline(vertices, count):
    """``count`` points at equal arc-length spacing, starting at the first vertex."""
    V = np.asarray(vertices, dtype=np.float64)
    edges = np.roll(V, -1, axis=0) - V
    lengths = np.linalg.norm(edges, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    s = np.arange(count) * (cum[-1] / count)
    seg = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(V) - 1)
    frac = (s - cum[seg]) / lengths[seg]
    return V[seg] + frac[:, None] * edges[seg]


class _Domain:
    type_code: int
    shape: str

    def params(self) -> tuple[float, ...]:
        return astuple(self)

    def smooth(self, x, y, order=0):
        raise NotImplementedError

    def contains(self, x, y):
        raise NotImplementedError

    def c_field(self, x, y, order: int = 0) -> FieldValues:
        """Cutoff value (and derivatives of the smooth branch) with 0 outside."""
        _check_order(order)
        x, y = _xy(x, y)
        val, grad, hess = self.smooth(x, y, order)
        inside = self.contains(x, y).ravel()
        val = np.where(inside, val, 0.0)
        if grad is not None:
            grad = np.where(inside[:, None], grad, 0.0)
        if hess is not None:
            hess = np.where(inside[:, None, None], hess, 0.0)
        return FieldValues(val, grad, hess)

    def __call__(self, points, order: int = 0) -> FieldValues:
        P = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return self.c_field(P[:, 0], P[:, 1], order)

    def bbox(self):
        pts = self.boundary_points(400)
        return pts.min(axis=0), pts.max(axis=0)


@dataclass(frozen=True)
class Ellipse(_Domain):
    """Centre ``(xc, yc)``, semi-axes ``a`` (along the tilted u-axis) and ``b``, tilt ``theta``."""

    xc: float
    yc: float
    a: float
    b: float
    theta: float
    type_code = 0
    shape = "ellipse"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("ellipse semi-axes must be positive")

    def _uv(self, x, y):
        ct, st = np.cos(self.theta), np.sin(self.theta)
        dx, dy = x - self.xc, y - self.yc
        return dx * ct + dy * st, dy * ct - dx * st

    def smooth(self, x, y, order=0):
        x, y = _xy(x, y)
        u, v = self._uv(x.ravel(), y.ravel())
        ia, ib = 1.0 / self.a ** 2, 1.0 / self.b ** 2
        val = 1.0 - u * u * ia - v * v * ib
        grad = hess = None
        gu = np.array([np.cos(self.theta), np.sin(self.theta)])
        gv = np.array([-np.sin(self.theta), np.cos(self.theta)])
        if order >= 1:
            grad = -2.0 * ia * u[:, None] * gu - 2.0 * ib * v[:, None] * gv
        if order >= 2:
            H = -2.0 * ia * np.outer(gu, gu) - 2.0 * ib * np.outer(gv, gv)
            hess = np.broadcast_to(H, (u.size, 2, 2)).copy()
        return val, grad, hess

    def contains(self, x, y):
        x, y = _xy(x, y)
        return self.smooth(x, y)[0].reshape(x.shape) > 0.0

    def boundary_points(self, count: int = 100) -> np.ndarray:
        """Equal arc-length spacing, counterclockwise from the +x ray through the centre.

        The start depends only on the point set, so tilts differing by a half
        turn give the same branch input.
        """
        if count < 3:
            raise ValueError("need at least 3 boundary points")
        ct, st = np.cos(self.theta), np.sin(self.theta)
        s0 = np.arctan2(-st / self.b, ct / self.a)
        # invert the arc-length map on a fine parametric grid, then evaluate exactly
        s = s0 + np.linspace(0.0, 2.0 * np.pi, _ARC_GRID + 1)
        speed = np.hypot(self.a * np.sin(s), self.b * np.cos(s))
        arc = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(s))])
        s = np.interp(arc[-1] * np.arange(count) / count, arc, s)
        u, v = self.a * np.cos(s), self.b * np.sin(s)
        return np.stack([self.xc + u * ct - v * st, self.yc + u * st + v * ct], axis=1)

    def segment_fraction(self, p, q):
        p = np.atleast_2d(p)
        q = np.atleast_2d(q)
        u0, v0 = self._uv(p[:, 0], p[:, 1])
        u1, v1 = self._uv(q[:, 0], q[:, 1])
        du, dv = u1 - u0, v1 - v0
        ia, ib = 1.0 / self.a ** 2, 1.0 / self.b ** 2
        A = -(du * du * ia + dv * dv * ib)
        B = -2.0 * (u0 * du * ia + v0 * dv * ib)
        C = 1.0 - u0 * u0 * ia - v0 * v0 * ib
        # C > 0 (p inside), A < 0: the positive root, written without cancellation
        t = 2.0 * C / (-B + np.sqrt(B * B - 4.0 * A * C))
        return np.clip(t, 0.0, 1.0)

    @property
    def area(self) -> float:
        return float(np.pi * self.a * self.b)

    @property
    def centroid(self):
        return np.array([self.xc, self.yc])


class _Polygon(_Domain):
    def vertices(self) -> np.ndarray:
        raise NotImplementedError

    def factors(self):
        raise NotImplementedError

    def smooth(self, x, y, order=0):
        x, y = _xy(x, y)
        n, o = self.factors()
        return _linear_product(n, o, x, y, order)

    def contains(self, x, y):
        x, y = _xy(x, y)
        n, o = self.factors()
        X = np.stack([x.ravel(), y.ravel()], axis=1)
        return np.all(X @ n.T + o > 0.0, axis=1).reshape(x.shape)

    def boundary_points(self, count: int = 100) -> np.ndarray:
        """Equal arc-length spacing, counterclockwise from the first vertex."""
        if count < 3:
            raise ValueError("need at least 3 boundary points")
        return _polyline(self.vertices(), count)

    def segment_fraction(self, p, q):
        n, o = self.factors()
        return _segment_hits_linear(n, o, np.atleast_2d(p), np.atleast_2d(q))

    @property
    def area(self) -> float:
        V = self.vertices()
        x, y = V[:, 0], V[:, 1]
        return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    @property
    def centroid(self):
        return self.vertices().mean(axis=0)

    @property
    def perimeter(self) -> float:
        V = self.vertices()
        return float(np.linalg.norm(np.roll(V, -1, axis=0) - V, axis=1).sum())


@dataclass(frozen=True)
class Rectangle(_Polygon):
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    type_code = 1
    shape = "rectangle"

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("rectangle needs x_min < x_max and y_min < y_max")

    def vertices(self):
        return np.array([[self.x_min, self.y_min], [self.x_max, self.y_min],
                         [self.x_max, self.y_max], [self.x_min, self.y_max]])

    def factors(self):
        normals = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        offsets = np.array([-self.x_min, self.x_max, -self.y_min, self.y_max])
        return normals, offsets


def triangle_factors(vertices):
    """Unit inward normals and offsets of the three edge lines of a triangle."""
    V = np.asarray(vertices, dtype=np.float64)
    normals, offsets = [], []
    for i in range(3):
        a, b, c = V[i], V[(i + 1) % 3], V[(i + 2) % 3]
        e = b - a
        n = np.array([-e[1], e[0]]) / np.linalg.norm(e)
        o = -n @ a
        if n @ c + o < 0:
            n, o = -n, -o
        normals.append(n)
        offsets.append(o)
    # canonical ordering keeps the product independent of vertex labelling
    order = np.lexsort((np.round(offsets, 12), np.round([n[1] for n in normals], 12),
                        np.round([n[0] for n in normals], 12)))
    return np.array(normals)[order], np.array(offsets)[order]


@dataclass(frozen=True)
class IsoTriangle(_Polygon):
    """Apex ``(x_v, y_v)``, height ``h`` and base length ``b_len``; the base is horizontal."""

    x_v: float
    y_v: float
    h: float
    b_len: float
    type_code = 2
    shape = "triangle"

    def __post_init__(self):
        if not (self.h > 0 and self.b_len > 0):
            raise ValueError("triangle needs positive height and base")

    @property
    def base_vertices(self):
        yb = self.y_v - self.h
        return (self.x_v - 0.5 * self.b_len, yb), (self.x_v + 0.5 * self.b_len, yb)

    def vertices(self):
        left, right = self.base_vertices
        return np.array([[self.x_v, self.y_v], left, right])

    def factors(self):
        return triangle_factors(self.vertices())


DOMAIN_TYPES = {0: Ellipse, 1: Rectangle, 2: IsoTriangle}
SHAPE_CODES = {"ellipse": 0, "rectangle": 1, "triangle": 2}


def domain_from_params(type_code: int, params) -> _Domain:
    cls = DOMAIN_TYPES[int(type_code)]
    n = len(cls.__dataclass_fields__)
    return cls(*[float(v) for v in list(params)[:n]])


def sample_domain(shape: str, rng_seed) -> _Domain:
    """Draw a random domain of the given family.

    * ellipse: centre U(0.8, 1.2)^2, semi-axes U(0.3, 0.8), tilt U(0, 2 pi)
    * rectangle: four U(0, 1) draws sorted to (x0, y0, x1, y1) give
      ``[x0, x1 + 1] x [y0, y1 + 1]``
    * triangle: apex (1, U(1.5, 2)), height U(0.9, 1.5), base U(1.2, 2)
    """
    rng = make_rng(rng_seed)
    if shape == "ellipse":
        xc, yc = rng.uniform(0.8, 1.2, size=2)
        a, b = rng.uniform(0.3, 0.8, size=2)
        theta = rng.uniform(0.0, 2.0 * np.pi)
        return Ellipse(float(xc), float(yc), float(a), float(b), float(theta))
    if shape == "rectangle":
        return rectangle_from_draws(rng.uniform(0.0, 1.0, size=4))
    if shape == "triangle":
        y_v = float(rng.uniform(1.5, 2.0))
        h = float(rng.uniform(0.9, 1.5))
        b_len = float(rng.uniform(1.2, 2.0))
        return IsoTriangle(1.0, y_v, h, b_len)
    raise ValueError(f"unknown shape {shape!r}")


def rectangle_from_draws(draws) -> Rectangle:
    x0, y0, x1, y1 = (float(v) for v in np.sort(np.asarray(draws, dtype=np.float64)))
    return Rectangle(x0, y0, x1 + 1.0, y1 + 1.0)


def c_field(domain: _Domain, x, y, order: int = 0) -> FieldValues:
    return domain.c_field(x, y, order)


def boundary_points(domain: _Domain, count: int = 100) -> np.ndarray:
    return domain.boundary_points(count)


def contains(domain: _Domain, x, y):
    return domain.contains(x, y)
