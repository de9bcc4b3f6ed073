"""RaNN-DeepONet: random branch features times random trunk basis, linear in alpha.

    G(f)(y) = c(y) * sum_i sum_j alpha[i, j] h_j(f) t_i(y) + g(y)

``h`` are the hidden features of the branch layer (width k), ``t`` the trunk
basis (width p), ``alpha`` the only trained parameter, stored ``(p, k)`` and
flattened row-major (column ``i*k + j``) in the least-squares system.
``c``/``g`` implement hard Dirichlet constraints; a Fourier embedding of the
trunk input makes the output exactly periodic in selected coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DimensionMismatchError, UnsupportedOrderError, UntrainedError
from .features import RandomLayer, eval_feature_derivatives, eval_features


class FieldValues(NamedTuple):
    value: np.ndarray
    grad: np.ndarray | None = None
    hess: np.ndarray | None = None


def _points(y, dim=None):
    Y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if dim is not None and Y.shape[1] != dim:
        raise DimensionMismatchError(f"expected points of dimension {dim}, got {Y.shape[1]}")
    return Y


class ConstantField:
    """``c(y) = value`` with zero derivatives."""

    name = "constant"

    def __init__(self, value: float = 0.0):
        self.value = float(value)

    def __call__(self, y, order: int = 0) -> FieldValues:
        Y = _points(y)
        n, d = Y.shape
        return FieldValues(np.full(n, self.value),
                           np.zeros((n, d)) if order >= 1 else None,
                           np.zeros((n, d, d)) if order >= 2 else None)

    def params(self):
        return {"value": self.value}


class SpaceTimeCutoff:
    """``c(x, t) = t x (1 - x)``: zero on x=0, x=1 and t=0."""

    name = "spacetime_cutoff"

    def __call__(self, y, order: int = 0) -> FieldValues:
        Y = _points(y, 2)
        x, t = Y[:, 0], Y[:, 1]
        val = t * x * (1.0 - x)
        grad = hess = None
        if order >= 1:
            grad = np.stack([t * (1.0 - 2.0 * x), x * (1.0 - x)], axis=1)
        if order >= 2:
            hess = np.zeros((Y.shape[0], 2, 2))
            hess[:, 0, 0] = -2.0 * t
            hess[:, 0, 1] = hess[:, 1, 0] = 1.0 - 2.0 * x
        return FieldValues(val, grad, hess)

    def params(self):
        return {}


class IntervalCutoff:
    """``c(x) = (x - a)(b - x)`` on a 1-D interval."""

    name = "interval_cutoff"

    def __init__(self, a: float = 0.0, b: float = 1.0):
        self.a, self.b = float(a), float(b)

    def __call__(self, y, order: int = 0) -> FieldValues:
        x = _points(y, 1)[:, 0]
        val = (x - self.a) * (self.b - x)
        grad = (self.a + self.b - 2.0 * x)[:, None] if order >= 1 else None
        hess = np.full((x.size, 1, 1), -2.0) if order >= 2 else None
        return FieldValues(val, grad, hess)

    def params(self):
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class ConstraintWrapper:
    """``kind='dirichlet'`` gives ``G = c * G_tilde + g``; ``kind='none'`` gives ``G_tilde``.

    ``c=None`` under ``dirichlet`` means the cutoff depends on the input
    (e.g. on the domain) and must be supplied at evaluation time.
    ``g=None`` means homogeneous boundary data.
    """

    kind: str = "none"
    c: Callable | None = None
    g: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("none", "dirichlet"):
            raise ValueError(f"unknown constraint kind {self.kind!r}")

    def cutoff(self, override=None):
        if self.kind == "none":
            return None
        field = override if override is not None else self.c
        if field is None:
            raise ValueError("dirichlet constraint needs a cutoff field for this input")
        return field

    def lift(self):
        return self.g if self.g is not None else ConstantField(0.0)


@dataclass(frozen=True)
class PeriodicEmbedding:
    """Replace each coordinate in ``dims`` by ``cos(h w x), sin(h w x)``, h = 1..harmonics.

    Non-periodic coordinates are appended unchanged, in their original order.
    Coordinates are reduced modulo the period first, so ``x`` and
    ``x + 2 pi / w`` hit identical embedded inputs whenever the reduction is
    exact (in particular x=0 and x=1 for w=2 pi).
    """

    omega: float = 2.0 * np.pi
    harmonics: int = 1
    dims: tuple[int, ...] = (0,)

    def __post_init__(self):
        if not self.omega > 0 or self.harmonics < 1:
            raise ValueError("need omega > 0 and harmonics >= 1")
        object.__setattr__(self, "dims", tuple(sorted(int(d) for d in self.dims)))

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    def out_dim(self, in_dim: int) -> int:
        return in_dim + len(self.dims) * (2 * self.harmonics - 1)

    def _rest(self, in_dim):
        return [d for d in range(in_dim) if d not in self.dims]

    def __call__(self, y) -> np.ndarray:
        return self.embed_with_derivatives(y, order=0)[0]

    def embed_with_derivatives(self, y, order: int = 0):
        """Embedded points ``(n, E)``, Jacobian ``(n, E, d)`` and second derivatives.

        Each embedded coordinate depends on one raw coordinate only, so the
        second derivatives are returned as ``(n, E, d)`` holding
        ``d2 e_a / d y_d^2``; all mixed terms vanish.
        """
        Y = _points(y)
        n, d = Y.shape
        if any(dim >= d for dim in self.dims):
            raise DimensionMismatchError(f"periodic dims {self.dims} exceed input dim {d}")
        E = self.out_dim(d)
        emb = np.empty((n, E))
        jac = np.zeros((n, E, d)) if order >= 1 else None
        sec = np.zeros((n, E, d)) if order >= 2 else None
        col = 0
        for dim in self.dims:
            x = np.mod(Y[:, dim], self.period)
            for h in range(1, self.harmonics + 1):
                w = h * self.omega
                cos, sin = np.cos(w * x), np.sin(w * x)
                emb[:, col], emb[:, col + 1] = cos, sin
                if jac is not None:
                    jac[:, col, dim] = -w * sin
                    jac[:, col + 1, dim] = w * cos
                if sec is not None:
                    sec[:, col, dim] = -w * w * cos
                    sec[:, col + 1, dim] = -w * w * sin
                col += 2
        for dim in self._rest(d):
            emb[:, col] = Y[:, dim]
            if jac is not None:
                jac[:, col, dim] = 1.0
            col += 1
        return emb, jac, sec


def periodic_embed(y, omega: float, harmonics: int = 1, dims=(0,)) -> np.ndarray:
    """Functional form of :class:`PeriodicEmbedding` for a single point or a batch."""
    y = np.asarray(y, dtype=np.float64)
    out = PeriodicEmbedding(omega, harmonics, tuple(dims))(y)
    return out[0] if y.ndim <= 1 else out


class RannDeepONet:
    """Branch layer (m -> k), trunk layer (d or embedded dim -> p) and coefficients alpha (p x k)."""

    def __init__(self, branch: RandomLayer, trunk: RandomLayer,
                 constraint: ConstraintWrapper | None = None,
                 embedding: PeriodicEmbedding | None = None,
                 alpha=None, coord_dim: int | None = None):
        self.branch = branch
        self.trunk = trunk
        self.constraint = constraint or ConstraintWrapper()
        self.embedding = embedding
        if coord_dim is None:
            coord_dim = trunk.in_dim
            if embedding is not None:
                # invert out_dim: E = d + |dims| (2H - 1)
                coord_dim = trunk.in_dim - len(embedding.dims) * (2 * embedding.harmonics - 1)
        self.coord_dim = coord_dim
        if embedding is not None and embedding.out_dim(coord_dim) != trunk.in_dim:
            raise DimensionMismatchError("embedding output does not match trunk input")
        self._alpha = None
        if alpha is not None:
            self.alpha = alpha

    @property
    def m(self) -> int:
        return self.branch.in_dim

    @property
    def k(self) -> int:
        return self.branch.width

    @property
    def p(self) -> int:
        return self.trunk.width

    @property
    def alpha(self) -> np.ndarray:
        if self._alpha is None:
            raise UntrainedError("model has no coefficients yet")
        return self._alpha

    @alpha.setter
    def alpha(self, value):
        a = np.array(value, dtype=np.float64)
        if a.size == self.p * self.k and a.ndim == 1:
            a = a.reshape(self.p, self.k)
        if a.shape != (self.p, self.k):
            raise DimensionMismatchError(f"alpha must be ({self.p}, {self.k}), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("alpha must be finite")
        a.flags.writeable = False
        self._alpha = a

    @property
    def is_trained(self) -> bool:
        return self._alpha is not None

    def branch_features(self, f_sensors) -> np.ndarray:
        """Hidden branch features ``h(f)`` (no alpha applied): ``(k,)`` or ``(N, k)``."""
        return eval_features(self.branch, f_sensors)

    def _embed(self, Y):
        return Y if self.embedding is None else self.embedding(Y)

    def trunk_features(self, y) -> np.ndarray:
        """Trunk basis ``t(y)``: ``(p,)`` for one point, ``(n, p)`` for a batch."""
        y = np.asarray(y, dtype=np.float64)
        Y = _points(y, self.coord_dim)
        T = eval_features(self.trunk, self._embed(Y))
        return T[0] if y.ndim <= 1 else T

    def trunk_features_derivatives(self, y, order: int = 1):
        """``(t, grad, hess)`` of the trunk basis w.r.t. raw coordinates.

        Shapes ``(n, p)``, ``(n, p, d)``, ``(n, p, d, d)``; ``hess`` is None
        for ``order=1``.  The chain rule runs through the periodic embedding.
        """
        if order not in (1, 2):
            raise UnsupportedOrderError(f"order must be 1 or 2, got {order}")
        Y = _points(y, self.coord_dim)
        if self.embedding is None:
            return eval_feature_derivatives(self.trunk, Y, order)
        emb, jac, sec = self.embedding.embed_with_derivatives(Y, order)
        W = self.trunk.weights
        t = eval_features(self.trunk, emb)
        s1 = 1.0 - t * t if self.trunk.activation == "tanh" else np.ones_like(t)
        dz = np.einsum("pa,nad->npd", W, jac)
        grad = s1[:, :, None] * dz
        hess = None
        if order == 2:
            s2 = -2.0 * t * s1 if self.trunk.activation == "tanh" else np.zeros_like(t)
            hess = s2[:, :, None, None] * dz[:, :, :, None] * dz[:, :, None, :]
            d2z = np.einsum("pa,nad->npd", W, sec)
            idx = np.arange(self.coord_dim)
            hess[:, :, idx, idx] += s1[:, :, None] * d2z
        return t, grad, hess

    def latent(self, f_sensors, points) -> np.ndarray:
        """Unconstrained output ``t(y)^T alpha h(f)`` at each point."""
        h = self.branch_features(np.asarray(f_sensors, dtype=np.float64).ravel())
        T = self.trunk_features(_points(points, self.coord_dim))
        # row-wise reduction keeps batch and single-point results bit-identical
        return np.sum(T * (self.alpha @ h), axis=1)

    def evaluate_batch(self, f_sensors, points, c_field=None) -> np.ndarray:
        """Model output at every row of ``points`` for one input function."""
        f = np.asarray(f_sensors, dtype=np.float64).ravel()
        if f.size != self.m:
            raise DimensionMismatchError(f"expected {self.m} sensor values, got {f.size}")
        self.alpha  # raises UntrainedError before any work
        pts = np.asarray(points, dtype=np.float64)
        if pts.size == 0:
            return np.zeros(0)
        Y = _points(pts, self.coord_dim)
        out = self.latent(f, Y)
        if self.constraint.kind == "dirichlet":
            c = self.constraint.cutoff(c_field)
            out = c(Y).value * out + self.constraint.lift()(Y).value
        return out

    def evaluate(self, f_sensors, y, c_field=None) -> float:
        return float(self.evaluate_batch(f_sensors, np.atleast_2d(y), c_field)[0])

    def evaluate_many(self, F, points_per_input, c_fields=None) -> list[np.ndarray]:
        """Evaluate several inputs, each on its own point set."""
        out = []
        for n, (f, pts) in enumerate(zip(F, points_per_input)):
            c = None if c_fields is None else c_fields[n]
            out.append(self.evaluate_batch(f, pts, c))
        return out
