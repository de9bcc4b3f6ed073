"""Fixed random hidden layers.

A :class:`RandomLayer` is ``sigma(W x + b)`` with ``W`` drawn uniformly and
frozen.  Biases can be placed so that every partition hyperplane
``W[n] . x + b[n] = 0`` passes through a random anchor point inside the
bounding box of the input data, which keeps the hyperplanes where the data is.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonFiniteError,
    NonPositiveRangeError,
    UnsupportedActivationError,
    UnsupportedOrderError,
    ZeroWeightRowError,
)

ACTIVATIONS = ("tanh", "identity")


def make_rng(seed) -> np.random.Generator:
    """Generator from an int seed or a ``SeedSequence``-compatible entropy list."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def child_seeds(seed, n: int) -> list[int]:
    """Derive ``n`` independent integer seeds from ``seed``."""
    return [int(s.generate_state(1, np.uint64)[0] >> 1) for s in np.random.SeedSequence(seed).spawn(n)]


@dataclass(frozen=True)
class Hypercube:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatchError("lower/upper must be 1-D vectors of equal length")
        if np.any(lo >= hi):
            raise ValueError("hypercube needs lower < upper in every dimension")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @classmethod
    def bounding(cls, points, pad: float = 1e-12) -> "Hypercube":
        """Smallest box containing ``points`` (rows); degenerate sides are padded."""
        pts = np.asarray(points, dtype=np.float64)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        flat = hi - lo <= pad
        lo = np.where(flat, lo - 0.5, lo)
        hi = np.where(flat, hi + 0.5, hi)
        return cls(lo, hi)


@dataclass(frozen=True)
class RandomLayer:
    """Frozen affine map followed by an activation.

    ``anchors`` (width x in_dim), when present, are the points each hyperplane
    was forced through; ``seed`` records how the layer was drawn.
    """

    weights: np.ndarray
    biases: np.ndarray
    activation: str = "tanh"
    anchors: np.ndarray | None = None
    seed: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        W = np.array(self.weights, dtype=np.float64)
        b = np.array(self.biases, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
            raise DimensionMismatchError(f"weights must be (width, in_dim) with both >= 1, got {W.shape}")
        if b.shape != (W.shape[0],):
            raise DimensionMismatchError(f"biases shape {b.shape} does not match width {W.shape[0]}")
        if self.activation not in ACTIVATIONS:
            raise UnsupportedActivationError(self.activation)
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise NonFiniteError("layer parameters must be finite")
        W.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "biases", b)
        if self.anchors is not None:
            B = np.array(self.anchors, dtype=np.float64)
            B.flags.writeable = False
            object.__setattr__(self, "anchors", B)

    @property
    def width(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


def init_uniform_weights(width: int, in_dim: int, r: float, rng_seed) -> np.ndarray:
    """``width x in_dim`` matrix with i.i.d. entries from U(-r, r)."""
    if not r > 0:
        raise NonPositiveRangeError(f"weight range must be positive, got {r}")
    return make_rng(rng_seed).uniform(-r, r, size=(width, in_dim))


def bias_from_anchors(W, anchors) -> np.ndarray:
    """``b = -(W * B) @ 1``: hyperplane ``n`` then passes through ``anchors[n]``."""
    W = np.asarray(W, dtype=np.float64)
    B = np.asarray(anchors, dtype=np.float64)
    if W.shape != B.shape:
        raise DimensionMismatchError(f"weights {W.shape} and anchors {B.shape} differ")
    return -np.sum(W * B, axis=1)


def sample_anchors(width: int, cube: Hypercube, rng_seed) -> np.ndarray:
    return make_rng(rng_seed).uniform(cube.lower, cube.upper, size=(width, cube.dim))


def init_bias_hypercube(W, cube: Hypercube, rng_seed, return_anchors: bool = False):
    """Bias vector whose hyperplanes all cross ``cube``.

    Anchor points ``B[n]`` are drawn uniformly in the cube and the bias is
    set so that ``W[n] . B[n] + b[n] = 0``.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != cube.dim:
        raise DimensionMismatchError(f"weights have {W.shape[-1]} columns but cube has dim {cube.dim}")
    B = sample_anchors(W.shape[0], cube, rng_seed)
    b = bias_from_anchors(W, B)
    return (b, B) if return_anchors else b


def make_layer(in_dim: int, width: int, r: float, seed: int, cube: Hypercube | None = None,
               activation: str = "tanh", bias: str = "hypercube") -> RandomLayer:
    """Draw a layer: weights U(-r, r); bias from hypercube anchors or U(-r, r)."""
    w_seed, b_seed = child_seeds(seed, 2)
    W = init_uniform_weights(width, in_dim, r, w_seed)
    anchors = None
    if bias == "hypercube":
        if cube is None:
            raise ValueError("hypercube bias needs a cube")
        b, anchors = init_bias_hypercube(W, cube, b_seed, return_anchors=True)
    elif bias == "uniform":
        b = make_rng(b_seed).uniform(-r, r, size=width)
    else:
        raise ValueError(f"unknown bias strategy {bias!r}")
    return RandomLayer(W, b, activation, anchors, seed, {"r": r, "bias": bias})


def _activate(z, activation):
    return np.tanh(z) if activation == "tanh" else z


def _preactivation(layer: RandomLayer, X):
    """``X W^T + b``; low input dimensions are summed explicitly so a point gives
    the same bits whether it is evaluated alone or inside a batch."""
    W = layer.weights
    if W.shape[1] > 8:
        return X @ W.T + layer.biases
    z = np.broadcast_to(layer.biases, (X.shape[0], W.shape[0])).copy()
    for d in range(W.shape[1]):
        z += X[:, d:d + 1] * W[:, d]
    return z


def _as_batch(layer: RandomLayer, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != layer.in_dim:
        raise DimensionMismatchError(f"input has trailing dim {x.shape[-1]}, layer expects {layer.in_dim}")
    return X, single


def eval_features(layer: RandomLayer, x) -> np.ndarray:
    """``sigma(W x + b)`` for one point ``(in_dim,)`` or a batch ``(n, in_dim)``."""
    X, single = _as_batch(layer, x)
    H = _activate(_preactivation(layer, X), layer.activation)
    return H[0] if single else H


def eval_feature_derivatives(layer: RandomLayer, x, order: int = 1):
    """Values, input gradients and (``order=2``) Hessians of every neuron.

    Returns ``(h, grad, hess)`` with shapes ``(n, width)``,
    ``(n, width, in_dim)`` and ``(n, width, in_dim, in_dim)`` (leading axis
    dropped for a single point).  ``hess`` is ``None`` for ``order=1``.
    For tanh, ``dh/dx_d = (1 - h^2) W[:, d]`` and
    ``d2h/dx_d dx_e = -2 h (1 - h^2) W[:, d] W[:, e]``.
    """
    if order not in (1, 2):
        raise UnsupportedOrderError(f"order must be 1 or 2, got {order}")
    X, single = _as_batch(layer, x)
    W = layer.weights
    z = _preactivation(layer, X)
    if layer.activation == "tanh":
        h = np.tanh(z)
        d1 = 1.0 - h * h
        d2 = -2.0 * h * d1
    else:
        h = z
        d1 = np.ones_like(z)
        d2 = np.zeros_like(z)
    grad = d1[:, :, None] * W[None, :, :]
    hess = None
    if order == 2:
        hess = d2[:, :, None, None] * (W[:, :, None] * W[:, None, :])[None]
    if single:
        return h[0], grad[0], None if hess is None else hess[0]
    return h, grad, hess


def hyperplane_density(W, b, points, tau: float) -> np.ndarray:
    """Fraction of hyperplanes ``W[i] x + b[i] = 0`` closer than ``tau`` to each point."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    norms = np.linalg.norm(W, axis=1)
    if np.any(norms == 0):
        raise ZeroWeightRowError("hyperplane with zero normal vector")
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if P.shape[1] != W.shape[1]:
        raise DimensionMismatchError("points and hyperplanes live in different dimensions")
    dist = np.abs(P @ W.T + b) / norms
    return np.mean(dist < tau, axis=1)
