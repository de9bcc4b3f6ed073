import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rann_deeponet.errors import (
    DimensionMismatchError,
    NonPositiveRangeError,
    UnsupportedOrderError,
    ZeroWeightRowError,
)
from rann_deeponet.features import (
    Hypercube,
    RandomLayer,
    bias_from_anchors,
    eval_feature_derivatives,
    eval_features,
    hyperplane_density,
    init_bias_hypercube,
    init_uniform_weights,
    make_layer,
)


def test_weights_in_range_and_reproducible():
    W = init_uniform_weights(2, 3, 0.5, 42)
    assert W.shape == (2, 3)
    assert np.all(np.abs(W) < 0.5)
    np.testing.assert_array_equal(W, init_uniform_weights(2, 3, 0.5, 42))
    with pytest.raises(NonPositiveRangeError):
        init_uniform_weights(2, 3, 0.0, 1)


def test_weight_moments():
    r = 0.5
    W = init_uniform_weights(200, 101, r, 7)
    n = W.size
    assert abs(W.mean()) <= 3 * (r / math.sqrt(3)) / math.sqrt(n)
    assert W.var() == pytest.approx(r * r / 3, rel=0.1)


def test_bias_from_anchor_hand_case():
    assert bias_from_anchors(np.array([[1.0, 0.0]]), np.array([[0.3, 0.7]])) == pytest.approx([-0.3])


def test_zero_row_gives_zero_bias():
    W = np.array([[0.0, 0.0], [1.0, 2.0]])
    b = init_bias_hypercube(W, Hypercube([0, 0], [1, 1]), 3)
    assert b[0] == 0.0


def test_hyperplanes_pass_through_anchors():
    cube = Hypercube([0.0, 0.0], [1.0, 1.0])
    W = init_uniform_weights(120, 2, 5.0, 11)
    b, B = init_bias_hypercube(W, cube, 12, return_anchors=True)
    assert np.all((B >= 0) & (B <= 1))
    np.testing.assert_allclose(np.sum(W * B, axis=1) + b, 0.0, atol=1e-14)


def test_bias_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        init_bias_hypercube(np.ones((3, 2)), Hypercube([0, 0, 0], [1, 1, 1]), 0)


def test_eval_trivial_cases():
    zero = RandomLayer(np.zeros((4, 3)), np.zeros(4))
    np.testing.assert_array_equal(eval_features(zero, [1.0, 2.0, 3.0]), np.zeros(4))
    ident = RandomLayer(np.eye(3), np.zeros(3), "identity")
    np.testing.assert_array_equal(eval_features(ident, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])
    with pytest.raises(DimensionMismatchError):
        eval_features(zero, [1.0, 2.0])


def test_eval_matches_scalar_loop(rng):
    layer = make_layer(5, 7, 2.0, 3, Hypercube(-np.ones(5), np.ones(5)))
    x = rng.uniform(-1, 1, 5)
    ref = [math.tanh(sum(layer.weights[n, d] * x[d] for d in range(5)) + layer.biases[n]) for n in range(7)]
    np.testing.assert_allclose(eval_features(layer, x), ref, rtol=0, atol=1e-15)


def test_layer_is_immutable():
    layer = make_layer(2, 3, 1.0, 0, Hypercube([0, 0], [1, 1]))
    with pytest.raises(ValueError):
        layer.weights[0, 0] = 5.0
    x = np.array([0.2, 0.4])
    assert np.array_equal(eval_features(layer, x), eval_features(layer, x))


def test_derivatives_at_zero_preactivation():
    W = np.array([[2.0, -1.0]])
    layer = RandomLayer(W, np.array([0.0]))
    h, g, H = eval_feature_derivatives(layer, [0.0, 0.0], order=2)
    assert h[0] == 0.0
    np.testing.assert_array_equal(g[0], W[0])
    np.testing.assert_array_equal(H[0], np.zeros((2, 2)))


def test_tanh_second_derivative_value():
    layer = RandomLayer(np.array([[1.0]]), np.array([0.0]))
    _, _, H = eval_feature_derivatives(layer, [1.0], order=2)
    assert H[0, 0, 0] == pytest.approx(-0.639700008449225, rel=1e-12)


def test_unsupported_order():
    layer = RandomLayer(np.eye(2), np.zeros(2))
    with pytest.raises(UnsupportedOrderError):
        eval_feature_derivatives(layer, [0.0, 0.0], order=3)


def central_differences(f, x, h):
    d = x.size
    g = np.stack([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(d)], axis=-1)
    return g


@given(st.integers(0, 2**31))
def test_derivatives_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    layer = make_layer(d, 6, 3.0, seed, Hypercube(np.zeros(d), np.ones(d)))
    x = rng.uniform(0, 1, d)
    h, g, H = eval_feature_derivatives(layer, x, order=2)
    f = lambda z: eval_features(layer, z)
    g_fd = central_differences(f, x, 1e-5)
    H_fd = np.stack([(eval_feature_derivatives(layer, x + 1e-4 * e)[1]
                      - eval_feature_derivatives(layer, x - 1e-4 * e)[1]) / 2e-4 for e in np.eye(d)], axis=-1)
    assert np.linalg.norm(g - g_fd) <= 1e-6 * np.linalg.norm(g) + 1e-10
    assert np.linalg.norm(H - H_fd) <= 1e-4 * np.linalg.norm(H) + 1e-8


def test_density_hand_cases():
    W, b = np.array([[1.0, 0.0]]), np.array([-0.5])
    assert hyperplane_density(W, b, [[0.5, 0.2]], 0.6)[0] == 1.0
    assert hyperplane_density(W, b, [[1.5, 0.0]], 0.5)[0] == 0.0
    with pytest.raises(ZeroWeightRowError):
        hyperplane_density(np.zeros((1, 2)), [0.0], [[0, 0]], 0.1)


def test_density_matches_double_loop(rng):
    W, b = rng.standard_normal((50, 2)), rng.standard_normal(50)
    pts = rng.uniform(-1, 1, (100, 2))
    tau = 0.3
    ref = np.array([sum(abs(W[i] @ x + b[i]) / np.linalg.norm(W[i]) < tau for i in range(50)) / 50
                    for x in pts])
    np.testing.assert_array_equal(hyperplane_density(W, b, pts, tau), ref)


@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_density_monotone_in_tau(t1, t2):
    rng = np.random.default_rng(5)
    W, b = rng.standard_normal((30, 2)), rng.standard_normal(30)
    pts = rng.uniform(-1, 1, (20, 2))
    lo, hi = sorted((t1, t2))
    assert np.all(hyperplane_density(W, b, pts, lo) <= hyperplane_density(W, b, pts, hi))


def test_hypercube_bounding_and_validation():
    cube = Hypercube.bounding(np.array([[0.0, 1.0], [2.0, 1.0]]))
    assert cube.lower[0] == 0.0 and cube.upper[0] == 2.0
    assert cube.lower[1] < 1.0 < cube.upper[1]  # flat side padded
    with pytest.raises(ValueError):
        Hypercube([1.0], [0.0])


def test_uniform_bias_option():
    layer = make_layer(2, 10, 1.5, 4, bias="uniform")
    assert np.all(np.abs(layer.biases) < 1.5) and layer.anchors is None
