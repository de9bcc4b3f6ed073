import numpy as np
import pytest
from hypothesis import given, strategies as st

from rann_deeponet.errors import DimensionMismatchError, UntrainedError
from rann_deeponet.geometry import SHAPES, boundary_points, sample_domain
from rann_deeponet.features import Hypercube, RandomLayer, eval_feature_derivatives, make_layer
from rann_deeponet.model import (
    ConstantField,
    ConstraintWrapper,
    PeriodicEmbedding,
    RannDeepONet,
    SpaceTimeCutoff,
    periodic_embed,
)


def small_model(constraint=None, embedding=None, seed=0, m=4, k=3, p=5):
    if embedding is None:
        cube_t = Hypercube([0, 0], [1, 1])
    else:
        E = embedding.out_dim(2)
        cube_t = Hypercube([-1] * (E - 1) + [0], [1] * E)
    branch = make_layer(m, k, 0.7, seed, Hypercube(-np.ones(m), np.ones(m)))
    trunk = make_layer(cube_t.dim, p, 2.0, seed + 1, cube_t)
    model = RannDeepONet(branch, trunk, constraint, embedding)
    model.alpha = np.random.default_rng(seed).standard_normal((p, k))
    return model


def test_hand_bilinear_form():
    branch = RandomLayer(np.zeros((2, 1)), np.zeros(2), "identity")
    trunk = RandomLayer(np.zeros((2, 1)), np.zeros(2), "identity")
    model = RannDeepONet(branch, trunk, alpha=np.eye(2))
    # feed features through biases: h = (1, 2), t = (3, 4)
    model.branch = RandomLayer(np.zeros((2, 1)), np.array([1.0, 2.0]), "identity")
    model.trunk = RandomLayer(np.zeros((2, 1)), np.array([3.0, 4.0]), "identity")
    assert model.evaluate([0.0], [0.0]) == 11.0


def test_untrained_raises():
    model = small_model()
    model._alpha = None
    with pytest.raises(UntrainedError):
        model.evaluate(np.zeros(4), [0.5, 0.5])
    with pytest.raises(UntrainedError):
        model.evaluate_batch(np.zeros(4), np.zeros((0, 2)))


def test_zero_alpha_gives_lift():
    g = ConstantField(0.25)
    model = small_model(ConstraintWrapper("dirichlet", SpaceTimeCutoff(), g))
    model.alpha = np.zeros((model.p, model.k))
    np.testing.assert_array_equal(model.evaluate_batch(np.ones(4), np.random.rand(6, 2)), 0.25)


def test_alpha_shape_checked():
    model = small_model()
    with pytest.raises(DimensionMismatchError):
        model.alpha = np.zeros((2, 2))
    model.alpha = np.arange(15.0)
    assert model.alpha.shape == (5, 3) and model.alpha[1, 0] == 3.0


def test_branch_features_trivial_and_oracle(rng):
    branch = RandomLayer(np.zeros((3, 4)), np.array([0.1, -0.2, 0.3]))
    model = RannDeepONet(branch, make_layer(2, 2, 1.0, 0, Hypercube([0, 0], [1, 1])))
    np.testing.assert_array_equal(model.branch_features(np.zeros(4)), np.tanh([0.1, -0.2, 0.3]))
    m = small_model()
    f = rng.standard_normal(4)
    ref = [np.tanh(sum(m.branch.weights[j, i] * f[i] for i in range(4)) + m.branch.biases[j]) for j in range(3)]
    np.testing.assert_allclose(m.branch_features(f), ref, atol=1e-15)
    with pytest.raises(DimensionMismatchError):
        m.evaluate(np.zeros(3), [0.1, 0.1])


def test_periodic_embed_values():
    np.testing.assert_allclose(periodic_embed([[0.0]], 2 * np.pi), [[1.0, 0.0]])
    np.testing.assert_allclose(periodic_embed([[0.25]], 2 * np.pi), [[0.0, 1.0]], atol=1e-15)
    emb = PeriodicEmbedding(harmonics=2)
    y = np.array([[0.3, 0.7]])
    np.testing.assert_allclose(emb(y)[0], [np.cos(0.6 * np.pi), np.sin(0.6 * np.pi),
                                           np.cos(1.2 * np.pi), np.sin(1.2 * np.pi), 0.7])


@given(st.floats(0, 1), st.floats(0.5, 10), st.integers(-3, 3))
def test_embedding_periodicity(x, omega, shift):
    emb = PeriodicEmbedding(omega=omega)
    a = emb(np.array([[x, 0.3]]))
    b = emb(np.array([[x + shift * emb.period, 0.3]]))
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_periodic_exactness_bitwise(rng):
    model = small_model(embedding=PeriodicEmbedding())
    f = rng.standard_normal(4)
    t = rng.uniform(0, 1, 50)
    left = model.evaluate_batch(f, np.stack([np.zeros(50), t], 1))
    right = model.evaluate_batch(f, np.stack([np.ones(50), t], 1))
    assert np.array_equal(left, right)
    _, gl, Hl = model.trunk_features_derivatives(np.stack([np.zeros(50), t], 1), order=2)
    _, gr, Hr = model.trunk_features_derivatives(np.stack([np.ones(50), t], 1), order=2)
    assert np.array_equal(gl, gr) and np.array_equal(Hl, Hr)


def test_derivatives_reduce_without_embedding(rng):
    model = small_model()
    y = rng.uniform(0, 1, (7, 2))
    t, g, H = model.trunk_features_derivatives(y, order=2)
    t2, g2, H2 = eval_feature_derivatives(model.trunk, y, order=2)
    assert np.array_equal(t, t2) and np.array_equal(g, g2) and np.array_equal(H, H2)


def fd_check(model, y, hg=1e-5, hh=1e-4):
    _, g, H = model.trunk_features_derivatives(y, order=2)
    d = y.shape[1]
    g_fd = np.stack([(model.trunk_features(y + hg * e) - model.trunk_features(y - hg * e)) / (2 * hg)
                     for e in np.eye(d)], -1)
    H_fd = np.stack([(model.trunk_features_derivatives(y + hh * e)[1]
                      - model.trunk_features_derivatives(y - hh * e)[1]) / (2 * hh) for e in np.eye(d)], -1)
    return (np.linalg.norm(g - g_fd) / np.linalg.norm(g), np.linalg.norm(H - H_fd) / np.linalg.norm(H))


@pytest.mark.parametrize("embedding", [None, PeriodicEmbedding(), PeriodicEmbedding(harmonics=2)])
def test_trunk_derivatives_finite_differences(embedding):
    """1000 random (layer, point) cases split over embedding variants."""
    worst_g = worst_h = 0.0
    for case in range(334):
        model = small_model(embedding=embedding, seed=case)
        y = np.random.default_rng(case).uniform(0.05, 0.95, (1, 2))
        eg, eh = fd_check(model, y)
        worst_g, worst_h = max(worst_g, eg), max(worst_h, eh)
    assert worst_g <= 1e-6
    assert worst_h <= 1e-4


def test_evaluate_batch_matches_pointwise(rng):
    model = small_model(ConstraintWrapper("dirichlet", SpaceTimeCutoff()))
    f = rng.standard_normal(4)
    pts = rng.uniform(0, 1, (3, 2))
    batch = model.evaluate_batch(f, pts)
    for y, v in zip(pts, batch):
        assert model.evaluate(f, y) == pytest.approx(v, rel=1e-15, abs=1e-300)
    assert model.evaluate_batch(f, np.zeros((0, 2))).shape == (0,)


def test_dirichlet_boundary_exactness(rng):
    g = ConstantField(-0.5)
    model = small_model(ConstraintWrapper("dirichlet", SpaceTimeCutoff(), g))
    model.alpha = 1e6 * rng.standard_normal((model.p, model.k))
    s = rng.uniform(0, 1, 10_000)
    bnd = np.concatenate([np.stack([np.zeros(3334), s[:3334]], 1), np.stack([np.ones(3333), s[3334:6667]], 1),
                          np.stack([s[6667:], np.zeros(3333)], 1)])
    out = model.evaluate_batch(rng.standard_normal(4), bnd)
    assert np.abs(out + 0.5).max() <= 1e-12


@pytest.mark.parametrize("shape", SHAPES)
def test_dirichlet_boundary_exactness_on_domains(shape, rng):
    dom = sample_domain(shape, [3])
    model = small_model(ConstraintWrapper("dirichlet", dom))
    out = model.evaluate_batch(rng.standard_normal(4), boundary_points(dom, 10_000))
    assert np.abs(out).max() <= 1e-12


def test_bilinearity_in_alpha(rng):
    g = ConstantField(0.3)
    model = small_model(ConstraintWrapper("dirichlet", SpaceTimeCutoff(), g))
    f, pts = rng.standard_normal(4), rng.uniform(0, 1, (20, 2))
    a1, a2 = rng.standard_normal((5, 3)), rng.standard_normal((5, 3))

    def G(a):
        model.alpha = a
        return model.evaluate_batch(f, pts)
    np.testing.assert_allclose(G(a1 + a2), G(a1) + G(a2) - 0.3, atol=1e-12)
    np.testing.assert_allclose(G(2.5 * a1), 2.5 * (G(a1) - 0.3) + 0.3, atol=1e-12)


def test_spacetime_cutoff_derivatives(rng):
    c = SpaceTimeCutoff()
    y = rng.uniform(0, 1, (5, 2))
    v = c(y, 2)
    h = 1e-6
    for d, e in enumerate(np.eye(2)):
        np.testing.assert_allclose(v.grad[:, d], (c(y + h * e).value - c(y - h * e).value) / (2 * h), atol=1e-8)
        np.testing.assert_allclose(v.hess[:, :, d], (c(y + h * e, 1).grad - c(y - h * e, 1).grad) / (2 * h),
                                   atol=1e-6)


def test_unknown_constraint_kind():
    with pytest.raises(ValueError):
        ConstraintWrapper("neumann")
