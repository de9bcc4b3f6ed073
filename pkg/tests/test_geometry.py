import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from rann_deeponet.errors import UnsupportedOrderError
from rann_deeponet.geometry import (
    SHAPES,
    Ellipse,
    IsoTriangle,
    Rectangle,
    boundary_points,
    c_field,
    contains,
    domain_from_params,
    rectangle_from_draws,
    sample_domain,
)


def winding_inside(vertices, pts):
    """Crossing-number point-in-polygon test, written independently of the package."""
    V = np.asarray(vertices)
    inside = np.zeros(len(pts), dtype=bool)
    for i in range(len(V)):
        (x1, y1), (x2, y2) = V[i], V[(i + 1) % len(V)]
        crosses = (y1 > pts[:, 1]) != (y2 > pts[:, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (pts[:, 1] - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (pts[:, 0] < x_at)
    return inside


def ellipse_inside(e, pts):
    R = np.array([[np.cos(e.theta), -np.sin(e.theta)], [np.sin(e.theta), np.cos(e.theta)]])
    local = (pts - [e.xc, e.yc]) @ R  # rotate back into the axis frame
    return (local[:, 0] / e.a) ** 2 + (local[:, 1] / e.b) ** 2 < 1.0


def test_rectangle_from_draws_hand_case():
    r = rectangle_from_draws([0.3, 0.1, 0.4, 0.2])
    assert (r.x_min, r.y_min, r.x_max, r.y_max) == (0.1, 0.2, 1.3, 1.4)
    assert r.area == pytest.approx(1.44)


def test_triangle_base_vertices():
    t = IsoTriangle(1.0, 1.8, 1.2, 1.6)
    (xl, yl), (xr, yr) = t.base_vertices
    assert (xl, xr) == pytest.approx((0.2, 1.8)) and yl == pytest.approx(0.6) and yr == pytest.approx(0.6)


def test_ellipse_centres_in_range():
    centres = np.array([[d.xc, d.yc] for d in (sample_domain("ellipse", [9, i]) for i in range(10_000))])
    assert np.all((centres >= 0.8) & (centres <= 1.2))


@pytest.mark.parametrize("shape", SHAPES)
def test_samples_fit_in_box(shape):
    for i in range(200):
        d = sample_domain(shape, [3, i])
        pts = boundary_points(d, 100)
        assert np.all((pts >= 0.0) & (pts <= 2.0))


def test_rectangle_spacing_uniform():
    r = Rectangle(0.1, 0.2, 1.3, 1.4)
    pts = boundary_points(r, 100)
    gaps = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
    np.testing.assert_allclose(gaps, r.perimeter / 100, rtol=1e-12)
    np.testing.assert_array_equal(pts[0], [0.1, 0.2])


def test_ellipse_start_depends_only_on_the_set():
    """A half-turn of the tilt describes the same ellipse and must give the same input."""
    for i in range(5):
        e = sample_domain("ellipse", [11, i])
        flipped = Ellipse(e.xc, e.yc, e.a, e.b, e.theta + np.pi)
        np.testing.assert_allclose(boundary_points(e, 100), boundary_points(flipped, 100), atol=1e-12)
        p0 = boundary_points(e, 100)[0]
        assert p0[1] == pytest.approx(e.yc, abs=1e-12) and p0[0] > e.xc


def test_ellipse_points_equally_spaced_in_arc_length():
    a, b = 0.7, 0.3
    e = Ellipse(1.0, 1.0, a, b, 0.4)
    pts = boundary_points(e, 50)
    R = np.array([[np.cos(0.4), -np.sin(0.4)], [np.sin(0.4), np.cos(0.4)]])
    local = (pts - 1.0) @ R
    s = np.unwrap(np.arctan2(local[:, 1] / b, local[:, 0] / a))
    s = np.append(s, s[0] + 2 * np.pi)
    speed = lambda t: np.hypot(a * np.sin(t), b * np.cos(t))
    arcs = [quad(speed, s[i], s[i + 1])[0] for i in range(50)]
    perim = quad(speed, 0, 2 * np.pi, limit=200)[0]
    np.testing.assert_allclose(arcs, perim / 50, rtol=1e-5)  # parametric grid interpolation


def test_circle_points_at_radius():
    pts = boundary_points(Ellipse(1.0, 1.0, 0.6, 0.6, 0.3), 100)
    assert np.abs(np.linalg.norm(pts - 1.0, axis=1) - 0.6).max() <= 1e-14


def test_ellipse_points_on_level_set():
    e = Ellipse(1.0, 1.0, 0.5, 0.3, np.pi / 6)
    pts = boundary_points(e, 100)
    val = e.smooth(pts[:, 0], pts[:, 1])[0]
    assert np.abs(val).max() <= 1e-12


def test_boundary_points_counterclockwise():
    for shape in SHAPES:
        pts = boundary_points(sample_domain(shape, 4), 100)
        x, y = pts[:, 0], pts[:, 1]
        assert np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)) > 0


def test_ellipse_centre_value_and_rectangle_values():
    e = Ellipse(1.1, 0.9, 0.5, 0.4, 1.0)
    assert c_field(e, 1.1, 0.9).value[0] == 1.0
    r = Rectangle(0.2, 0.4, 1.4, 1.2)
    assert c_field(r, 0.2, 0.4).value[0] == 0.0
    assert c_field(r, 0.8, 0.8).value[0] == pytest.approx(0.6 ** 2 * 0.4 ** 2)


def all_domains():
    return [sample_domain(s, [7, i]) for i in range(4) for s in SHAPES]


@pytest.mark.parametrize("dom", all_domains(), ids=lambda d: d.shape)
def test_cutoff_zero_on_boundary_and_positive_inside(dom):
    pts = boundary_points(dom, 10_000)
    assert np.abs(c_field(dom, pts[:, 0], pts[:, 1]).value).max() <= 1e-12
    cx, cy = dom.centroid
    assert c_field(dom, cx, cy).value[0] > 0 and contains(dom, cx, cy)
    assert not contains(dom, -5.0, -5.0)


@pytest.mark.parametrize("dom", all_domains(), ids=lambda d: d.shape)
def test_contains_iff_positive_and_oracle(dom):
    pts = np.random.default_rng(0).uniform(0, 2, (100_000, 2))
    inside = contains(dom, pts[:, 0], pts[:, 1])
    c = c_field(dom, pts[:, 0], pts[:, 1]).value
    assert np.all(c >= 0)
    np.testing.assert_array_equal(inside, c > 0)
    ref = ellipse_inside(dom, pts) if dom.shape == "ellipse" else winding_inside(dom.vertices(), pts)
    np.testing.assert_array_equal(inside, ref)


@pytest.mark.parametrize("dom", all_domains()[:3], ids=lambda d: d.shape)
def test_cutoff_derivatives_match_finite_differences(dom):
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 2, (4000, 2))
    pts = pts[contains(dom, pts[:, 0], pts[:, 1])][:100]
    v = c_field(dom, pts[:, 0], pts[:, 1], order=2)
    for d, e in enumerate(np.eye(2)):
        hg, hh = 1e-6, 1e-4
        p, m = pts + hg * e, pts - hg * e
        g_fd = (dom.smooth(p[:, 0], p[:, 1])[0] - dom.smooth(m[:, 0], m[:, 1])[0]) / (2 * hg)
        assert np.linalg.norm(v.grad[:, d] - g_fd) <= 1e-6 * np.linalg.norm(v.grad[:, d])
        p, m = pts + hh * e, pts - hh * e
        H_fd = (dom.smooth(p[:, 0], p[:, 1], 1)[1] - dom.smooth(m[:, 0], m[:, 1], 1)[1]) / (2 * hh)
        assert np.linalg.norm(v.hess[:, :, d] - H_fd) <= 1e-4 * np.linalg.norm(v.hess[:, :, d])


def test_outside_derivatives_are_zero():
    r = Rectangle(0.5, 0.5, 1.5, 1.5)
    v = c_field(r, [0.1, 1.9], [0.1, 1.0], order=2)
    assert np.all(v.value == 0) and np.all(v.grad == 0) and np.all(v.hess == 0)


@given(st.floats(1.5, 2.0), st.floats(0.9, 1.5), st.floats(1.2, 2.0), st.permutations([0, 1, 2]))
def test_triangle_cutoff_label_invariant(y_v, h, b, perm):
    from rann_deeponet.geometry import _linear_product, triangle_factors
    t = IsoTriangle(1.0, y_v, h, b)
    pts = np.random.default_rng(2).uniform(0, 2, (50, 2))
    ref = t.smooth(pts[:, 0], pts[:, 1])[0]
    n, o = triangle_factors(t.vertices()[list(perm)])
    alt = _linear_product(n, o, pts[:, 0], pts[:, 1], 0)[0]
    assert np.abs(alt - ref).max() <= 1e-14


def test_order_and_param_errors():
    with pytest.raises(UnsupportedOrderError):
        c_field(Rectangle(0, 0, 1, 1), 0.5, 0.5, order=3)
    with pytest.raises(ValueError):
        Rectangle(1, 0, 0, 1)
    with pytest.raises(ValueError):
        Ellipse(1, 1, -0.1, 0.2, 0)


@pytest.mark.parametrize("shape", SHAPES)
def test_params_round_trip(shape):
    d = sample_domain(shape, 5)
    assert domain_from_params(d.type_code, d.params()) == d
