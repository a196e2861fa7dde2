"""Domains: defining functions, signed distance, projection, frames, quadrature."""

import math

import numpy as np
import pytest

import poisskern as pk
from poisskern.geometry import _ellipse_feet, as_point


# ---------------------------------------------------------------------------
# point validation


def test_as_point_accepts_lists_and_rejects_bad_shapes():
    p = as_point([1.0, 2.0])
    assert p.shape == (2,) and p.dtype == np.float64
    with pytest.raises(pk.DimensionMismatchError):
        as_point([[1.0, 2.0]])
    with pytest.raises(pk.DimensionMismatchError):
        as_point([1.0, 2.0], dim=3)
    with pytest.raises(pk.InvalidInputError):
        as_point([1.0, np.nan])


# ---------------------------------------------------------------------------
# balls


def test_ball_defining_function_and_membership():
    b = pk.Ball(2, center=[1.0, -2.0], radius=3.0)
    assert b.rho([1.0, -2.0]) == -3.0
    assert b.rho([4.0, -2.0]) == 0.0
    assert b.contains([1.0, 0.0])
    assert not b.contains([5.0, -2.0])
    assert b.signed_distance([1.0, 1.0]) == 0.0
    assert b.signed_distance([1.0, -1.0]) == -2.0
    np.testing.assert_allclose(b.rho_grad([4.0, -2.0]), [1.0, 0.0])
    np.testing.assert_allclose(b.rho_hess([4.0, -2.0]), [[0.0, 0.0], [0.0, 1.0 / 3.0]])
    assert b.diameter() == 6.0 and b.bounded()


def test_ball_projection_and_center_tie():
    b = pk.Ball(2)
    foot, nu = b.project_to_boundary([0.5, 0.0])
    np.testing.assert_allclose(foot, [1.0, 0.0])
    np.testing.assert_allclose(nu, [-1.0, 0.0])
    foot, nu = b.project_to_boundary([3.0, 4.0])
    np.testing.assert_allclose(foot, [0.6, 0.8])
    with pytest.raises(pk.ProjectionAmbiguityError):
        b.project_to_boundary([0.0, 0.0])
    foot, _ = b.project_to_boundary([0.0, 0.0], tie_break=[0.0, -2.0])
    np.testing.assert_allclose(foot, [0.0, -1.0])


def test_ball_batch_matches_scalar():
    b = pk.Ball(3, center=[0.0, 1.0, 0.0], radius=2.0)
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    feet, nus = b.project_batch(X)
    sd = b.signed_distance_batch(X)
    for i in range(40):
        f, n = b.project_to_boundary(X[i])
        np.testing.assert_allclose(feet[i], f)
        np.testing.assert_allclose(nus[i], n)
        assert sd[i] == pytest.approx(b.signed_distance(X[i]), abs=1e-14)


def test_ball_validation():
    with pytest.raises(pk.InvalidInputError):
        pk.Ball(2, radius=0.0)
    with pytest.raises(pk.InvalidInputError):
        pk.Ball(2, radius=-1.0)
    with pytest.raises(pk.InvalidInputError):
        pk.Ball()


# ---------------------------------------------------------------------------
# halfspaces


def test_halfspace_geometry():
    h = pk.Halfspace(3)
    assert h.rho([0.0, 0.0, 2.0]) == -2.0
    assert h.contains([1.0, 1.0, 0.1])
    assert not h.contains([0.0, 0.0, -0.1])
    assert h.signed_distance([5.0, -2.0, 0.7]) == -0.7
    foot, nu = h.project_to_boundary([3.0, 4.0, 5.0])
    np.testing.assert_allclose(foot, [3.0, 4.0, 0.0])
    np.testing.assert_allclose(nu, [0.0, 0.0, 1.0])
    assert h.diameter() == math.inf and not h.bounded()


# ---------------------------------------------------------------------------
# ellipses


def test_ellipse_feet_against_dense_boundary_sampling():
    a, b = 2.0, 1.0
    theta = np.linspace(0.0, 2.0 * np.pi, 400001)
    boundary = np.stack([a * np.cos(theta), b * np.sin(theta)], axis=1)
    rng = np.random.default_rng(1)
    pts = np.stack(
        [rng.uniform(-3.0, 3.0, size=60), rng.uniform(-2.0, 2.0, size=60)], axis=1
    )
    feet, _, dist, _ = _ellipse_feet(pts, a, b)
    on_curve = (feet[:, 0] / a) ** 2 + (feet[:, 1] / b) ** 2 - 1.0
    assert np.abs(on_curve).max() < 1e-12
    for i in range(60):
        brute = np.min(np.hypot(boundary[:, 0] - pts[i, 0], boundary[:, 1] - pts[i, 1]))
        assert dist[i] <= brute + 1e-12
        assert dist[i] == pytest.approx(brute, abs=1e-7)


def test_ellipse_feet_near_major_axis_converge():
    # the regime where the unshifted multiplier iteration loses precision
    pts = np.array([[1.2, 1e-13], [0.8, -1e-9], [-0.5, 1e-6], [1.49, 0.0]])
    feet, _, dist, _ = _ellipse_feet(pts, 2.0, 1.0)
    on_curve = (feet[:, 0] / 2.0) ** 2 + feet[:, 1] ** 2 - 1.0
    assert np.abs(on_curve).max() < 1e-12
    assert np.all(dist > 0.0)


def test_ellipse_on_axis_branches():
    e = pk.Ellipse([2.0, 1.0])
    # beyond the evolute cusp (|x| >= (a^2-b^2)/a = 1.5): vertex is nearest
    foot, _ = e.project_to_boundary([1.7, 0.0])
    np.testing.assert_allclose(foot, [2.0, 0.0])
    # inside the cusp: nearest points leave the axis; a tie across the axis
    with pytest.raises(pk.ProjectionAmbiguityError):
        e.project_to_boundary([0.5, 0.0])
    foot, _ = e.project_to_boundary([0.5, 0.0], tie_break=[0.0, 1.0])
    assert foot[1] > 0.0
    np.testing.assert_allclose(foot, [2.0 / 3.0, np.sqrt(1 - 1.0 / 9.0)], atol=1e-12)
    # center ties across the minor axis
    with pytest.raises(pk.ProjectionAmbiguityError):
        e.project_to_boundary([0.0, 0.0])
    foot, _ = e.project_to_boundary([0.0, 0.0], tie_break=[1.0, -1.0])
    np.testing.assert_allclose(foot, [0.0, -1.0])


def test_ellipse_signed_distance_signs_and_normals():
    e = pk.Ellipse([2.0, 1.0])
    assert e.signed_distance([0.0, 0.5]) == pytest.approx(-0.5)
    assert e.signed_distance([3.0, 0.0]) == pytest.approx(1.0)
    foot, nu = e.project_to_boundary([0.0, 2.0])
    np.testing.assert_allclose(foot, [0.0, 1.0])
    np.testing.assert_allclose(nu, [0.0, -1.0])
    # inward normal is parallel to -grad(rho) at the foot
    foot, nu = e.project_to_boundary([1.9, 0.4])
    g = e.rho_grad(foot)
    np.testing.assert_allclose(nu, -g / np.linalg.norm(g))


def test_ellipse_axis_swap_and_validation():
    tall = pk.Ellipse([1.0, 2.0])
    foot, _ = tall.project_to_boundary([0.0, 1.7])
    np.testing.assert_allclose(foot, [0.0, 2.0])
    with pytest.raises(pk.InvalidInputError):
        pk.Ellipse([1.0, 1.0])
    with pytest.raises(pk.DomainUnsupportedError):
        pk.Ellipse([3.0, 2.0, 1.0])
    with pytest.raises(pk.InvalidInputError):
        pk.Ellipse([2.0, -1.0])


def test_ellipse_parametrization_helpers():
    e = pk.Ellipse([2.0, 1.0])
    np.testing.assert_allclose(e.boundary_point(0.0), [2.0, 0.0])
    np.testing.assert_allclose(e.boundary_point(np.pi / 2), [0.0, 1.0], atol=1e-15)
    assert e.boundary_speed(0.0) == pytest.approx(1.0)  # |(-a sin, b cos)| at 0
    assert e.boundary_speed(np.pi / 2) == pytest.approx(2.0)
    assert e.min_curvature_radius() == pytest.approx(0.5)  # b^2/a
    assert e.diameter() == 4.0


# ---------------------------------------------------------------------------
# implicit domains


def _ellipse_implicit():
    return pk.ImplicitPolynomial(
        {(2, 0): 0.25, (0, 2): 1.0, (0, 0): -1.0},
        bounding_box=[[-2.5, -1.5], [2.5, 1.5]],
        interior_point=[0.0, 0.0],
    )


def test_implicit_polynomial_matches_exact_ellipse():
    imp = _ellipse_implicit()
    exact = pk.Ellipse([2.0, 1.0])
    rng = np.random.default_rng(3)
    pts = np.stack([rng.uniform(-2.4, 2.4, 25), rng.uniform(-1.4, 1.4, 25)], axis=1)
    # keep clear of the medial axis, where ties are legitimate
    pts = pts[np.abs(pts[:, 1]) > 0.05]
    for p in pts:
        sd_imp = imp.signed_distance(p)
        sd_exact = exact.signed_distance(p)
        assert sd_imp == pytest.approx(sd_exact, abs=1e-9)
        f_imp, n_imp = imp.project_to_boundary(p)
        f_exact, n_exact = exact.project_to_boundary(p)
        np.testing.assert_allclose(f_imp, f_exact, atol=1e-8)
        np.testing.assert_allclose(n_imp, n_exact, atol=1e-8)


def test_implicit_polynomial_gradient_and_hessian_are_exact():
    imp = _ellipse_implicit()
    x = np.array([0.7, -0.3])
    np.testing.assert_allclose(imp.rho_grad(x), [0.5 * 0.7, 2.0 * (-0.3)])
    np.testing.assert_allclose(imp.rho_hess(x), [[0.5, 0.0], [0.0, 2.0]])
    np.testing.assert_allclose(
        imp.rho_batch(np.array([[0.0, 0.0], [2.0, 0.0]])), [-1.0, 0.0]
    )


def test_implicit_detects_ambiguous_projection():
    imp = _ellipse_implicit()
    with pytest.raises(pk.ProjectionAmbiguityError):
        imp.project_to_boundary([0.0, 0.0])
    foot, _ = imp.project_to_boundary([0.0, 0.0], tie_break=[0.0, 1.0])
    np.testing.assert_allclose(foot, [0.0, 1.0], atol=1e-9)


def test_implicit_validation():
    with pytest.raises(pk.InvalidInputError):
        pk.Implicit(
            rho=lambda x: float(x[0] ** 2 + x[1] ** 2 - 1),
            grad=lambda x: 2 * x,
            bounding_box=[[-2.0, -2.0], [2.0, 2.0]],
            interior_point=[5.0, 5.0],  # outside the box
        )
    with pytest.raises(pk.InvalidInputError):
        pk.Implicit(
            rho=lambda x: float(x[0] ** 2 + x[1] ** 2 - 1),
            grad=lambda x: 2 * x,
            bounding_box=[[-2.0, -2.0], [2.0, 2.0]],
            interior_point=[1.5, 0.0],  # not actually interior
        )
    with pytest.raises(pk.InvalidInputError):
        pk.ImplicitPolynomial(
            {(2, 0): 1.0},
            bounding_box=[[0.0, 0.0], [0.0, 1.0]],  # degenerate box
            interior_point=[0.0, 0.5],
        )


def test_implicit_ball_in_three_dimensions():
    imp = pk.Implicit(
        rho=lambda x: float(np.dot(x, x) - 1.0),
        grad=lambda x: 2.0 * np.asarray(x, dtype=float),
        hess=lambda x: 2.0 * np.eye(3),
        bounding_box=[[-1.5] * 3, [1.5] * 3],
        interior_point=[0.0, 0.0, 0.0],
    )
    sd = imp.signed_distance([0.5, 0.0, 0.0])
    assert sd == pytest.approx(-0.5, abs=1e-9)
    foot, nu = imp.project_to_boundary([0.0, 0.25, 0.0])
    np.testing.assert_allclose(foot, [0.0, 1.0, 0.0], atol=1e-9)
    np.testing.assert_allclose(nu, [0.0, -1.0, 0.0], atol=1e-9)


# ---------------------------------------------------------------------------
# frames and rotations


def test_rotation_to_last_axis_properties():
    rng = np.random.default_rng(8)
    for dim in (2, 3, 4, 6):
        for _ in range(20):
            nu = rng.normal(size=dim)
            nu /= np.linalg.norm(nu)
            Q = pk.rotation_to_last_axis(nu)
            np.testing.assert_allclose(Q @ Q.T, np.eye(dim), atol=1e-12)
            assert np.linalg.det(Q) == pytest.approx(1.0, abs=1e-10)
            np.testing.assert_allclose(Q @ nu, np.eye(dim)[-1], atol=1e-12)


def test_rotation_reference_value_on_disc():
    # inward normal (-1, 0) at base (1, 0) maps to +e2 via [[0,1],[-1,0]]
    Q = pk.rotation_to_last_axis(np.array([-1.0, 0.0]))
    np.testing.assert_allclose(Q, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-15)


def test_boundary_frame_construction_and_validation():
    d = pk.Ball(2)
    fr = pk.boundary_frame(d, [1.0, 0.0], 0.1)
    np.testing.assert_allclose(fr.base, [1.0, 0.0])
    np.testing.assert_allclose(fr.inward_normal, [-1.0, 0.0])
    assert fr.epsilon == 0.1
    np.testing.assert_allclose(fr.rotation @ fr.inward_normal, [0.0, 1.0], atol=1e-15)
    with pytest.raises(pk.InvalidInputError):
        pk.boundary_frame(d, [0.5, 0.0], 0.1)  # not a boundary point
    with pytest.raises(pk.InvalidInputError):
        pk.boundary_frame(d, [1.0, 0.0], 0.0)
    with pytest.raises(pk.InvalidInputError):
        pk.boundary_frame(d, [1.0, 0.0], 3.0)  # probe point escapes the domain


def test_boundary_frame_dataclass_validation():
    with pytest.raises(pk.InvalidInputError):
        pk.BoundaryFrame(
            base=np.array([1.0, 0.0]),
            inward_normal=np.array([-2.0, 0.0]),  # not unit
            rotation=np.eye(2),
            epsilon=0.1,
        )
    with pytest.raises(pk.InvalidInputError):
        pk.BoundaryFrame(
            base=np.array([1.0, 0.0]),
            inward_normal=np.array([-1.0, 0.0]),
            rotation=np.eye(2),  # does not send nu to e2
            epsilon=0.1,
        )
    with pytest.raises(pk.InvalidInputError):
        pk.BoundaryFrame(
            base=np.array([1.0, 0.0]),
            inward_normal=np.array([-1.0, 0.0]),
            rotation=np.array([[0.0, 1.0], [1.0, 0.0]]),  # reflection, det -1
            epsilon=0.1,
        )


def test_boundary_frame_on_ellipse_and_implicit():
    e = pk.Ellipse([2.0, 1.0])
    fr = pk.boundary_frame(e, [0.0, 1.0], 0.05)
    np.testing.assert_allclose(fr.inward_normal, [0.0, -1.0], atol=1e-15)
    imp = _ellipse_implicit()
    fri = pk.boundary_frame(imp, [0.0, 1.0], 0.05)
    np.testing.assert_allclose(fri.inward_normal, [0.0, -1.0], atol=1e-12)


# ---------------------------------------------------------------------------
# quadrature


def test_quadrature_rule_container():
    nodes = np.array([[1.0, 0.0], [0.0, 1.0]])
    rule = pk.QuadratureRule(nodes=nodes, weights=np.array([0.5, 0.5]), spacing=1.0)
    assert len(rule) == 2
    pairs = list(rule)
    np.testing.assert_allclose(pairs[0][0], [1.0, 0.0])
    assert pairs[1][1] == 0.5
    assert rule.total == 1.0
    with pytest.raises(pk.InvalidInputError):
        pk.QuadratureRule(nodes=nodes, weights=np.array([0.5, -0.5]), spacing=1.0)
    with pytest.raises(pk.DimensionMismatchError):
        pk.QuadratureRule(nodes=nodes, weights=np.array([0.5]), spacing=1.0)


def test_circle_quadrature_exactness():
    d = pk.Ball(2, center=[1.0, 2.0], radius=3.0)
    rule = pk.boundary_quadrature(d, 64)
    assert rule.total == pytest.approx(2 * np.pi * 3.0, rel=1e-15)
    assert np.allclose(np.hypot(rule.nodes[:, 0] - 1.0, rule.nodes[:, 1] - 2.0), 3.0)
    # trapezoid rule on the circle integrates low harmonics exactly
    integral = np.sum(rule.weights * (rule.nodes[:, 0] - 1.0) ** 2)
    assert integral == pytest.approx(np.pi * 3.0**3, rel=1e-13)


def test_sphere_quadrature_exactness():
    b = pk.Ball(3, center=[0.0, 0.0, 1.0], radius=2.0)
    rule = pk.boundary_quadrature(b, 24)
    assert rule.total == pytest.approx(4 * np.pi * 4.0, rel=1e-13)
    # smooth polynomial integrates to its exact surface integral
    z = rule.nodes[:, 2] - 1.0
    assert np.sum(rule.weights * z**2) == pytest.approx(4 * np.pi * 16.0 / 3.0, rel=1e-12)


def test_ellipse_quadrature_perimeter():
    e = pk.Ellipse([2.0, 1.0])
    rule = pk.boundary_quadrature(e, 256)
    assert rule.total == pytest.approx(9.688448220547675, abs=1e-12)
    on_curve = (rule.nodes[:, 0] / 2.0) ** 2 + rule.nodes[:, 1] ** 2 - 1.0
    assert np.abs(on_curve).max() < 1e-14


def test_halfspace_quadrature_requires_truncation():
    h = pk.Halfspace(2)
    with pytest.raises(pk.InvalidInputError):
        pk.boundary_quadrature(h, 64)
    rule = pk.boundary_quadrature(h, 64, truncation=10.0)
    assert rule.total == pytest.approx(20.0, rel=1e-13)
    assert np.all(rule.nodes[:, 1] == 0.0)
    h3 = pk.Halfspace(3)
    rule3 = pk.boundary_quadrature(h3, 32, truncation=5.0)
    assert rule3.total == pytest.approx(np.pi * 25.0, rel=1e-12)


def test_quadrature_resolution_floor_and_unsupported_domains():
    d = pk.Ball(2)
    with pytest.raises(pk.InvalidInputError):
        pk.boundary_quadrature(d, 4)
    with pytest.raises(pk.DomainUnsupportedError):
        pk.boundary_quadrature(_ellipse_implicit(), 64)
    with pytest.raises(pk.DomainUnsupportedError):
        pk.boundary_quadrature(pk.Ball(4), 16)


def test_domain_descriptors_round_trip_core_fields():
    assert pk.Ball(2).descriptor() == {
        "kind": "ball",
        "dim": 2,
        "center": [0.0, 0.0],
        "radius": 1.0,
    }
    assert pk.Halfspace(3).descriptor() == {"kind": "halfspace", "dim": 3}
    desc = pk.Ellipse([2.0, 1.0]).descriptor()
    assert desc["kind"] == "ellipse" and desc["semi_axes"] == [2.0, 1.0]
