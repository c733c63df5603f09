import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from tubefold.errors import DomainError, FiniteSolution
from tubefold.geometry import (INFINITE, J_X, FoldParams, ZigzagState, alpha_beta,
                               intersection_vertex, local_frame, rotation_x,
                               sphere_intersection, sphere_point, state_from_vertices,
                               wrap_angle, zigzag_vertices)
from tubefold.integrable import tetrahedron_lengths

from conftest import EX1_STEP0

lengths = st.floats(0.3, 2.0)
thetas = st.floats(-math.pi, math.pi, exclude_min=True)


def _dist(a, b):
    return float(np.linalg.norm(a - b))


@st.composite
def fold_draw(draw, finite=True):
    l_L, l_R = draw(lengths), draw(lengths)
    lo, hi = abs(l_L - l_R) / 2, (l_L + l_R) / 2
    I = draw(st.floats(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo)))
    N = draw(st.integers(3, 10 ** 6)) if finite else INFINITE
    p = FoldParams(l_L, l_R, N, draw(lengths), draw(lengths), draw(lengths),
                   draw(st.sampled_from([1, -1])))
    return ZigzagState(draw(thetas), I), p


# -- wrap / state ----------------------------------------------------------------

@given(st.floats(-1e3, 1e3))
def test_wrap_angle_range(x):
    y = wrap_angle(x)
    assert -math.pi < y <= math.pi
    assert math.isclose(math.remainder(y - x, 2 * math.pi), 0.0, abs_tol=1e-9)


def test_wrap_angle_branch():
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(math.pi) == math.pi


def test_state_rejects_bad_values():
    with pytest.raises(DomainError):
        ZigzagState(4.0, 0.3)
    with pytest.raises(DomainError):
        ZigzagState(0.0, 0.0)


def test_fold_params_validation():
    with pytest.raises(DomainError):
        FoldParams(1, 1, 2, 1, 1, 1)
    with pytest.raises(DomainError):
        FoldParams(1, -1, 10, 1, 1, 1)
    with pytest.raises(DomainError):
        FoldParams(1, 1, 10, 1, 1, 1, sigma=0)
    assert FoldParams(0.8552, 0.9748, 10, 1, 1, 1).admissible_interval == pytest.approx(
        (0.0598, 0.915))


# -- alpha_beta -----------------------------------------------------------------------

def test_alpha_beta_symmetric():
    a, b = alpha_beta(0.5, 1.0, 1.0)
    assert a == pytest.approx(0.5)
    assert b == pytest.approx(math.sqrt(3) / 2, abs=1e-12)


def test_alpha_beta_boundary():
    with pytest.raises(DomainError):
        alpha_beta(1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        alpha_beta(0.0598, 0.8552, 0.9748)


def test_alpha_beta_law_of_cosines():
    # explicit planar triangle with U1 at the origin and U3 on the x axis
    I, lL, lR = 0.4, 0.8552, 0.9748
    x = (lL ** 2 + (2 * I) ** 2 - lR ** 2) / (2 * 2 * I)
    y = math.sqrt(lL ** 2 - x ** 2)
    u2 = np.array([x, y])
    assert math.hypot(*(u2 - [2 * I, 0])) == pytest.approx(lR, abs=1e-14)
    a, b = alpha_beta(I, lL, lR)
    ang = math.atan2(y, x)
    assert a == pytest.approx(math.cos(ang), abs=1e-14)
    assert b == pytest.approx(math.sin(ang), abs=1e-14)


@given(lengths, lengths, st.floats(0.001, 0.999))
def test_alpha_beta_ranges(lL, lR, frac):
    lo, hi = abs(lL - lR) / 2, (lL + lR) / 2
    I = lo + frac * (hi - lo)
    assume(lo + 1e-9 < I < hi - 1e-9)
    a, b = alpha_beta(I, lL, lR)
    assert -1 < a < 1
    assert 0 < b <= 1


# -- vertices and frame -------------------------------------------------------------

def test_vertices_square_case():
    p = FoldParams(1, 1, 4, 1, 1, 1)
    u1, _, u3, _ = zigzag_vertices(ZigzagState(0.0, 0.5), p)
    np.testing.assert_allclose(u1, [0, 0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(u3, [0, -0.5, 0.5], atol=1e-15)


def test_vertices_fig10_step0():
    p = FoldParams(N=100, **EX1_STEP0)
    u1, u2, u3, um = zigzag_vertices(ZigzagState(math.pi / 2, 0.3), p)
    assert _dist(u1, u2) == pytest.approx(0.75, abs=1e-12)
    assert _dist(u1, u3) == pytest.approx(0.6, abs=1e-12)
    assert _dist(u2, u3) == pytest.approx(0.75, abs=1e-12)


@given(fold_draw())
def test_vertex_invariants(draw):
    x, p = draw
    u1, u2, u3, um = zigzag_vertices(x, p)
    scale = max(1.0, float(np.abs(u1).max()))
    assert _dist(u1, u2) == pytest.approx(p.l_L, abs=1e-12 * scale)
    assert _dist(u2, u3) == pytest.approx(p.l_R, abs=1e-12 * scale)
    assert _dist(u1, u3) == pytest.approx(2 * x.action, abs=1e-12 * scale)
    np.testing.assert_allclose(rotation_x(2 * math.pi / p.N) @ u1, u3, atol=1e-12 * scale)
    # UM is the foot of U2 on the line U1U3
    t = float((um - u1) @ (u3 - u1)) / (2 * x.action) ** 2
    np.testing.assert_allclose(u1 + t * (u3 - u1), um, atol=1e-12 * scale)
    assert float((u2 - um) @ (u3 - u1)) == pytest.approx(0.0, abs=1e-10 * scale)


def test_vertices_need_finite_n():
    with pytest.raises(DomainError):
        zigzag_vertices(ZigzagState(0.0, 0.3), FoldParams(N=INFINITE, **EX1_STEP0))


def test_frame_axis_aligned():
    # alpha = 0, beta = 1 when 4I^2 = l_R^2 - l_L^2
    lL, lR = 1.0, math.sqrt(2.0)
    f = local_frame(ZigzagState(0.0, 0.5), FoldParams(lL, lR, 10, 1, 1, 1))
    np.testing.assert_allclose(f.e1, [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(f.e2, [0, -1, 0], atol=1e-15)
    np.testing.assert_allclose(f.e3, [0, 0, -1], atol=1e-15)


def test_frame_gram_matrix():
    f = local_frame(ZigzagState(1.1, 0.4), FoldParams(0.8552, 0.9748, 50, 1, 1, 1))
    B = np.array([f.e1, f.e2, f.e3])
    np.testing.assert_allclose(B @ B.T, np.eye(3), atol=1e-12)


@given(fold_draw())
def test_frame_right_handed(draw):
    x, p = draw
    f = local_frame(x, p)
    np.testing.assert_allclose(np.cross(f.e1, f.e2), f.e3, atol=1e-12)
    B = np.array([f.e1, f.e2, f.e3])
    np.testing.assert_allclose(B @ B.T, np.eye(3), atol=1e-12)


# -- sphere intersection ----------------------------------------------------------

def _residuals(x, p):
    u1, u2, u3, _ = zigzag_vertices(x, p)
    v = intersection_vertex(x, p)
    return [abs(_dist(v, u) - r) for u, r in ((u1, p.r1), (u2, p.r2), (u3, p.r3))]


def test_intersection_equal_radii():
    p = FoldParams(0.9, 1.1, 50, 0.8, 0.8, 1.0)
    assert sphere_intersection(ZigzagState(0.3, 0.5), p).e1 == pytest.approx(0.45)


def test_intersection_fig10_residuals():
    p = FoldParams(N=300, **EX1_STEP0)
    assert max(_residuals(ZigzagState(0.0, 0.35), p)) < 1e-10


def test_intersection_small_spheres():
    with pytest.raises(FiniteSolution):
        sphere_intersection(ZigzagState(0.0, 0.4), FoldParams(1, 1, 10, 0.01, 0.01, 0.01))


def test_intersection_branches_mirror():
    x = ZigzagState(0.2, 0.35)
    a = sphere_intersection(x, FoldParams(N=300, sigma=1, **EX1_STEP0))
    b = sphere_intersection(x, FoldParams(N=300, sigma=-1, **EX1_STEP0))
    assert (a.e1, a.e2) == (b.e1, b.e2)
    assert a.e3 == -b.e3 > 0


@given(fold_draw())
def test_intersection_residual_property(draw):
    x, p = draw
    try:
        res = sphere_intersection(x, p)
    except FiniteSolution:
        return
    assert res.gamma >= 0
    assert res.e3 == pytest.approx(p.sigma * math.sqrt(res.gamma))
    f = local_frame(x, p)
    # residuals measured from U1 (global coordinates carry I*cot(pi/N))
    alpha, beta = alpha_beta(x.action, p.l_L, p.l_R)
    w = res.e1 * f.e1 + res.e2 * f.e2 + res.e3 * f.e3
    d2 = p.l_L * f.e1
    d3 = np.array([0.0, -2 * x.action, 0.0])
    assert abs(np.linalg.norm(w) - p.r1) < 1e-10
    assert abs(np.linalg.norm(w - d2) - p.r2) < 1e-10
    assert abs(np.linalg.norm(w - d3) - p.r3) < 1e-10


@given(fold_draw(), st.integers(3, 10 ** 6))
def test_tetrahedron_edges_independent_of_theta_and_n(draw, N2):
    x, p = draw
    try:
        sphere_intersection(x, p)
    except FiniteSolution:
        return
    expected = tetrahedron_lengths(x.action, p)
    for theta, N in ((x.theta, p.N), (wrap_angle(x.theta + 1.0), N2)):
        q = FoldParams(p.l_L, p.l_R, N, p.r1, p.r2, p.r3, p.sigma)
        u1, u2, u3, _ = zigzag_vertices(ZigzagState(theta, x.action), q)
        v = intersection_vertex(ZigzagState(theta, x.action), q)
        got = (_dist(u1, u3), _dist(u1, u2), _dist(u2, u3),
               _dist(u1, v), _dist(u2, v), _dist(u3, v))
        scale = max(1.0, float(np.abs(u1).max()))
        np.testing.assert_allclose(got, expected, atol=1e-11 * scale)


# -- rotations and helpers ------------------------------------------------------------

def test_rotation_basics():
    np.testing.assert_allclose(rotation_x(0.0), np.eye(3))
    np.testing.assert_allclose(rotation_x(math.pi / 2) @ [0, 1, 0], [0, 0, 1], atol=1e-16)


@given(st.floats(-10, 10))
def test_rotation_orthogonal(a):
    R = rotation_x(a)
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-14)
    assert np.linalg.det(R) == pytest.approx(1.0)
    assert R[0, 0] == 1.0


def test_rotation_generator_expansion():
    errs = []
    for N in (3000, 6000):
        eps = 2 * math.pi / N
        errs.append(np.abs(rotation_x(eps) - (np.eye(3) + eps * J_X)).max())
    # second order: doubling N quarters the error
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=1e-3)
    assert errs[0] <= 0.5 * (2 * math.pi / 3000) ** 2 * 1.0001


def test_sphere_point_matches_frame_solution():
    x, p = ZigzagState(0.4, 0.3), FoldParams(N=50, sigma=-1, **EX1_STEP0)
    u1, u2, u3, _ = zigzag_vertices(x, p)
    v = sphere_point(u1, u2, u3, p.r1, p.r2, p.r3, p.sigma)
    np.testing.assert_allclose(v, intersection_vertex(x, p), atol=1e-12)
    assert sphere_point(u1, u2, u3, 0.01, 0.01, 0.01, 1) is None


@given(fold_draw())
def test_state_from_vertices_roundtrip(draw):
    x, p = draw
    assume(p.N < 10 ** 4)
    u1, u2, u3, _ = zigzag_vertices(x, p)
    y = state_from_vertices(u1, u2, u3)
    assert y.action == pytest.approx(x.action, abs=1e-9)
    assert abs(wrap_angle(y.theta - x.theta)) < 1e-7
