"""Circle packing pipeline: radii, planar layout, spherical lift, ball configs.

The layout checks below recompute tangency/orthogonality/through-point
conditions directly from the raw circle data, independently of the library's
own residual helpers.
"""
import math

import numpy as np
import pytest

from conftest import CANONICAL_MARKS, ball_solution, get_seed
from midscribe import assemble_residual
from midscribe.bodies import make_body
from midscribe.mobius import is_infinity, lift_to_sphere, sphere_chart
from midscribe.packing import (
    koebe_config,
    layout_circles,
    lift_normalize,
    planar_pattern_residuals,
    solve_radii,
    spherical_pattern_residuals,
)
from midscribe.seeds import SEED_NAMES


def on_circle(c, z):
    if c.kind == "line":
        return abs(((z - c.point) / c.direction).imag)
    return abs(abs(z - c.center) - c.radius)


def tangency_error(c1, c2):
    if c1.kind == "line" and c2.kind == "line":
        return abs((c1.direction / c2.direction).imag)  # parallel lines
    if c1.kind == "line":
        c1, c2 = c2, c1
    if c2.kind == "line":
        dist = abs(((c1.center - c2.point) / c2.direction).imag)
        return abs(dist - c1.radius)
    d = abs(c1.center - c2.center)
    return min(abs(d - (c1.radius + c2.radius)),
               abs(d - abs(c1.radius - c2.radius)))


def orthogonality_error(c1, c2):
    if c1.kind == "line" and c2.kind == "line":
        return abs((c1.direction / c2.direction).real)  # perpendicular
    if c1.kind == "line":
        c1, c2 = c2, c1
    if c2.kind == "line":
        return abs(((c1.center - c2.point) / c2.direction).imag)
    d2 = abs(c1.center - c2.center) ** 2
    return abs(d2 - c1.radius ** 2 - c2.radius ** 2) / max(1.0, d2)


@pytest.fixture(scope="module", params=SEED_NAMES)
def planar(request):
    P, _, frame = get_seed(request.param)
    radii = solve_radii(P, frame)
    return P, frame, radii, layout_circles(P, frame, radii)


def test_radius_targets_are_pi_or_two_pi(planar):
    _, _, radii, _ = planar
    for target in radii.targets.values():
        assert min(abs(target - math.pi), abs(target - 2 * math.pi)) < 1e-12
    assert radii.residual < 1e-12


def test_layout_geometry(planar):
    P, _, _, pat = planar
    for e in range(P.n_edges):
        u, v = P.edge_vertices(e)
        f, g = P.faces_of_edge(e)
        cu, cv = pat.vertex_circles[u], pat.vertex_circles[v]
        cf, cg = pat.face_circles[f], pat.face_circles[g]
        t = pat.tangency[e]
        if t is not None and not is_infinity(t):
            for c in (cu, cv, cf, cg):
                assert on_circle(c, t) < 1e-9
        assert tangency_error(cu, cv) < 1e-9
        assert tangency_error(cf, cg) < 1e-9
        for cvert in (cu, cv):
            for cface in (cf, cg):
                assert orthogonality_error(cvert, cface) < 1e-9


def test_library_residuals_agree(planar):
    P, frame, _, pat = planar
    res = planar_pattern_residuals(pat)
    assert max(res.values()) < 1e-9
    sph = lift_normalize(pat, CANONICAL_MARKS)
    sres = spherical_pattern_residuals(sph)
    assert max(sres.values()) < 1e-9


def test_tetrahedron_closed_form_layout():
    P, _, frame = get_seed("tetrahedron")
    radii = solve_radii(P, frame)
    # by symmetry all four finite circles have radius 1
    for key, lr in radii.log_radii.items():
        assert abs(lr) < 1e-12, key
    pat = layout_circles(P, frame, radii)
    finite_v = {k: c for k, c in pat.vertex_circles.items() if c.kind == "circle"}
    finite_f = {k: c for k, c in pat.face_circles.items() if c.kind == "circle"}
    assert len(finite_v) == 2 and len(finite_f) == 2
    centers_v = sorted((c.center.real, c.center.imag) for c in finite_v.values())
    centers_f = sorted((c.center.real, c.center.imag) for c in finite_f.values())
    assert np.allclose(centers_v, [(1, 0), (1, 2)], atol=1e-9)
    assert np.allclose(centers_f, [(0, 1), (2, 1)], atol=1e-9)
    assert pat.box_width == pytest.approx(2.0, abs=1e-9)
    assert pat.box_height == pytest.approx(2.0, abs=1e-9)
    finite_t = sorted(
        (z.real, z.imag) for z in pat.tangency.values() if not is_infinity(z))
    assert np.allclose(finite_t,
                       sorted([(0, 0), (2, 0), (0, 2), (2, 2), (1, 1)]),
                       atol=1e-9)


def test_wall_edge_tangency_at_infinity(planar):
    P, frame, _, pat = planar
    assert is_infinity(pat.tangency[frame.edges[0]])
    assert sum(1 for z in pat.tangency.values() if is_infinity(z)) == 1


@pytest.mark.parametrize("marks", [CANONICAL_MARKS, (0.5 + 0.5j, -1 + 0j, 3j)])
def test_spherical_marks_placement(marks):
    P, _, frame = get_seed("cube")
    pat = layout_circles(P, frame, solve_radii(P, frame))
    sph = lift_normalize(pat, marks)
    for e, z in zip(frame.edges, marks):
        assert abs(sphere_chart(sph.tangency[e]) - z) < 1e-8


def test_spherical_caps_through_tangency_points():
    P, _, frame = get_seed("octahedron")
    pat = layout_circles(P, frame, solve_radii(P, frame))
    sph = lift_normalize(pat, CANONICAL_MARKS)
    for e in range(P.n_edges):
        t = sph.tangency[e]
        assert abs(np.linalg.norm(t) - 1) < 1e-12
        u, v = P.edge_vertices(e)
        f, g = P.faces_of_edge(e)
        for cap in (sph.vertex_caps[u], sph.vertex_caps[v],
                    sph.face_caps[f], sph.face_caps[g]):
            assert abs(cap.n @ t - cap.d) < 1e-9
        # tangent circles at t: cap normals and t are coplanar
        nu, nv = sph.vertex_caps[u].n, sph.vertex_caps[v].n
        assert abs(np.linalg.det(np.array([nu, nv, t]))) < 1e-9
        nf, ng = sph.face_caps[f].n, sph.face_caps[g].n
        assert abs(np.linalg.det(np.array([nf, ng, t]))) < 1e-9


def test_orthogonal_caps_identity():
    # caps cross at right angles iff <n1,n2> = d1*d2 on the unit sphere
    P, _, frame = get_seed("cube")
    pat = layout_circles(P, frame, solve_radii(P, frame))
    sph = lift_normalize(pat, CANONICAL_MARKS)
    for v in range(P.n_vertices):
        cv = sph.vertex_caps[v]
        for f in P.vertex_faces[v]:
            cf = sph.face_caps[f]
            assert abs(cv.n @ cf.n - cv.d * cf.d) < 1e-9


def test_mark_changes_are_mobius_related():
    def chart_tangencies(marks):
        P, _, frame = get_seed("triangular_prism")
        pat = layout_circles(P, frame, solve_radii(P, frame))
        sph = lift_normalize(pat, marks)
        return [sphere_chart(sph.tangency[e]) for e in range(P.n_edges)]

    def cross_ratio(z1, z2, z3, z4):
        return (z1 - z3) * (z2 - z4) / ((z1 - z4) * (z2 - z3))

    za = chart_tangencies(CANONICAL_MARKS)
    zb = chart_tangencies((2 - 1j, 0.5j, -3 + 0j))
    for quad in ((0, 1, 2, 3), (1, 3, 5, 7), (0, 2, 4, 8)):
        ca = cross_ratio(*(za[i] for i in quad))
        cb = cross_ratio(*(zb[i] for i in quad))
        assert abs(ca - cb) < 1e-8


@pytest.mark.parametrize("name", SEED_NAMES)
def test_koebe_config_satisfies_ball_system(name):
    P, _, frame = get_seed(name)
    cfg = ball_solution(name)
    r = assemble_residual(cfg, make_body("ball"), P, frame, cfg.marked_points)
    assert np.max(np.abs(r)) < 1e-9


def test_solve_radii_deterministic():
    P, _, frame = get_seed("dodecahedron")
    a = solve_radii(P, frame)
    b = solve_radii(P, frame)
    assert a.log_radii == b.log_radii
    assert a.pinned == b.pinned
