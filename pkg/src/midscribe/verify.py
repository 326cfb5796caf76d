"""Independent checks of a solved configuration.

Everything here recomputes geometry from the face planes alone: edge lines
come from plane intersections, tangency is re-established by minimizing the
gauge along each full line, and the two disk packings are traced on the body
surface by root finding. Solver residuals are never consulted, so a
configuration that merely claims convergence does not pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bodies import (BodyChart, BodyPath, ConvexBody, _any_unit_orthogonal,
                     _radial_boundary_point, chart_inverse)
from .combinatorics import Frame, PolyhedralComplex
from .config import EPS_INFINITY, Configuration
from .errors import DegenerateConfiguration, NotMidscribed, SolverError
from .solver import ConstraintSystem, _newton_core, continue_to_body

TANGENCY_TOL = 1e-9
SIDE_TOL = 1e-9
CONTACT_TOL = 1e-7
CONTACT_POSITION_TOL = 1e-4
N_BOUNDARY_SAMPLES = 256


@dataclass
class VerifyReport:
    """Residuals and classifications; serialized keys match the field names."""

    max_tangency_residual: float
    max_incidence_residual: float
    combinatorics_ok: bool
    convexity: str
    contact_graph_primal_ok: bool | None
    contact_graph_dual_ok: bool | None
    per_edge: list
    per_vertex: list
    tol: float = TANGENCY_TOL

    @property
    def midscribed(self) -> bool:
        return (self.combinatorics_ok
                and self.max_tangency_residual < self.tol
                and self.max_incidence_residual < self.tol)

    @property
    def passed(self) -> bool:
        if not self.midscribed:
            return False
        return (self.contact_graph_primal_ok is not False
                and self.contact_graph_dual_ok is not False)


@dataclass(frozen=True)
class KDisk:
    """A disk on the body boundary, owned by a face or a vertex.

    Face disks are cut out by the face plane; vertex disks are the region
    visible from the vertex (for a vertex at infinity, the limit region whose
    outward normals have nonnegative component along the vertex direction,
    flagged by at_infinity).
    """

    kind: str
    owner: int
    boundary_samples: np.ndarray
    plane: tuple | None = None
    apex: np.ndarray | None = None
    at_infinity: bool = False


@dataclass
class DiskPacking:
    disks: list
    contacts_ok: bool
    nondegenerate: bool
    max_adjacent_gap: float
    worst_position_error: float
    max_foreign_margin: float


@dataclass
class RigidityReport:
    n_starts: int
    n_converged: int
    max_pairwise_distance: float
    base_residual: float


# ---------------------------------------------------------------------------
# midscription

def _line_minimum(body: ConvexBody, n_f, d_f, n_g, d_g, guess):
    """Global minimum of the gauge along the intersection line of two planes.

    Returns (min value, minimizer). The guess only seeds the bracket; the
    restriction of a strictly convex coercive gauge to a line is strictly
    convex, so the minimum is unique and bracketing cannot miss it.
    """
    u = np.cross(n_f, n_g)
    nu = float(np.linalg.norm(u))
    if nu < 1e-12:
        return math.inf, np.full(3, np.nan)
    u = u / nu
    A = np.vstack([n_f, n_g])
    q = np.linalg.lstsq(A, np.array([d_f, d_g]), rcond=None)[0]

    def slope(t):
        return float(body.gradient(q + t * u) @ u)

    t0 = float((np.asarray(guess, dtype=float) - q) @ u)
    if not math.isfinite(t0):
        t0 = 0.0
    lo = t0 - 1.0
    for _ in range(200):
        if slope(lo) < 0:
            break
        lo = t0 - 2.0 * (t0 - lo)
    else:
        return math.inf, np.full(3, np.nan)
    hi = t0 + 1.0
    for _ in range(200):
        if slope(hi) > 0:
            break
        hi = t0 + 2.0 * (hi - t0)
    else:
        return math.inf, np.full(3, np.nan)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if slope(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * (1.0 + abs(mid)):
            break
    t = 0.5 * (lo + hi)
    for _ in range(2):
        curv = float(u @ body.hessian(q + t * u) @ u)
        if curv > 0:
            t -= slope(t) / curv
    m = q + t * u
    return float(body.value(m)), m


def check_midscription(cfg: Configuration, body: ConvexBody,
                       P: PolyhedralComplex, tol: float = TANGENCY_TOL) -> VerifyReport:
    """Re-derive tangency and incidence from the planes; fill a report.

    Per edge, the gauge is minimized along the entire intersection line of
    the two face planes and the minimum must vanish within tol (the line is
    tangent). The distance from the configuration's tangent point to the
    line minimizer is reported but not gated: tangency is a property of the
    line. Incidence is evaluated on unit-normalized vertex 4-vectors, so
    vertices at infinity are checked too.
    """
    v4 = cfg.vertices4 / np.linalg.norm(cfg.vertices4, axis=1, keepdims=True)
    per_vertex = []
    max_inc = 0.0
    comb_ok = True
    for v in range(P.n_vertices):
        worst = 0.0
        for f in P.vertex_faces[v]:
            r = abs(float(cfg.normals[f] @ v4[v, 1:] - cfg.offsets[f] * v4[v, 0]))
            worst = max(worst, r)
        max_inc = max(max_inc, worst)
        per_vertex.append({
            "vertex": v,
            "max_incidence": worst,
            "finite": bool(abs(v4[v, 0]) > EPS_INFINITY),
        })
        for f in range(P.n_faces):
            if f in P.vertex_faces[v]:
                continue
            r = abs(float(cfg.normals[f] @ v4[v, 1:] - cfg.offsets[f] * v4[v, 0]))
            if r <= tol:
                comb_ok = False
    if max_inc >= tol:
        comb_ok = False

    per_edge = []
    max_tan = 0.0
    for e in range(P.n_edges):
        f, g = P.faces_of_edge(e)
        val, minimizer = _line_minimum(body, cfg.normals[f], cfg.offsets[f],
                                       cfg.normals[g], cfg.offsets[g],
                                       cfg.tangents[e])
        dist = float(np.linalg.norm(minimizer - cfg.tangents[e]))
        per_edge.append({
            "edge": e,
            "faces": (f, g),
            "line_min": val,
            "minimizer_distance": dist,
        })
        max_tan = max(max_tan, abs(val))

    return VerifyReport(max_tangency_residual=max_tan,
                        max_incidence_residual=max_inc,
                        combinatorics_ok=comb_ok,
                        convexity=check_convexity(cfg, P),
                        contact_graph_primal_ok=None,
                        contact_graph_dual_ok=None,
                        per_edge=per_edge, per_vertex=per_vertex, tol=tol)


# ---------------------------------------------------------------------------
# convexity

def check_convexity(cfg: Configuration, P: PolyhedralComplex,
                    tol_side: float = SIDE_TOL, eps_inf: float = EPS_INFINITY,
                    detailed: bool = False):
    """Classify as convex / nonconvex / projective-degenerate.

    Convex means every vertex not on a face lies strictly on the inner side
    of that face's plane (signed distance < -tol_side). With detailed=True
    also returns {min_side_distance, marginal, worst_pair}; marginal flags
    classifications within 10x tol_side of the convex/nonconvex boundary.
    """
    v4 = cfg.vertices4 / np.linalg.norm(cfg.vertices4, axis=1, keepdims=True)
    if np.any(np.abs(v4[:, 0]) <= eps_inf):
        info = {"min_side_distance": math.nan, "marginal": False,
                "worst_pair": None}
        return ("projective-degenerate", info) if detailed else "projective-degenerate"
    X = v4[:, 1:] / v4[:, :1]
    ok = True
    min_margin = math.inf
    worst = None
    for f in range(P.n_faces):
        face_verts = set(P.faces[f])
        for v in range(P.n_vertices):
            s = float(cfg.normals[f] @ X[v] - cfg.offsets[f])
            if v in face_verts:
                if abs(s) > 1e-7:
                    ok = False
                continue
            margin = -s
            if margin < min_margin:
                min_margin = margin
                worst = (f, v)
            if not s < -tol_side:
                ok = False
    cls = "convex" if ok else "nonconvex"
    info = {"min_side_distance": min_margin,
            "marginal": abs(min_margin) <= 10.0 * tol_side,
            "worst_pair": worst}
    return (cls, info) if detailed else cls


# ---------------------------------------------------------------------------
# boundary tracing helpers

def _radial_root(body: ConvexBody, dirn: np.ndarray, t0: float) -> float:
    """Radius where the ray t*dirn crosses the boundary, warm-started at t0."""
    t = t0 if t0 > 0 and math.isfinite(t0) else 1.0
    for _ in range(60):
        val = body.value(t * dirn)
        sl = float(body.gradient(t * dirn) @ dirn)
        if sl <= 0:
            break
        step = val / sl
        t_new = t - step
        if t_new <= 0:
            break
        if abs(step) < 1e-15 * t:
            return t_new
        t = t_new
    else:
        return t
    return float(np.linalg.norm(_radial_boundary_point(body, dirn)))


def _face_circle_point(body, c0, a, b, theta, warm):
    w = math.cos(theta) * a + math.sin(theta) * b

    def val(r):
        return body.value(c0 + r * w)

    r = warm if warm and warm > 0 else 1.0
    for _ in range(60):
        v = val(r)
        sl = float(body.gradient(c0 + r * w) @ w)
        if sl <= 0:
            break
        step = v / sl
        r_new = r - step
        if r_new <= 0:
            break
        if abs(step) < 1e-15 * r:
            return c0 + r_new * w, r_new
        r = r_new
    hi = 1.0
    for _ in range(80):
        if val(hi) > 0:
            break
        hi *= 2.0
    lo = 0.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if val(mid) < 0:
            lo = mid
        else:
            hi = mid
    r = 0.5 * (lo + hi)
    for _ in range(3):
        sl = float(body.gradient(c0 + r * w) @ w)
        if sl > 0:
            r -= val(r) / sl
    return c0 + r * w, r


def _golden_max(fun, lo, hi, iters=40):
    """Golden-section maximizer on [lo, hi]; returns (argmax, max)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    t = 0.5 * (a + b)
    return t, fun(t)


# ---------------------------------------------------------------------------
# K-disk packings

def _face_disk(body, cfg, P, f, n_samples, theta0):
    n = cfg.normals[f] / np.linalg.norm(cfg.normals[f])
    d = float(cfg.offsets[f])
    pts = cfg.tangents[list(P.boundary_edges(f))]
    c0 = pts.mean(axis=0)
    c0 = c0 - (float(n @ c0) - d) * n
    if body.value(c0) >= 0:
        raise DegenerateConfiguration(
            "face %d tangent centroid is not interior to the body" % f)
    a = _any_unit_orthogonal(n)
    b = np.cross(n, a)
    samples = np.empty((n_samples, 3))
    warm = None
    for k in range(n_samples):
        theta = theta0 + 2.0 * math.pi * k / n_samples
        samples[k], warm = _face_circle_point(body, c0, a, b, theta, warm)
    disk = KDisk(kind="face", owner=f, boundary_samples=samples,
                 plane=(n, d))
    return disk, (c0, a, b)


def _horizon_gap(body, gfun, w_dir, m_dir, warm):
    """Root of the visibility function along the arc from w_dir to -w_dir."""

    def at(alpha):
        dirn = math.cos(alpha) * w_dir + math.sin(alpha) * m_dir
        t = _radial_root(body, dirn, at.warm)
        at.warm = t
        return gfun(t * dirn), t * dirn

    at.warm = 1.0
    if warm is None:
        grid = np.linspace(1e-3, math.pi - 1e-3, 96)
        prev_alpha, prev_val = grid[0], at(grid[0])[0]
        lo = hi = None
        for alpha in grid[1:]:
            val = at(alpha)[0]
            if prev_val > 0 >= val:
                lo, hi = prev_alpha, alpha
                break
            prev_alpha, prev_val = alpha, val
        if lo is None:
            raise DegenerateConfiguration("no visibility horizon crossing")
    else:
        step = 0.15
        lo = max(warm - step, 1e-9)
        hi = min(warm + step, math.pi - 1e-9)
        for _ in range(30):
            if at(lo)[0] > 0:
                break
            lo = max(lo - step, 1e-9)
            step *= 2.0
        step = 0.15
        for _ in range(30):
            if at(hi)[0] <= 0:
                break
            hi = min(hi + step, math.pi - 1e-9)
            step *= 2.0
    for _ in range(55):
        mid = 0.5 * (lo + hi)
        if at(mid)[0] > 0:
            lo = mid
        else:
            hi = mid
    alpha = 0.5 * (lo + hi)
    return alpha, at(alpha)[1]


def _vertex_visibility(cfg, P, v, positions, finite):
    """Visibility function, reference direction and apex data for vertex v."""
    if finite[v]:
        x = positions[v]

        def gfun_factory(body):
            def g(p):
                return float((x - p) @ body.gradient(p))
            return g

        w_dir = x / np.linalg.norm(x)
        return gfun_factory, x, w_dir, False
    v4 = cfg.vertices4[v] / np.linalg.norm(cfg.vertices4[v])
    u = v4[1:] / np.linalg.norm(v4[1:])
    sign = 0.0
    for e in P.edges_of_vertex(v):
        a, b = P.edge_vertices(e)
        other = b if a == v else a
        if finite[other]:
            sign = math.copysign(1.0, float((cfg.tangents[e] - positions[other]) @ u))
            break
    if sign == 0.0:
        sign = 1.0
    u = sign * u

    def gfun_factory(body):
        def g(p):
            return float(u @ body.gradient(p))
        return g

    return gfun_factory, u, u, True


def _vertex_disk(body, cfg, P, v, positions, finite, n_samples, psi0):
    gfun_factory, apex, w_dir, at_inf = _vertex_visibility(cfg, P, v,
                                                           positions, finite)
    if not at_inf and body.value(apex) <= 0:
        raise DegenerateConfiguration("vertex %d is not exterior to the body" % v)
    gfun = gfun_factory(body)
    a = _any_unit_orthogonal(w_dir)
    b = np.cross(w_dir, a)
    samples = np.empty((n_samples, 3))
    alphas = np.empty(n_samples)
    warm = None
    for k in range(n_samples):
        psi = psi0 + 2.0 * math.pi * k / n_samples
        m_dir = math.cos(psi) * a + math.sin(psi) * b
        warm, samples[k] = _horizon_gap(body, gfun, w_dir, m_dir, warm)
        alphas[k] = warm
    disk = KDisk(kind="vertex", owner=v, boundary_samples=samples,
                 apex=apex, at_infinity=at_inf)
    return disk, (gfun, w_dir, a, b, alphas)


def _pair_contacts(disks, aux, margin_of, boundary_point_at, adjacency):
    """Check every disk pair: touch at p_e when adjacent, stay clear otherwise.

    margin_of(j, x) is the signed membership function of disk j (>= 0 inside
    its closure); boundary_point_at(i, t, aux_i) maps a boundary parameter of
    disk i to a surface point. Margins are maximized along disk i's boundary
    curve, coarsely over the precomputed samples and then by golden section;
    pairs whose coarse maximum is already far below contact are not refined.
    """
    n = len(disks)
    n_samples = len(disks[0].boundary_samples)
    spacing = 2.0 * math.pi / n_samples
    max_gap = 0.0
    worst_pos = 0.0
    max_foreign = -math.inf
    ok = True
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            vals = np.array([margin_of(j, p)
                             for p in disks[i].boundary_samples])
            k = int(np.argmax(vals))
            center = spacing * k
            key = (min(disks[i].owner, disks[j].owner),
                   max(disks[i].owner, disks[j].owner))
            adjacent = key in adjacency
            if not adjacent and vals[k] < -1e-2:
                max_foreign = max(max_foreign, float(vals[k]))
                continue

            def fun(t):
                return margin_of(j, boundary_point_at(i, t, aux[i]))

            t_best, m_best = _golden_max(fun, center - spacing,
                                         center + spacing, iters=30)
            x_best = boundary_point_at(i, t_best, aux[i])
            if adjacent:
                p_e = adjacency[key]
                gap = abs(m_best)
                pos_err = float(np.linalg.norm(x_best - p_e))
                max_gap = max(max_gap, gap)
                worst_pos = max(worst_pos, pos_err)
                if gap > CONTACT_TOL or pos_err > CONTACT_POSITION_TOL:
                    ok = False
            else:
                max_foreign = max(max_foreign, m_best)
                if not m_best < -CONTACT_TOL:
                    ok = False
    return ok, max_gap, worst_pos, max_foreign


def extract_kdisk_packings(cfg: Configuration, body: ConvexBody,
                           P: PolyhedralComplex,
                           n_samples: int = N_BOUNDARY_SAMPLES):
    """Trace the face-disk and visibility-disk packings on the body boundary.

    Returns (face_packing, visibility_packing) as DiskPacking values. The
    contact graph of the face disks must equal face adjacency (the dual
    graph) and that of the visibility disks must equal the edge graph, with
    every contact at the claimed tangent point. Raises NotMidscribed when the
    configuration fails the midscription precondition.
    """
    pre = check_midscription(cfg, body, P, tol=CONTACT_TOL)
    if not pre.midscribed:
        raise NotMidscribed(
            "verification precondition failed: tangency %.3e, incidence %.3e"
            % (pre.max_tangency_residual, pre.max_incidence_residual))

    theta0 = 2.0 * math.pi * 0.61803398874989485

    face_disks, face_aux = [], []
    for f in range(P.n_faces):
        disk, ax = _face_disk(body, cfg, P, f, n_samples, theta0)
        face_disks.append(disk)
        face_aux.append(ax)

    face_adj = {}
    vert_adj = {}
    for e in range(P.n_edges):
        f, g = P.faces_of_edge(e)
        face_adj[(min(f, g), max(f, g))] = cfg.tangents[e]
        v, w = P.edge_vertices(e)
        vert_adj[(min(v, w), max(v, w))] = cfg.tangents[e]

    def face_margin(j, x):
        n, d = face_disks[j].plane
        return float(n @ x - d)

    def face_point(i, t, ax):
        c0, a, b = ax
        return _face_circle_point(body, c0, a, b, theta0 + t, None)[0]

    f_ok, f_gap, f_pos, f_foreign = _pair_contacts(
        face_disks, face_aux, face_margin, face_point, face_adj)

    positions, finite = cfg.affine_vertices()
    vertex_disks, vertex_aux = [], []
    for v in range(P.n_vertices):
        disk, ax = _vertex_disk(body, cfg, P, v, positions, finite,
                                n_samples, theta0)
        vertex_disks.append(disk)
        vertex_aux.append(ax)

    def vertex_margin(j, point):
        gfun = vertex_aux[j][0]
        return gfun(np.asarray(point))

    def vertex_point(i, t, ax):
        gfun, w_dir, a, b, alphas = ax
        m_dir = math.cos(theta0 + t) * a + math.sin(theta0 + t) * b
        k = int(round(t / (2.0 * math.pi) * len(alphas))) % len(alphas)
        return _horizon_gap(body, gfun, w_dir, m_dir, float(alphas[k]))[1]

    v_ok, v_gap, v_pos, v_foreign = _pair_contacts(
        vertex_disks, vertex_aux, vertex_margin, vertex_point, vert_adj)

    f_nondeg = _nondegenerate(face_disks, face_margin)
    v_nondeg = _nondegenerate(vertex_disks, vertex_margin)

    face_packing = DiskPacking(disks=face_disks, contacts_ok=f_ok,
                               nondegenerate=f_nondeg, max_adjacent_gap=f_gap,
                               worst_position_error=f_pos,
                               max_foreign_margin=f_foreign)
    visibility_packing = DiskPacking(disks=vertex_disks, contacts_ok=v_ok,
                                     nondegenerate=v_nondeg,
                                     max_adjacent_gap=v_gap,
                                     worst_position_error=v_pos,
                                     max_foreign_margin=v_foreign)
    return face_packing, visibility_packing


def _nondegenerate(disks, margin_of):
    """No boundary sample may lie within tolerance of three disk closures."""
    for i, disk in enumerate(disks):
        for p in disk.boundary_samples:
            near = 1
            for j in range(len(disks)):
                if j == i:
                    continue
                if margin_of(j, p) >= -CONTACT_TOL:
                    near += 1
                    if near >= 3:
                        return False
    return True


def verify_configuration(cfg: Configuration, body: ConvexBody,
                         P: PolyhedralComplex, tol: float = TANGENCY_TOL,
                         with_packings: bool = True) -> VerifyReport:
    """Full report: midscription, convexity, and both contact graphs.

    The disk packings are only extracted for convex realizations; that is
    the regime where the contact graphs are required to match the edge and
    dual graphs. For nonconvex or projective-degenerate configurations the
    contact flags stay None.
    """
    report = check_midscription(cfg, body, P, tol)
    if with_packings and report.convexity == "convex":
        try:
            face_packing, visibility_packing = extract_kdisk_packings(cfg, body, P)
        except (NotMidscribed, DegenerateConfiguration):
            report.contact_graph_primal_ok = False
            report.contact_graph_dual_ok = False
        else:
            report.contact_graph_dual_ok = (face_packing.contacts_ok
                                            and face_packing.nondegenerate)
            report.contact_graph_primal_ok = (visibility_packing.contacts_ok
                                              and visibility_packing.nondegenerate)
    return report


# ---------------------------------------------------------------------------
# rigidity

def rigidity_probe(P: PolyhedralComplex, frame: Frame, marks_z,
                   path: BodyPath, n_starts: int = 10,
                   perturbation: float = 1e-3, seed: int = 0,
                   base: Configuration | None = None) -> RigidityReport:
    """Re-solve from perturbed starts at the end of the path.

    Runs the continuation once (or reuses base), then restarts the corrector
    n_starts times from the solution with uniform noise of the given
    magnitude on every unknown. Reports the max pairwise distance between
    the vertex sets of converged runs; a tiny value is the empirical
    uniqueness witness. Restarts that fail to converge are counted, not
    propagated; a restart that converges to a projective-degenerate
    configuration yields an infinite distance.
    """
    if base is None:
        base, base_report = continue_to_body(P, frame, marks_z, path)
        base_res = base_report.final_residual
    else:
        base_res = math.nan
    body = path.eval(1.0)
    chart = BodyChart(body)
    marks = np.array([chart_inverse(chart, complex(z)) for z in marks_z])
    system = ConstraintSystem(P, frame, marks, body)
    x0 = system.pack(base)
    rng = np.random.default_rng(seed)
    vertex_sets = []
    pos0, fin0 = base.affine_vertices()
    if fin0.all():
        vertex_sets.append(pos0)
    degenerate = not fin0.all()
    n_conv = 0
    for _ in range(n_starts):
        xp = x0 + rng.uniform(-perturbation, perturbation, x0.shape)
        try:
            x, _, _ = _newton_core(system, xp, 1e-11, 60)
        except SolverError:
            continue
        n_conv += 1
        pos, fin = system.unpack(x).affine_vertices()
        if fin.all():
            vertex_sets.append(pos)
        else:
            degenerate = True
    dmax = 0.0
    for i in range(len(vertex_sets)):
        for j in range(i + 1, len(vertex_sets)):
            d = float(np.max(np.linalg.norm(vertex_sets[i] - vertex_sets[j],
                                            axis=1)))
            dmax = max(dmax, d)
    if degenerate:
        dmax = math.inf
    return RigidityReport(n_starts=n_starts, n_converged=n_conv,
                          max_pairwise_distance=dmax, base_residual=base_res)
