"""Orthogonal primal-dual circle packing of a polyhedral complex.

The packing lives first in the plane, normalized to a box picture: the
marked face f0 becomes the real axis, the tangency point of the first frame
edge e1 is sent to infinity, which turns the two endpoints of e1 into
vertical wall lines and the face across e1 into a horizontal top wall. All
remaining vertex and face circles are genuine circles squeezed into the box,
with wall-orthogonal circles centered on (or tangent rows along) the walls.

Every interior node u must close up a full angle 2*pi out of the kite pieces
2*atan(r_w/r_u) contributed by its orthogonal neighbors; nodes orthogonal to
one wall close up pi instead (the wall supplies the missing half turn). That
square system of monotone equations is solved by Gauss-Seidel sweeps of
safeguarded 1-D Newton solves, then the circles are placed row by row and
propagated across darts, lifted to the unit sphere, and normalized by the
Mobius transformation pinning the three frame tangencies to the marks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .combinatorics import Frame, PolyhedralComplex
from .config import Configuration
from .errors import (
    DegenerateMarks,
    LayoutInconsistency,
    NonConvergence,
)
from .mobius import (
    INFINITY,
    apply_mobius,
    cap_through_points,
    is_infinity,
    lift_to_sphere,
    mobius_through,
)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# node structure of the box normalization

@dataclass(frozen=True)
class _BoxStructure:
    """Which objects become walls, and the finite node system that remains.

    Nodes are ("v", vertex_id) or ("f", face_id). v_left is the head of e1's
    dart on f0 (the x=0 wall), v_right its tail (the x=x_R wall), g_top the
    face across e1 (the y=h wall).
    """

    f0: int
    g_top: int
    v_left: int
    v_right: int
    nodes: tuple
    targets: dict
    neighbors: dict  # node -> tuple of finite neighbor nodes (walls dropped)


def _box_structure(P: PolyhedralComplex, frame: Frame) -> _BoxStructure:
    f0 = frame.face
    e1 = frame.edges[0]
    v_right, v_left = frame.darts[0]
    fa, fb = P.faces_of_edge(e1)
    g_top = fb if fa == f0 else fa

    walls = {("f", f0), ("f", g_top), ("v", v_left), ("v", v_right)}

    def incident(node):
        kind, idx = node
        if kind == "v":
            return tuple(("f", f) for f in P.vertex_faces[idx])
        return tuple(("v", v) for v in P.faces[idx])

    nodes = tuple([("v", v) for v in range(P.n_vertices)
                   if ("v", v) not in walls]
                  + [("f", f) for f in range(P.n_faces)
                     if ("f", f) not in walls])
    targets, neighbors = {}, {}
    for u in nodes:
        inc = incident(u)
        n_wall = sum(1 for w in inc if w in walls)
        if n_wall > 1:
            raise LayoutInconsistency("node %r touches %d walls; the complex "
                                      "cannot be a polyhedron" % (u, n_wall))
        targets[u] = TWO_PI - math.pi * n_wall
        neighbors[u] = tuple(w for w in inc if w not in walls)
    return _BoxStructure(f0=f0, g_top=g_top, v_left=v_left, v_right=v_right,
                         nodes=nodes, targets=targets, neighbors=neighbors)


# ---------------------------------------------------------------------------
# radii

@dataclass
class RadiusAssignment:
    """Converged packing radii on the finite nodes, with their angle targets."""

    log_radii: dict
    targets: dict
    pinned: tuple
    residual: float

    def radius(self, node) -> float:
        return math.exp(self.log_radii[node])


def _angle_sum(radii, neighbors, u):
    r = radii[u]
    return sum(2.0 * math.atan2(radii[w], r) for w in neighbors[u])


def _solve_node(radii, neighbors, u, target):
    """Monotone 1-D solve of the angle-sum equation at u, in log r."""
    ws = [radii[w] for w in neighbors[u]]

    def val_slope(x):
        r = math.exp(x)
        s = 0.0
        ds = 0.0
        for w in ws:
            s += 2.0 * math.atan2(w, r)
            ds -= 2.0 * w * r / (w * w + r * r)
        return s - target, ds

    x = math.log(radii[u])
    g, _ = val_slope(x)
    if g > 0.0:  # angle too large: grow the radius
        lo = x
        hi = x + 1.0
        while val_slope(hi)[0] > 0.0:
            lo, hi = hi, hi + 1.0
    else:
        hi = x
        lo = x - 1.0
        while val_slope(lo)[0] < 0.0:
            hi, lo = lo, lo - 1.0
    # bracketed Newton with bisection fallback
    x = 0.5 * (lo + hi)
    for _ in range(60):
        g, dg = val_slope(x)
        if abs(g) < 1e-15 * (1.0 + target):
            break
        if g > 0.0:
            lo = x
        else:
            hi = x
        step = x - g / dg if dg != 0.0 else None
        x = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-17:
            break
    radii[u] = math.exp(x)


def solve_radii(P: PolyhedralComplex, frame: Frame, tol: float = 1e-13,
                max_sweeps: int = 20000) -> RadiusAssignment:
    """Packing radii for the box normalization of (P, frame).

    One node's radius is pinned to 1 to fix scale; its angle equation is then
    implied by the others (the kite angles of any radius assignment sum to
    pi per finite flag, exactly the sum of the targets).
    """
    box = _box_structure(P, frame)
    interior = [u for u in box.nodes if box.targets[u] == TWO_PI]
    pinned = interior[0] if interior else box.nodes[0]

    radii = {u: 1.0 for u in box.nodes}
    for sweep in range(max_sweeps):
        for u in box.nodes:
            if u != pinned:
                _solve_node(radii, box.neighbors, u, box.targets[u])
        worst = max(abs(_angle_sum(radii, box.neighbors, u) - box.targets[u])
                    for u in box.nodes)
        if worst < tol:
            return RadiusAssignment(
                log_radii={u: math.log(radii[u]) for u in box.nodes},
                targets=dict(box.targets), pinned=pinned, residual=worst)
    raise NonConvergence("radius iteration stuck at residual %.3e after %d "
                         "sweeps" % (worst, max_sweeps))


# ---------------------------------------------------------------------------
# planar circles

@dataclass(frozen=True)
class Circle:
    """Oriented circle or line in the plane: the boundary of a disk.

    For kind "circle" the disk is the usual interior. For kind "line" the
    disk is the half-plane containing the witness point; direction is a unit
    complex tangent.
    """

    kind: str
    center: complex = 0j
    radius: float = 0.0
    point: complex = 0j
    direction: complex = 1 + 0j
    witness: complex = 0j

    def boundary_point(self, t: float) -> complex:
        if self.kind == "circle":
            return self.center + self.radius * complex(math.cos(t), math.sin(t))
        return self.point + t * self.direction

    def boundary_distance(self, z: complex) -> float:
        if self.kind == "circle":
            return abs(abs(z - self.center) - self.radius)
        return abs(((z - self.point) / self.direction).imag)

    def disk_side_normal(self) -> complex:
        """Unit normal of a line pointing into its disk."""
        n = 1j * self.direction
        if (((self.witness - self.point) / self.direction).imag) < 0:
            n = -n
        return n


def _circle(center: complex, radius: float) -> Circle:
    return Circle(kind="circle", center=center, radius=radius, witness=center)


def _line(point: complex, direction: complex, witness: complex) -> Circle:
    return Circle(kind="line", point=point,
                  direction=direction / abs(direction), witness=witness)


@dataclass
class CirclePattern:
    """Planar pattern: one circle per vertex and face, one point per edge.

    The tangency of the first frame edge is the point at infinity; the four
    incident objects (f0, the face across e1, and e1's endpoints) are lines.
    """

    P: PolyhedralComplex
    vertex_circles: dict
    face_circles: dict
    tangency: dict
    frame: Frame
    box_width: float
    box_height: float

    def circle_of(self, node) -> Circle:
        kind, idx = node
        return self.vertex_circles[idx] if kind == "v" else self.face_circles[idx]


def layout_circles(P: PolyhedralComplex, frame: Frame,
                   radii: RadiusAssignment, tol: float = 1e-9) -> CirclePattern:
    """Place the packing in the box picture and validate every contact."""
    box = _box_structure(P, frame)
    r = {u: radii.radius(u) for u in box.nodes}
    f0, g_top, v_left, v_right = box.f0, box.g_top, box.v_left, box.v_right

    centers: dict = {}
    tangency: dict = {}

    # bottom row: f0's boundary from the left wall to the right wall
    cyc = P.faces[f0]
    i = cyc.index(v_left)
    seq = cyc[i:] + cyc[:i]          # [v_left, w_1, ..., w_m, v_right]
    if seq[-1] != v_right:
        raise LayoutInconsistency("frame dart does not close f0's cycle")
    bottom = list(seq[1:-1])
    x = 0.0
    prev = v_left
    for w in bottom:
        tangency[P.edge_index[(prev, w)]] = complex(x, 0.0)
        x += r[("v", w)]
        centers[("v", w)] = complex(x, 0.0)
        x += r[("v", w)]
        prev = w
    width = x
    tangency[P.edge_index[(prev, v_right)]] = complex(width, 0.0)

    # faces across the bottom edges sit tangent to the real axis
    for e in P.boundary_edges(f0):
        if e == frame.edges[0]:
            continue
        fa, fb = P.faces_of_edge(e)
        g = fb if fa == f0 else fa
        centers[("f", g)] = tangency[e] + 1j * r[("f", g)]

    # wall stacks: the faces around each wall vertex, from f0 up to g_top
    height_left = _stack_wall(P, box, r, centers, tangency, v_left, 0.0)
    height_right = _stack_wall(P, box, r, centers, tangency, v_right, width)
    scale = max(1.0, width, height_left)
    if abs(height_left - height_right) > tol * scale:
        raise LayoutInconsistency("wall stacks disagree on the box height: "
                                  "%.17g vs %.17g" % (height_left, height_right))
    height = 0.5 * (height_left + height_right)

    # top row: g_top's boundary, laid right to left
    cyc = P.faces[g_top]
    i = cyc.index(v_right)
    seq = cyc[i:] + cyc[:i]          # [v_right, u_1, ..., u_k, v_left]
    if seq[-1] != v_left:
        raise LayoutInconsistency("frame dart does not close g_top's cycle")
    x = width
    prev = v_right
    for u in seq[1:-1]:
        tangency[P.edge_index[(prev, u)]] = complex(x, height)
        x -= r[("v", u)]
        centers[("v", u)] = complex(x, height)
        x -= r[("v", u)]
        prev = u
    tangency[P.edge_index[(prev, v_left)]] = complex(x, height)
    if abs(x) > tol * scale:
        raise LayoutInconsistency("top row does not close onto the left wall "
                                  "(gap %.3e)" % x)

    _propagate(P, box, r, centers, tangency)
    tangency[frame.edges[0]] = INFINITY

    pattern = _assemble_pattern(P, box, r, centers, tangency, frame,
                                width, height)
    _validate_planar(pattern, tol * scale)
    return pattern


def _stack_wall(P, box, r, centers, tangency, v_wall, x_wall):
    """Stack the faces around a wall vertex up the line x = x_wall.

    The faces incident to a wall vertex are centered on its wall; walking
    the vertex's face cycle from f0 away from g_top stacks them bottom to
    top, and the running height where the last one ends is the box height.
    """
    cycle = P.vertex_faces[v_wall]
    k = len(cycle)
    i0 = cycle.index(box.f0)
    step = 1 if cycle[(i0 + 1) % k] != box.g_top else -1
    y = 0.0
    j = i0 + step
    prev_node = None
    while True:
        f = cycle[j % k]
        if f == box.g_top:
            break
        rad = r[("f", f)]
        centers[("f", f)] = complex(x_wall, y + rad)
        if prev_node is not None:
            tangency[_shared_wall_edge(P, v_wall, prev_node, f)] = complex(x_wall, y)
        y += 2.0 * rad
        prev_node = f
        j += step
    # the edge between the last stack face and g_top meets the top corner
    tangency[_shared_wall_edge(P, v_wall, prev_node, box.g_top)] = complex(x_wall, y)
    return y


def _shared_wall_edge(P, v_wall, f1, f2):
    """The edge at v_wall shared by two consecutive faces of its cycle."""
    shared = set(P.boundary_edges(f1)) & set(P.boundary_edges(f2))
    for e in shared:
        if v_wall in P.edges[e]:
            return e
    raise LayoutInconsistency("faces %d and %d share no edge at vertex %d"
                              % (f1, f2, v_wall))


def _propagate(P, box, r, centers, tangency):
    """Fill in the remaining circles by sweeping over darts.

    For a dart (v, w) whose left face is L, the face disks sit on the
    in-plane right (the sphere-to-plane chart reverses orientation), so with
    u = (c_L - c_v)/(r_v - i r_L) normalized: the edge tangency is
    c_v + r_v u, the far vertex center c_v + (r_v + r_w) u, and the right
    face center t + i r_R u.
    """
    walls = {("v", box.v_left), ("v", box.v_right),
             ("f", box.f0), ("f", box.g_top)}

    def finite(node):
        return node not in walls

    for _ in range(P.n_edges + 2):
        progress = False
        for e, (a, b) in enumerate(P.edges):
            for (v, w) in ((a, b), (b, a)):
                L = P.face_of_dart[(v, w)]
                R = P.face_of_dart[(w, v)]
                nv, nL, nw, nR = ("v", v), ("f", L), ("v", w), ("f", R)
                if not (finite(nv) and finite(nL)):
                    continue
                if nv not in centers or nL not in centers:
                    continue
                u = (centers[nL] - centers[nv]) / complex(r[nv], -r[nL])
                u /= abs(u)
                t = centers[nv] + r[nv] * u
                if e not in tangency:
                    tangency[e] = t
                    progress = True
                if finite(nw) and nw not in centers:
                    centers[nw] = centers[nv] + (r[nv] + r[nw]) * u
                    progress = True
                if finite(nR) and nR not in centers:
                    centers[nR] = t + 1j * r[nR] * u
                    progress = True
        if not progress:
            break
    missing = [u for u in box.nodes if u not in centers]
    if missing:
        raise LayoutInconsistency("could not place circles for nodes %r"
                                  % missing)


def _assemble_pattern(P, box, r, centers, tangency, frame, width, height):
    vertex_circles = {}
    face_circles = {}
    for node in box.nodes:
        kind, idx = node
        c = _circle(centers[node], r[node])
        (vertex_circles if kind == "v" else face_circles)[idx] = c
    vertex_circles[box.v_left] = _line(0j, 1j, complex(-1.0, 0.5 * height))
    vertex_circles[box.v_right] = _line(complex(width, 0.0), 1j,
                                        complex(width + 1.0, 0.5 * height))
    face_circles[box.f0] = _line(0j, 1 + 0j, complex(0.5 * width, -1.0))
    face_circles[box.g_top] = _line(complex(0.0, height), 1 + 0j,
                                    complex(0.5 * width, height + 1.0))
    return CirclePattern(P=P, vertex_circles=vertex_circles,
                         face_circles=face_circles, tangency=dict(tangency),
                         frame=frame, box_width=width, box_height=height)


def planar_pattern_residuals(pattern: CirclePattern):
    """Worst-case contact residuals of a planar pattern, keyed by kind."""
    P = pattern.P
    through = tangent = ortho = 0.0
    for e, (a, b) in enumerate(P.edges):
        fa, fb = P.faces_of_edge(e)
        objs = [pattern.vertex_circles[a], pattern.vertex_circles[b],
                pattern.face_circles[fa], pattern.face_circles[fb]]
        t = pattern.tangency[e]
        if is_infinity(t):
            if any(o.kind != "line" for o in objs):
                return {"through_point": math.inf, "tangent": math.inf,
                        "orthogonal": math.inf}
            continue
        through = max(through, max(o.boundary_distance(t) for o in objs))
        for pair in ((objs[0], objs[1]), (objs[2], objs[3])):
            tangent = max(tangent, _tangency_residual(*pair))
        for cv in (objs[0], objs[1]):
            for cf in (objs[2], objs[3]):
                ortho = max(ortho, _orthogonality_residual(cv, cf))
    return {"through_point": through, "tangent": tangent, "orthogonal": ortho}


def _tangency_residual(c1: Circle, c2: Circle) -> float:
    if c1.kind == "line" and c2.kind == "line":
        return 0.0
    if c1.kind == "line":
        c1, c2 = c2, c1
    if c2.kind == "line":
        return abs(c2.boundary_distance(c1.center) - c1.radius)
    return abs(abs(c1.center - c2.center) - (c1.radius + c2.radius))


def _orthogonality_residual(c1: Circle, c2: Circle) -> float:
    if c1.kind == "line" and c2.kind == "line":
        return abs((c1.direction * c2.direction.conjugate()).real)
    if c1.kind == "line":
        c1, c2 = c2, c1
    if c2.kind == "line":
        return c2.boundary_distance(c1.center)
    d2 = abs(c1.center - c2.center) ** 2
    return abs(d2 - (c1.radius ** 2 + c2.radius ** 2)) / max(1.0, d2)


def _validate_planar(pattern, tol):
    res = planar_pattern_residuals(pattern)
    worst = max(res.values())
    if not (worst < tol):
        raise LayoutInconsistency("planar pattern residuals %r exceed %.1e"
                                  % (res, tol))


# ---------------------------------------------------------------------------
# sphere lift and Mobius normalization

@dataclass(frozen=True)
class Cap:
    """Spherical cap {x : <n, x> >= d} with unit n; boundary is a circle."""

    n: np.ndarray
    d: float

    @property
    def angular_radius(self) -> float:
        return math.acos(max(-1.0, min(1.0, self.d)))


@dataclass
class SphericalPattern:
    """Circle pattern on the unit sphere, normalized to the marks."""

    P: PolyhedralComplex
    vertex_caps: dict
    face_caps: dict
    tangency: dict       # edge id -> unit 3-vector
    marks: np.ndarray    # (3, 3), tangency points of the frame edges
    marks_z: tuple       # the chart coordinates the marks were given as
    frame: Frame

    def cap_of(self, node) -> Cap:
        kind, idx = node
        return self.vertex_caps[idx] if kind == "v" else self.face_caps[idx]


_CIRCLE_PARAMS = (0.37, 2.41, 4.73)
_LINE_PARAMS = (-1.3, 0.45, 2.17)


def _mapped_cap(circle: Circle, M) -> Cap:
    if circle.kind == "circle":
        params = list(_CIRCLE_PARAMS)
        witnesses = [circle.center,
                     circle.center + 0.31 * circle.radius,
                     circle.center + 0.27j * circle.radius,
                     circle.center - 0.23 * circle.radius]
    else:
        params = list(_LINE_PARAMS)
        n = circle.disk_side_normal()
        witnesses = [circle.point + n * s + circle.direction * 0.1 * s
                     for s in (1.0, 0.4, 2.9, 11.0)]
    pts = []
    for t in params:
        z = apply_mobius(M, circle.boundary_point(t))
        tries = 0
        while (is_infinity(z) or abs(z) > 1e30) and tries < 8:
            t += 0.123
            z = apply_mobius(M, circle.boundary_point(t))
            tries += 1
        pts.append(lift_to_sphere(z))
    for w in witnesses:
        zw = apply_mobius(M, w)
        if not is_infinity(zw) and abs(zw) < 1e12:
            interior = lift_to_sphere(zw)
            break
    else:
        raise DegenerateMarks("no usable interior witness for a circle")
    n, d = cap_through_points(pts[0], pts[1], pts[2], interior)
    return Cap(n=n, d=d)


def lift_normalize(pattern: CirclePattern, marks_z, tol: float = 1e-8
                   ) -> SphericalPattern:
    """Lift the planar pattern to the sphere, pinning the frame tangencies.

    marks_z are three distinct finite chart coordinates; the Mobius map
    takes the current planar tangencies of (e1, e2, e3) (the first is the
    point at infinity) to them, and the chord chart of the ball carries it
    onto the sphere.
    """
    z1, z2, z3 = (complex(z) for z in marks_z)
    for z in (z1, z2, z3):
        if is_infinity(z):
            raise DegenerateMarks("marks must be finite chart coordinates")
    e1, e2, e3 = pattern.frame.edges
    sources = (pattern.tangency[e1], pattern.tangency[e2], pattern.tangency[e3])
    M = mobius_through(sources, (z1, z2, z3))

    vertex_caps = {v: _mapped_cap(c, M) for v, c in pattern.vertex_circles.items()}
    face_caps = {f: _mapped_cap(c, M) for f, c in pattern.face_circles.items()}
    tangency = {e: lift_to_sphere(apply_mobius(M, t))
                for e, t in pattern.tangency.items()}
    marks = np.array([tangency[e1], tangency[e2], tangency[e3]])
    spherical = SphericalPattern(P=pattern.P, vertex_caps=vertex_caps,
                                 face_caps=face_caps, tangency=tangency,
                                 marks=marks, marks_z=(z1, z2, z3),
                                 frame=pattern.frame)
    res = spherical_pattern_residuals(spherical)
    if not (max(res.values()) < tol):
        raise LayoutInconsistency("lifted pattern residuals %r exceed %.1e"
                                  % (res, tol))
    return spherical


def spherical_pattern_residuals(pat: SphericalPattern):
    """Worst-case residuals of a spherical pattern, keyed by kind."""
    P = pat.P
    through = tangent = ortho = unit = 0.0
    for e, (a, b) in enumerate(P.edges):
        fa, fb = P.faces_of_edge(e)
        caps = [pat.vertex_caps[a], pat.vertex_caps[b],
                pat.face_caps[fa], pat.face_caps[fb]]
        t = pat.tangency[e]
        unit = max(unit, abs(float(t @ t) - 1.0))
        through = max(through, max(abs(float(c.n @ t) - c.d) for c in caps))
        for c1, c2 in ((caps[0], caps[1]), (caps[2], caps[3])):
            want = c1.d * c2.d - math.sqrt(max(0.0, 1.0 - c1.d ** 2)) \
                * math.sqrt(max(0.0, 1.0 - c2.d ** 2))
            tangent = max(tangent, abs(float(c1.n @ c2.n) - want))
        for cv in (caps[0], caps[1]):
            for cf in (caps[2], caps[3]):
                ortho = max(ortho, abs(float(cv.n @ cf.n) - cv.d * cf.d))
    return {"through_point": through, "tangent": tangent, "orthogonal": ortho,
            "unit_norm": unit}


def koebe_config(pattern: SphericalPattern) -> Configuration:
    """Configuration of the ball-midscribed polyhedron from a spherical pattern.

    Face planes are the planes of the face circles (outward normals: the
    face cap is the outer side); vertices are the tangent-cone apexes of the
    vertex caps, written projectively as [cos rho, n] so caps through or past
    a hemisphere stay representable.
    """
    P = pattern.P
    F, V, E = P.n_faces, P.n_vertices, P.n_edges
    normals = np.empty((F, 3))
    offsets = np.empty(F)
    for f in range(F):
        cap = pattern.face_caps[f]
        normals[f] = cap.n
        offsets[f] = cap.d
    vertices4 = np.empty((V, 4))
    for v in range(V):
        cap = pattern.vertex_caps[v]
        vec = np.array([cap.d, cap.n[0], cap.n[1], cap.n[2]])
        vertices4[v] = vec / np.linalg.norm(vec)
    tangents = np.empty((E, 3))
    for e in range(E):
        tangents[e] = pattern.tangency[e]
    cfg = Configuration(normals=normals, offsets=offsets, vertices4=vertices4,
                        tangents=tangents,
                        marked_edges=pattern.frame.edges,
                        marked_points=pattern.marks.copy())
    return cfg
