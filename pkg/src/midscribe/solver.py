"""Tangency constraint system and the ball-to-K continuation solver.

Unknowns: one (normal, offset) pair per face, one projective 4-vector per
vertex, one tangent point per unmarked edge. Equations: unit face normals,
vertex-on-plane for every flag, the two plane memberships plus boundary
membership plus normal-orthogonality for every edge tangent point, and unit
vertex 4-vectors. The three marked tangent points are substituted as
constants, which removes 9 unknowns and 3 boundary equations and makes the
system exactly square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import packing
from .bodies import BodyChart, BodyPath, ConvexBody
from .combinatorics import Frame, PolyhedralComplex
from .config import Configuration, ContinuationOptions, SolveReport
from .errors import (
    DegenerateConfiguration,
    DegenerateMarks,
    DimensionMismatch,
    MaxIterations,
    NoDecrease,
    SingularJacobian,
    SolverError,
    StepUnderflow,
)


class ConstraintSystem:
    """Square residual/Jacobian assembly for one (P, frame, marks, body)."""

    def __init__(self, P: PolyhedralComplex, frame: Frame, marked_points,
                 body: ConvexBody):
        self.P = P
        self.frame = frame
        self.body = body
        self.marked_points = np.asarray(marked_points, dtype=float)
        if self.marked_points.shape != (3, 3):
            raise DimensionMismatch("need three marked points, got shape %r"
                                    % (self.marked_points.shape,))
        self.marked = {e: i for i, e in enumerate(frame.edges)}

        F, V, E = P.n_faces, P.n_vertices, P.n_edges
        self.face_off = 0
        self.vert_off = 4 * F
        self.edge_off = {}
        off = 4 * F + 4 * V
        for e in range(E):
            if e not in self.marked:
                self.edge_off[e] = off
                off += 3
        self.n_unknowns = off

        self.flags = [(v, f) for v in range(V) for f in P.vertex_faces[v]]
        n_rows = F + len(self.flags) + (4 * E - 3) + V
        if n_rows != self.n_unknowns:
            raise DimensionMismatch("system is not square: %d rows, %d unknowns"
                                    % (n_rows, self.n_unknowns))

    # -- packing between Configuration and the flat unknown vector ----------

    def pack(self, cfg: Configuration) -> np.ndarray:
        P = self.P
        if (cfg.normals.shape != (P.n_faces, 3)
                or cfg.vertices4.shape != (P.n_vertices, 4)
                or cfg.tangents.shape != (P.n_edges, 3)):
            raise DimensionMismatch("configuration does not match the complex")
        x = np.empty(self.n_unknowns)
        for f in range(P.n_faces):
            x[4 * f:4 * f + 3] = cfg.normals[f]
            x[4 * f + 3] = cfg.offsets[f]
        for v in range(P.n_vertices):
            x[self.vert_off + 4 * v:self.vert_off + 4 * v + 4] = cfg.vertices4[v]
        for e, off in self.edge_off.items():
            x[off:off + 3] = cfg.tangents[e]
        return x

    def unpack(self, x: np.ndarray) -> Configuration:
        P = self.P
        F, V, E = P.n_faces, P.n_vertices, P.n_edges
        normals = np.empty((F, 3))
        offsets = np.empty(F)
        for f in range(F):
            normals[f] = x[4 * f:4 * f + 3]
            offsets[f] = x[4 * f + 3]
        vertices4 = x[self.vert_off:self.vert_off + 4 * V].reshape(V, 4).copy()
        tangents = np.empty((E, 3))
        for e in range(E):
            if e in self.marked:
                tangents[e] = self.marked_points[self.marked[e]]
            else:
                off = self.edge_off[e]
                tangents[e] = x[off:off + 3]
        return Configuration(normals=normals, offsets=offsets,
                             vertices4=vertices4, tangents=tangents,
                             marked_edges=self.frame.edges,
                             marked_points=self.marked_points.copy())

    def renormalize(self, x: np.ndarray) -> np.ndarray:
        """Scale every vertex 4-vector block back to unit length."""
        x = x.copy()
        for v in range(self.P.n_vertices):
            blk = slice(self.vert_off + 4 * v, self.vert_off + 4 * v + 4)
            x[blk] /= np.linalg.norm(x[blk])
        return x

    # -- residual ------------------------------------------------------------

    def _views(self, x):
        F, V = self.P.n_faces, self.P.n_vertices
        N = x[:4 * F].reshape(F, 4)[:, :3]
        D = x[:4 * F].reshape(F, 4)[:, 3]
        X = x[self.vert_off:self.vert_off + 4 * V].reshape(V, 4)
        return N, D, X

    def _tangent(self, x, e):
        if e in self.marked:
            return self.marked_points[self.marked[e]]
        off = self.edge_off[e]
        return x[off:off + 3]

    def residual(self, x: np.ndarray) -> np.ndarray:
        P, body = self.P, self.body
        N, D, X = self._views(x)
        parts = [np.einsum("ij,ij->i", N, N) - 1.0]
        flag_rows = np.array([N[f] @ X[v, 1:] - D[f] * X[v, 0]
                              for v, f in self.flags])
        parts.append(flag_rows)
        edge_rows = []
        for e in range(P.n_edges):
            f, g = P.faces_of_edge(e)
            p = self._tangent(x, e)
            edge_rows.append(N[f] @ p - D[f])
            edge_rows.append(N[g] @ p - D[g])
            if e not in self.marked:
                edge_rows.append(body.value(p))
            u = np.cross(N[f], N[g])
            edge_rows.append(body.gradient(p) @ u)
        parts.append(np.array(edge_rows))
        parts.append(np.einsum("ij,ij->i", X, X) - 1.0)
        return np.concatenate(parts)

    def row_labels(self):
        labels = [("face_gauge", f) for f in range(self.P.n_faces)]
        labels += [("flag", v, f) for v, f in self.flags]
        for e in range(self.P.n_edges):
            f, g = self.P.faces_of_edge(e)
            labels.append(("edge_plane", e, f))
            labels.append(("edge_plane", e, g))
            if e not in self.marked:
                labels.append(("edge_gauge", e))
            labels.append(("edge_tangency", e))
        labels += [("vertex_norm", v) for v in range(self.P.n_vertices)]
        return labels

    # -- Jacobian ------------------------------------------------------------

    def jacobian(self, x: np.ndarray) -> sp.csr_matrix:
        P, body = self.P, self.body
        N, D, X = self._views(x)
        rows, cols, vals = [], [], []

        def put(r, c, vv):
            for k, v in zip(c, vv):
                rows.append(r)
                cols.append(k)
                vals.append(float(v))

        def ncols(f):
            return range(4 * f, 4 * f + 3)

        def dcol(f):
            return 4 * f + 3

        def vcols(v):
            return range(self.vert_off + 4 * v, self.vert_off + 4 * v + 4)

        r = 0
        for f in range(P.n_faces):
            put(r, ncols(f), 2.0 * N[f])
            r += 1
        for v, f in self.flags:
            put(r, ncols(f), X[v, 1:])
            put(r, [dcol(f)], [-X[v, 0]])
            put(r, vcols(v), [-D[f], N[f, 0], N[f, 1], N[f, 2]])
            r += 1
        for e in range(P.n_edges):
            f, g = P.faces_of_edge(e)
            p = self._tangent(x, e)
            u = np.cross(N[f], N[g])
            grad = body.gradient(p)
            free = e not in self.marked
            pcols = range(self.edge_off[e], self.edge_off[e] + 3) if free else None
            put(r, ncols(f), p)
            put(r, [dcol(f)], [-1.0])
            if free:
                put(r, pcols, N[f])
            r += 1
            put(r, ncols(g), p)
            put(r, [dcol(g)], [-1.0])
            if free:
                put(r, pcols, N[g])
            r += 1
            if free:
                put(r, pcols, grad)
                r += 1
            put(r, ncols(f), np.cross(N[g], grad))
            put(r, ncols(g), np.cross(grad, N[f]))
            if free:
                put(r, pcols, body.hessian(p) @ u)
            r += 1
        for v in range(P.n_vertices):
            put(r, vcols(v), 2.0 * X[v])
            r += 1
        return sp.csr_matrix((vals, (rows, cols)),
                             shape=(self.n_unknowns, self.n_unknowns))

    def singular_values(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.svd(self.jacobian(x).toarray(), compute_uv=False)


# ---------------------------------------------------------------------------
# public assembly ops

def assemble_residual(cfg: Configuration, body: ConvexBody,
                      P: PolyhedralComplex, frame: Frame, marks) -> np.ndarray:
    sys = ConstraintSystem(P, frame, marks, body)
    return sys.residual(sys.pack(cfg))


def assemble_jacobian(cfg: Configuration, body: ConvexBody,
                      P: PolyhedralComplex, frame: Frame, marks) -> sp.csr_matrix:
    sys = ConstraintSystem(P, frame, marks, body)
    return sys.jacobian(sys.pack(cfg))


def plane_quadruple_det(planes) -> float:
    """det of four stacked plane rows (n, -d); zero iff concurrent planes."""
    A = np.array([[n[0], n[1], n[2], -d] for n, d in planes])
    if A.shape != (4, 4):
        raise DimensionMismatch("need exactly four planes")
    return float(np.linalg.det(A))


# ---------------------------------------------------------------------------
# Newton and continuation

def _line_search(system, x, delta, res_inf, res_two):
    """Backtracking halving; accept any decrease of the residual, measured
    in max-norm or 2-norm. Returns None when exhausted."""
    t = 1.0
    while t >= 1e-8:
        x_try = system.renormalize(x + t * delta)
        r_try = system.residual(x_try)
        inf_try = float(np.max(np.abs(r_try)))
        two_try = float(np.linalg.norm(r_try))
        if inf_try < res_inf or two_try < res_two:
            return x_try, r_try, inf_try, two_try
        t *= 0.5
    return None


def _newton_core(system: ConstraintSystem, x: np.ndarray, tol: float,
                 max_iter: int):
    """Damped Newton. The linear solve is a sparse LU; if the factorization
    is singular or its direction cannot decrease the residual (which happens
    at consistent systems whose Jacobian loses rank, e.g. tangencies at flat
    spots of the body), a dense minimum-norm least-squares direction is tried
    before giving up. Degeneracy stays visible through the rank audit."""
    x = system.renormalize(x)
    r = system.residual(x)
    res = float(np.max(np.abs(r)))
    res2 = float(np.linalg.norm(r))
    for it in range(max_iter):
        if res < tol:
            return x, it, res
        J = system.jacobian(x).tocsc()
        accepted = None
        try:
            delta = spla.splu(J).solve(-r)
            if np.all(np.isfinite(delta)):
                accepted = _line_search(system, x, delta, res, res2)
        except RuntimeError:
            pass
        if accepted is None:
            delta = np.linalg.lstsq(J.toarray(), -r, rcond=1e-12)[0]
            if not np.all(np.isfinite(delta)):
                raise SingularJacobian("linear solve produced non-finite step")
            accepted = _line_search(system, x, delta, res, res2)
        if accepted is None:
            raise NoDecrease("line search exhausted at residual %.3e" % res)
        x, r, res, res2 = accepted
    if res < tol:
        return x, max_iter, res
    raise MaxIterations("residual %.3e after %d iterations" % (res, max_iter))


def newton_refine(cfg: Configuration, body: ConvexBody, P: PolyhedralComplex,
                  frame: Frame, marks, tol: float = 1e-11, max_iter: int = 50):
    """Damped Newton solve from cfg; returns (Configuration, SolveReport).

    The report carries the spectral condition estimate and rank deficiency of
    the Jacobian at the solution.
    """
    system = ConstraintSystem(P, frame, marks, body)
    x, iters, res = _newton_core(system, system.pack(cfg), tol, max_iter)
    sv = system.singular_values(x)
    report = SolveReport(converged=True, iterations=iters, final_residual=res,
                         jacobian_condition_estimate=float(sv[0] / sv[-1]),
                         rank_deficiency=int(np.sum(sv < 1e-12 * sv[0])))
    return system.unpack(x), report


def _degeneracy_guard(system: ConstraintSystem, x: np.ndarray,
                      opts: ContinuationOptions, s: float):
    """Abort rather than accept collapsing tangencies or face circles."""
    P = system.P
    T = np.array([system._tangent(x, e) for e in range(P.n_edges)])
    dmin = math.inf
    for i in range(len(T)):
        for j in range(i + 1, len(T)):
            dmin = min(dmin, float(np.linalg.norm(T[i] - T[j])))
    if dmin <= opts.min_tangent_separation:
        raise DegenerateConfiguration(
            "tangent points %.3e apart at s=%.6f" % (dmin, s))
    for f in range(P.n_faces):
        pts = T[list(P.boundary_edges(f))]
        size = max(float(np.linalg.norm(a - b))
                   for i, a in enumerate(pts) for b in pts[i + 1:])
        if size <= opts.min_face_circle_size:
            raise DegenerateConfiguration(
                "face %d circle of size %.3e at s=%.6f" % (f, size, s))


def continue_to_body(P: PolyhedralComplex, frame: Frame, marks_z,
                     path: BodyPath, opts: ContinuationOptions | None = None):
    """Track the configuration from the ball packing to the end of the path.

    marks_z are three distinct chart coordinates; at every step s the pinned
    tangent points are the chart images on the blended body, so the marks
    move continuously with s. Returns (Configuration, SolveReport).
    """
    opts = opts or ContinuationOptions()
    z = tuple(complex(zi) for zi in marks_z)
    if len({z[0], z[1], z[2]}) != 3:
        raise DegenerateMarks("marks %r are not distinct" % (z,))

    radii = packing.solve_radii(P, frame)
    planar = packing.layout_circles(P, frame, radii)
    spherical = packing.lift_normalize(planar, z)
    cfg0 = packing.koebe_config(spherical)

    def marks_at(body):
        chart = BodyChart(body)
        return np.array([chart.inverse(zi) for zi in z])

    history = []
    worst_cond = 0.0
    rank_def = 0
    total_iters = 0

    def audit(system, x):
        nonlocal worst_cond, rank_def
        if not opts.check_transversality:
            return
        sv = system.singular_values(x)
        worst_cond = max(worst_cond, float(sv[0] / sv[-1]))
        rank_def = int(np.sum(sv < 1e-12 * sv[0]))

    body0 = path.eval(0.0)
    system = ConstraintSystem(P, frame, marks_at(body0), body0)
    x, iters, res = _newton_core(system, system.pack(cfg0), opts.tol,
                                 opts.max_iter)
    total_iters += iters
    history.append((0.0, 0.0, iters))
    audit(system, x)
    _degeneracy_guard(system, x, opts, 0.0)

    s_prev, x_prev = 0.0, x
    s_prev2, x_prev2 = None, None
    ds = opts.ds_init
    while s_prev < 1.0 - 1e-15:
        s_try = min(1.0, s_prev + ds)
        body_s = path.eval(s_try)
        system = ConstraintSystem(P, frame, marks_at(body_s), body_s)
        if s_prev2 is not None and s_prev > s_prev2:
            w = (s_try - s_prev) / (s_prev - s_prev2)
            x0 = x_prev + w * (x_prev - x_prev2)
        else:
            x0 = x_prev
        try:
            x_new, iters, res = _newton_core(system, x0, opts.tol,
                                             opts.max_iter)
        except SolverError:
            ds *= 0.5
            if ds < opts.ds_min:
                report = SolveReport(converged=False, iterations=total_iters,
                                     final_residual=res,
                                     jacobian_condition_estimate=worst_cond
                                     or float("nan"),
                                     step_history=history,
                                     rank_deficiency=rank_def)
                raise StepUnderflow("continuation step fell below %.1e at "
                                    "s=%.6f" % (opts.ds_min, s_prev),
                                    last_good_s=s_prev, report=report)
            continue
        total_iters += iters
        history.append((s_try, ds, iters))
        audit(system, x_new)
        _degeneracy_guard(system, x_new, opts, s_try)
        s_prev2, x_prev2 = s_prev, x_prev
        s_prev, x_prev = s_try, x_new
        if iters <= 3:
            ds = min(ds * 1.5, opts.ds_max)

    report = SolveReport(converged=True, iterations=total_iters,
                         final_residual=res,
                         jacobian_condition_estimate=worst_cond or float("nan"),
                         step_history=history, rank_deficiency=rank_def)
    return system.unpack(x_prev), report
