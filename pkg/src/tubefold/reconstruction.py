"""Rebuild the folded tube from an orbit and export it as a triangle mesh.

Vertices are generated in global coordinates by chaining three-sphere
intersections, so consecutive zigzags share their common vertices exactly
and rings stack along the X axis without any separate translation. Every
vertex is stored as a base vertex plus its N rotated copies: global index
``b * N + j`` is base vertex ``b`` rotated by ``2*pi*j/N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DomainError, FiniteSolution
from .geometry import (ZigzagState, is_finite_n, rotation_x, sphere_point,
                       state_from_vertices, zigzag_vertices)
from .maps import ModuleSpec, _f, _g, fold_params

CONTACT_TOL = 1e-9


@dataclass
class TubeMesh:
    """Triangle mesh of a reconstructed tube.

    ``ring_index`` tags each vertex with the module iteration that created it
    (0 for the initial zigzag). ``n_fold`` is the rotational order N, or
    ``None`` for a generic mesh. ``states`` holds the map state after every
    completed ring and ``zigzags`` the global indices of its (U1, U2, U3).
    """

    vertices: np.ndarray
    facets: np.ndarray
    ring_index: np.ndarray
    n_fold: int | None = None
    truncated: bool = False
    reason: str | None = None
    states: list | None = None
    zigzags: list | None = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.facets = np.asarray(self.facets, dtype=np.int64).reshape(-1, 3)
        self.ring_index = np.asarray(self.ring_index, dtype=np.int64).reshape(-1)
        if len(self.facets) and (self.facets.min() < 0 or self.facets.max() >= len(self.vertices)):
            raise ValueError("facet index out of range")

    @property
    def n_rings(self) -> int:
        return int(self.ring_index.max()) if len(self.ring_index) else 0

    def edges(self) -> np.ndarray:
        """Unique undirected edges of all facets, sorted."""
        f = self.facets
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)


def build_tube(spec: ModuleSpec, x0: ZigzagState, n_rings: int) -> TubeMesh:
    """Fold ``n_rings`` modules starting from the zigzag ``x0``.

    On a finite solution the mesh stops at the last complete ring and is
    flagged ``truncated``.
    """
    if not is_finite_n(spec.N):
        raise DomainError("reconstruction needs a finite module count N")
    if not spec.conservative:
        raise ValueError("reconstruction supports conservative modules only (s = 1, mu = 0)")
    if n_rings < 0:
        raise ValueError("n_rings must be >= 0")
    N = int(spec.N)
    R = [rotation_x(2.0 * math.pi * j / N) for j in range(N)]
    p0 = fold_params(spec.steps[0], spec.steps[1 % spec.m], N)
    u1, u2, _, _ = zigzag_vertices(x0, p0)
    base = [u1, u2]
    base_ring = [0, 0]

    new_base: list = []

    def pos(v):
        b, j = v
        pt = base[b] if b < len(base) else new_base[b - len(base)]
        return R[j % N] @ pt

    # triplet of (base index, rotation) for U1, U2, U3
    tri = ((0, 0), (1, 0), (0, 1))
    th, I = x0.theta, x0.action
    faces: list[tuple] = []
    states = [x0]
    zig = [tri]
    truncated, reason = False, None
    sn, cs = math.sin(math.pi / N), math.cos(math.pi / N)
    for ring in range(1, n_rings + 1):
        new_base.clear()
        new_faces = []
        t_tri, t_th, t_I = tri, th, I
        try:
            for i, step in enumerate(spec.steps):
                nxt = spec.steps[(i + 1) % spec.m]
                p = fold_params(step, nxt, N)
                # the map decides termination, the geometry follows it
                t_th, t_I = _f(t_th, t_I, p)
                P1, P2, P3 = (pos(v) for v in t_tri)
                V = sphere_point(P1, P2, P3, p.r1, p.r2, p.r3, p.sigma)
                if V is None:
                    raise FiniteSolution("spheres do not meet")
                b = len(base) + len(new_base)
                new_base.append(V)
                vb = (b, 0)
                new_faces += [(t_tri[0], t_tri[1], vb), (t_tri[1], t_tri[2], vb)]
                t_tri = (vb, t_tri[2], (b, 1))
                if step.k:
                    r3, r1 = spec.g_radii(i)
                    t_th, t_I = _g(t_th, t_I, r3, r1, sn, cs)
                    # U2 vertices become the endpoints
                    a, c = t_tri[1], t_tri[2]
                    t_tri = (a, c, (a[0], a[1] + 1))
        except FiniteSolution as exc:
            truncated, reason = True, str(exc)
            break
        base += new_base
        base_ring += [ring] * len(new_base)
        faces += new_faces
        tri, th, I = t_tri, t_th, t_I
        tri = tuple((b, j % N) for b, j in tri)
        states.append(ZigzagState.wrapped(th, I))
        zig.append(tri)

    verts = np.array([R[j] @ v for v in base for j in range(N)])
    ring_index = np.repeat(base_ring, N)
    fac = np.array([[b * N + (j + r) % N for (b, j) in face]
                    for face in faces for r in range(N)], dtype=np.int64).reshape(-1, 3)
    zigzags = [tuple(b * N + j % N for b, j in z) for z in zig]
    return TubeMesh(verts, fac, ring_index, N, truncated, reason, states, zigzags)


def zigzag_state_at(mesh: TubeMesh, tri) -> ZigzagState:
    """Read (theta, I) back from three global vertex indices."""
    v = mesh.vertices
    return state_from_vertices(v[tri[0]], v[tri[1]], v[tri[2]])


# -- export ----------------------------------------------------------------------

def export_obj(mesh: TubeMesh, path) -> None:
    """Write a Wavefront OBJ file; ordering and float format are fixed."""
    lines = ["# tubefold mesh",
             f"# vertices {len(mesh.vertices)} facets {len(mesh.facets)}"]
    lines += [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.facets]
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    """Minimal OBJ reader for ``v`` and triangular ``f`` records (0-based facets)."""
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return np.array(verts).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def vertex_rows(mesh: TubeMesh):
    """Rows (ring, module, vertex_id, x, y, z) for a CSV dump."""
    n = mesh.n_fold or 1
    for idx, (x, y, z) in enumerate(mesh.vertices):
        yield int(mesh.ring_index[idx]), idx % n, idx, float(x), float(y), float(z)


# -- self-intersection -----------------------------------------------------------

class Intersection(NamedTuple):
    found: bool
    pair: tuple[int, int] | None


def _segments_hit(p0, p1, a, b, c, eps=1e-12):
    """Vectorised segment/triangle test (Moller-Trumbore)."""
    d = p1 - p0
    e1, e2 = b - a, c - a
    h = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, h)
    ok = np.abs(det) > eps
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = p0 - a
    u = inv * np.einsum("ij,ij->i", s, h)
    q = np.cross(s, e1)
    v = inv * np.einsum("ij,ij->i", d, q)
    t = inv * np.einsum("ij,ij->i", e2, q)
    tol = CONTACT_TOL
    return ok & (u > tol) & (v > tol) & (u + v < 1 - tol) & (t > tol) & (t < 1 - tol)


def _pairs_intersect(V, F, ia, ib):
    A, B = V[F[ia]], V[F[ib]]
    hit = np.zeros(len(ia), dtype=bool)
    for k in range(3):
        hit |= _segments_hit(A[:, k], A[:, (k + 1) % 3], B[:, 0], B[:, 1], B[:, 2])
        hit |= _segments_hit(B[:, k], B[:, (k + 1) % 3], A[:, 0], A[:, 1], A[:, 2])
    return hit


def self_intersects(mesh: TubeMesh, chunk: int = 200_000) -> Intersection:
    """Brute-force triangle/triangle test over facet pairs sharing no vertex.

    Facets touching within the contact tolerance are not counted. For an
    N-fold symmetric tube only the facets of the first module copy need to be
    tested against the rest, since every intersecting pair can be rotated
    into that position.
    """
    if len(mesh.facets) == 0:
        raise ValueError("empty mesh")
    V, F = mesh.vertices, mesh.facets
    lo, hi = V[F].min(axis=1), V[F].max(axis=1)
    if mesh.n_fold:
        first = np.nonzero(_module_zero(F, mesh.n_fold))[0]
    else:
        first = np.arange(len(F))
    others = np.arange(len(F))
    for a in first:
        cand = others[others > a] if not mesh.n_fold else others[others != a]
        box = np.all((lo[cand] <= hi[a] + CONTACT_TOL) & (hi[cand] >= lo[a] - CONTACT_TOL), axis=1)
        cand = cand[box]
        shared = (F[cand][:, :, None] == F[a][None, None, :]).any(axis=(1, 2))
        cand = cand[~shared]
        for s in range(0, len(cand), chunk):
            cb = cand[s:s + chunk]
            hit = _pairs_intersect(V, F, np.full(len(cb), a), cb)
            if hit.any():
                b = int(cb[np.argmax(hit)])
                return Intersection(True, (int(a), b))
    return Intersection(False, None)


def _module_zero(F, N):
    # a facet of the first module copy uses rotation 0 for its newest vertex
    rot = F % N
    newest = F.argmax(axis=1)
    return rot[np.arange(len(F)), newest] == 0
