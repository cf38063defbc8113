"""Closed triangulated surfaces with an intrinsic (edge-length) metric.

The background metric ``h0`` is given by one positive length per edge.  A
per-vertex conformal factor ``phi`` scales it to ``e^{2 phi} h0`` through
``l'_ij = l_ij exp((phi_i + phi_j) / 2)``.  Geometry is never read from an
embedding.

Conventions used throughout:

* vertex area ``A_i`` is one third of the incident triangle areas;
* ``K_i = (2 pi - sum of incident angles) / A_i`` (angle defect per area);
* ``laplacian`` is the cotangent approximation of ``div grad`` (negative
  semi-definite), ``(Lap u)_i = -(W u)_i / A_i`` with ``W`` the cotangent
  stiffness matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateTriangle, ParseError


@dataclass(frozen=True)
class Geometry:
    """Per-face quantities of one length assignment."""

    angles: np.ndarray        # (F, 3) angle at each corner
    face_areas: np.ndarray    # (F,)
    cot: np.ndarray           # (F, 3) cotangent of each corner angle


def triangle_geometry(la, lb, lc) -> Geometry:
    """Angles and areas of triangles with side ``la`` opposite corner a, etc.

    Areas use Kahan's stable Heron formula and angles the matching half-angle
    formulas; any non-positive factor means the strict triangle inequality fails.
    """
    L = np.stack([la, lb, lc], axis=-1)
    order = np.argsort(-L, axis=-1, kind="stable")
    s = np.take_along_axis(L, order, axis=-1)
    a, b, c = s[:, 0], s[:, 1], s[:, 2]
    f1, f2, f3, f4 = a + (b + c), c - (a - b), c + (a - b), a + (b - c)
    bad = (f1 <= 0) | (f2 <= 0) | (f3 <= 0) | (f4 <= 0)
    if np.any(bad):
        raise DegenerateTriangle(
            f"{int(bad.sum())} face(s) violate the strict triangle inequality "
            f"(first: {int(np.argmax(bad))})"
        )
    area = 0.25 * np.sqrt(f1 * f2 * f3 * f4)
    # half-angle formulas on the sorted sides keep needle angles accurate
    sorted_angles = 2.0 * np.stack([np.arctan2(np.sqrt(f3 * f4), np.sqrt(f1 * f2)),
                                    np.arctan2(np.sqrt(f2 * f4), np.sqrt(f1 * f3)),
                                    np.arctan2(np.sqrt(f2 * f3), np.sqrt(f1 * f4))], axis=-1)
    angles = np.empty_like(sorted_angles)
    np.put_along_axis(angles, order, sorted_angles, axis=-1)
    la2, lb2, lc2 = la * la, lb * lb, lc * lc
    num = np.stack([lb2 + lc2 - la2, la2 + lc2 - lb2, la2 + lb2 - lc2], axis=-1)
    four_area = 4.0 * area[:, None]
    return Geometry(angles, area, num / four_area)


class TriMesh:
    """A closed triangulated surface with edge lengths and a conformal factor.

    Parameters
    ----------
    faces : (F, 3) integer array of vertex indices ``0 .. V-1``.
    lengths : mapping ``(i, j) -> length`` or an array aligned with
        :attr:`edges` (sorted pairs, in first-seen order).
    genus : declared genus; must match the Euler characteristic.
    phi : optional per-vertex conformal factor (defaults to zero).
    """

    def __init__(self, faces, lengths, genus: int, phi=None, n_vertices: Optional[int] = None,
                 vertex_ids=None, meta=None):
        faces = np.asarray(faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise ValueError("faces must have shape (F, 3)")
        self.faces = faces
        self.n_vertices = int(n_vertices if n_vertices is not None else faces.max() + 1)
        self.genus = int(genus)
        self.vertex_ids = list(vertex_ids) if vertex_ids is not None else list(range(self.n_vertices))
        self.meta = dict(meta or {})

        # edges (b, c), (c, a), (a, b) are opposite corners a, b, c
        corner_edges = np.stack([faces[:, [1, 2]], faces[:, [2, 0]], faces[:, [0, 1]]], axis=1)
        keys = np.sort(corner_edges, axis=-1).reshape(-1, 2)
        edges, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        order = np.argsort(first)
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        self.edges = edges[order]
        self.face_edges = rank[inverse.ravel()].reshape(-1, 3)

        counts = np.bincount(self.face_edges.ravel(), minlength=len(self.edges))
        if np.any(counts != 2):
            raise ValueError(f"surface is not closed: {int(np.sum(counts != 2))} edge(s) "
                             f"not shared by exactly two faces")
        if np.any(faces[:, 0] == faces[:, 1]) or np.any(faces[:, 1] == faces[:, 2]) \
                or np.any(faces[:, 0] == faces[:, 2]):
            raise ValueError("a face repeats a vertex")
        used = np.zeros(self.n_vertices, dtype=bool)
        used[faces.ravel()] = True
        if not used.all():
            raise ValueError(f"vertex {int(np.argmin(used))} belongs to no face")
        chi = self.euler_characteristic
        if chi != 2 - 2 * self.genus:
            raise ValueError(f"Euler characteristic {chi} does not match genus {self.genus}")

        if isinstance(lengths, dict):
            arr = np.empty(len(self.edges))
            for k, (i, j) in enumerate(self.edges):
                key = (int(i), int(j))
                if key in lengths:
                    arr[k] = lengths[key]
                elif key[::-1] in lengths:
                    arr[k] = lengths[key[::-1]]
                else:
                    raise ValueError(f"missing length for edge {key}")
            lengths = arr
        lengths = np.asarray(lengths, dtype=float)
        if lengths.shape != (len(self.edges),):
            raise ValueError(f"expected {len(self.edges)} edge lengths, got {lengths.shape}")
        if np.any(~(lengths > 0)):
            raise ValueError("edge lengths must be positive")
        self.lengths = lengths
        self.phi = np.zeros(self.n_vertices) if phi is None else np.asarray(phi, dtype=float).copy()
        if self.phi.shape != (self.n_vertices,):
            raise ValueError("phi must have one value per vertex")
        self.geometry(False)
        self.geometry(True)

    # ---------------------------------------------------------------- topology

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    # ---------------------------------------------------------------- metric

    def scaled_lengths(self, phi=None):
        phi = self.phi if phi is None else np.asarray(phi, dtype=float)
        i, j = self.edges[:, 0], self.edges[:, 1]
        return self.lengths * np.exp(0.5 * (phi[i] + phi[j]))

    def with_phi(self, phi) -> "TriMesh":
        out = object.__new__(TriMesh)
        out.__dict__.update({k: v for k, v in self.__dict__.items() if k != "_geometry_cache"})
        out.phi = np.asarray(phi, dtype=float).copy()
        out.geometry(True)
        return out

    def conformally_scaled(self) -> "TriMesh":
        """New mesh whose background lengths are the scaled ones and whose phi is zero."""
        return self.rescaled(self.scaled_lengths())

    def rescaled(self, lengths) -> "TriMesh":
        out = object.__new__(TriMesh)
        out.__dict__.update({k: v for k, v in self.__dict__.items() if k != "_geometry_cache"})
        out.lengths = np.asarray(lengths, dtype=float).copy()
        out.phi = np.zeros(self.n_vertices)
        out.geometry(False)
        return out

    def geometry(self, scaled=False, phi=None) -> Geometry:
        if phi is not None:
            L = self.scaled_lengths(phi)
            return triangle_geometry(*(L[self.face_edges[:, k]] for k in range(3)))
        cache = self.__dict__.setdefault("_geometry_cache", {})
        key = "scaled" if scaled else "background"
        if key not in cache:
            L = self.scaled_lengths() if scaled else self.lengths
            cache[key] = triangle_geometry(*(L[self.face_edges[:, k]] for k in range(3)))
        return cache[key]

    def __repr__(self):
        return (f"<TriMesh V={self.n_vertices} E={self.n_edges} F={self.n_faces} "
                f"genus={self.genus}>")


# -------------------------------------------------------------------- operators


def vertex_areas(m: TriMesh, scaled=False, phi=None) -> np.ndarray:
    g = m.geometry(scaled, phi)
    return np.bincount(m.faces.ravel(), weights=np.repeat(g.face_areas / 3.0, 3),
                       minlength=m.n_vertices)


def angle_defects(m: TriMesh, scaled=False, phi=None) -> np.ndarray:
    g = m.geometry(scaled, phi)
    sums = np.bincount(m.faces.ravel(), weights=g.angles.ravel(), minlength=m.n_vertices)
    return 2.0 * math.pi - sums


def gaussian_curvature(m: TriMesh, scaled=False, phi=None) -> np.ndarray:
    """Angle defect divided by vertex area; ``scaled`` selects ``e^{2 phi} h0``."""
    return angle_defects(m, scaled, phi) / vertex_areas(m, scaled, phi)


def stiffness_matrix(m: TriMesh, scaled=False, phi=None) -> sp.csr_matrix:
    """Cotangent stiffness ``W`` with ``u.T W u = integral |grad u|^2`` for P1 functions."""
    g = m.geometry(scaled, phi)
    f = m.faces
    # corner a weights the opposite edge (b, c) by cot(a)/2
    i = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
    j = np.concatenate([f[:, 2], f[:, 0], f[:, 1]])
    w = 0.5 * np.concatenate([g.cot[:, 0], g.cot[:, 1], g.cot[:, 2]])
    n = m.n_vertices
    off = sp.coo_matrix((np.concatenate([-w, -w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
                        shape=(n, n))
    diag = np.bincount(i, weights=w, minlength=n) + np.bincount(j, weights=w, minlength=n)
    return (off + sp.diags(diag)).tocsr()


def laplacian(m: TriMesh, u, scaled=False) -> np.ndarray:
    """Cotangent ``div grad`` of a per-vertex function."""
    u = np.asarray(u, dtype=float)
    return -(stiffness_matrix(m, scaled) @ u) / vertex_areas(m, scaled)


def integrate(m: TriMesh, u, scaled=False) -> float:
    """``sum_i u_i A_i``."""
    return float(np.dot(np.asarray(u, dtype=float), vertex_areas(m, scaled)))


def total_area(m: TriMesh, scaled=False) -> float:
    return float(m.geometry(scaled).face_areas.sum())


def dirichlet_energy(m: TriMesh, u, scaled=False) -> float:
    u = np.asarray(u, dtype=float)
    return float(u @ (stiffness_matrix(m, scaled) @ u))


# -------------------------------------------------------------------- text I/O
#
#   V E F genus
#   <vertex id> [phi]           V lines
#   <id> <id> <id>              F lines
#   <id> <id> <length>          E lines
#
# Blank lines and '#' comments are ignored.


def _lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if body.strip():
            toks = []
            i = 0
            while i < len(body):
                if body[i].isspace():
                    i += 1
                    continue
                j = i
                while j < len(body) and not body[j].isspace():
                    j += 1
                toks.append((body[i:j], i + 1))
                i = j
            yield lineno, toks, len(raw)


def _num(tok, lineno, source, kind=float):
    word, col = tok
    try:
        return kind(word)
    except ValueError:
        what = "an integer" if kind is int else "a number"
        raise ParseError(f"expected {what}, got {word!r}", lineno, col, source) from None


def parse_mesh(text: str, source="<mesh>") -> TriMesh:
    lines = list(_lines(text))
    last_line = len(text.splitlines()) + 1
    if not lines:
        raise ParseError("empty mesh file", 1, 1, source)
    lineno, toks, _ = lines[0]
    if len(toks) != 4:
        raise ParseError("header must be 'V E F genus'", lineno, toks[0][1], source)
    V, E, F, genus = (_num(t, lineno, source, int) for t in toks)
    for t, val in zip(toks, (V, E, F)):
        if val <= 0:
            raise ParseError("counts must be positive", lineno, t[1], source)
    if genus < 0:
        raise ParseError("genus must be non-negative", lineno, toks[3][1], source)
    body = lines[1:]
    if len(body) < V + F + E:
        raise ParseError(f"truncated file: expected {V} vertex, {F} face and {E} edge lines, "
                         f"found {len(body)} data lines", last_line, 1, source)
    if len(body) > V + F + E:
        lineno, toks, _ = body[V + F + E]
        raise ParseError("unexpected extra line", lineno, toks[0][1], source)

    index = {}
    ids, phis = [], []
    for lineno, toks, width in body[:V]:
        if len(toks) not in (1, 2):
            raise ParseError("vertex line must be '<id> [phi]'", lineno, toks[0][1], source)
        vid = _num(toks[0], lineno, source, int)
        if vid in index:
            raise ParseError(f"duplicate vertex id {vid}", lineno, toks[0][1], source)
        index[vid] = len(ids)
        ids.append(vid)
        phis.append(_num(toks[1], lineno, source) if len(toks) == 2 else 0.0)

    def lookup(tok, lineno):
        vid = _num(tok, lineno, source, int)
        if vid not in index:
            raise ParseError(f"unknown vertex id {vid}", lineno, tok[1], source)
        return index[vid]

    faces = []
    for lineno, toks, _ in body[V:V + F]:
        if len(toks) != 3:
            raise ParseError("face line must list three vertex ids", lineno, toks[0][1], source)
        face = [lookup(t, lineno) for t in toks]
        if len(set(face)) != 3:
            raise ParseError("face repeats a vertex", lineno, toks[0][1], source)
        faces.append(face)

    lengths = {}
    for lineno, toks, _ in body[V + F:]:
        if len(toks) != 3:
            raise ParseError("edge line must be '<id> <id> <length>'", lineno, toks[0][1], source)
        a, b = lookup(toks[0], lineno), lookup(toks[1], lineno)
        length = _num(toks[2], lineno, source)
        if not length > 0:
            raise ParseError("edge length must be positive", lineno, toks[2][1], source)
        key = (min(a, b), max(a, b))
        if key in lengths:
            raise ParseError("duplicate edge", lineno, toks[0][1], source)
        lengths[key] = (length, lineno, toks[0][1])

    mesh_faces = np.array(faces, dtype=np.int64)
    # edge set of the faces, to report mismatches with line numbers
    corner = np.sort(np.concatenate([mesh_faces[:, [1, 2]], mesh_faces[:, [2, 0]],
                                     mesh_faces[:, [0, 1]]]), axis=1)
    face_edge_set = {tuple(map(int, e)) for e in corner}
    for key, (_, lineno, col) in lengths.items():
        if key not in face_edge_set:
            raise ParseError(f"edge {ids[key[0]]}-{ids[key[1]]} is not an edge of any face",
                             lineno, col, source)
    missing = face_edge_set - set(lengths)
    if missing:
        a, b = sorted(missing)[0]
        raise ParseError(f"no length given for edge {ids[a]}-{ids[b]} "
                         f"({len(missing)} missing)", last_line, 1, source)
    if len(face_edge_set) != E:
        raise ParseError(f"header declares E={E} but faces have {len(face_edge_set)} edges",
                         lines[0][0], lines[0][1][1][1], source)
    try:
        return TriMesh(mesh_faces, {k: v[0] for k, v in lengths.items()}, genus,
                       phi=phis, n_vertices=V, vertex_ids=ids)
    except DegenerateTriangle as exc:
        raise ParseError(str(exc), lines[0][0], 1, source) from None
    except ValueError as exc:
        raise ParseError(str(exc), lines[0][0], 1, source) from None


def read_mesh(path) -> TriMesh:
    path = Path(path)
    return parse_mesh(path.read_text(), source=str(path))


def format_mesh(m: TriMesh, with_phi=True) -> str:
    ids = m.vertex_ids
    out = [f"{m.n_vertices} {m.n_edges} {m.n_faces} {m.genus}"]
    for k in range(m.n_vertices):
        out.append(f"{ids[k]} {float(m.phi[k])!r}" if with_phi else f"{ids[k]}")
    for a, b, c in m.faces:
        out.append(f"{ids[a]} {ids[b]} {ids[c]}")
    for (a, b), length in zip(m.edges, m.lengths):
        out.append(f"{ids[a]} {ids[b]} {float(length)!r}")
    return "\n".join(out) + "\n"


def write_mesh(m: TriMesh, path, with_phi=True):
    Path(path).write_text(format_mesh(m, with_phi))
