"""Reference meshes: spheres, a flat torus and a hyperbolic genus-2 surface.

Lengths are always computed intrinsically (chordal distances on the sphere,
flat distances on the torus, hyperbolic distances for genus 2).  Any
coordinates stored in ``mesh.meta`` are only there for building test
functions on the surface.
"""

from __future__ import annotations

import math

import numpy as np

from .mesh import TriMesh


# ------------------------------------------------------------------ spheres


def _icosahedron_points():
    t = (1 + math.sqrt(5)) / 2
    pts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True), faces


def _from_points(points, faces, genus, meta=None):
    corner = np.sort(np.concatenate([faces[:, [1, 2]], faces[:, [2, 0]], faces[:, [0, 1]]]), axis=1)
    lengths = {tuple(map(int, e)): float(np.linalg.norm(points[e[0]] - points[e[1]]))
               for e in np.unique(corner, axis=0)}
    return TriMesh(faces, lengths, genus, n_vertices=len(points), meta=meta)


def icosahedron() -> TriMesh:
    """Unit-circumradius icosahedron (chordal edge lengths)."""
    pts, faces = _icosahedron_points()
    return _from_points(pts, faces, 0, {"points": pts})


def icosphere(level: int = 2) -> TriMesh:
    """Loop-subdivided icosahedron with vertices projected to the unit sphere."""
    pts, faces = _icosahedron_points()
    pts = list(pts)
    for _ in range(level):
        mid = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in mid:
                p = pts[a] + pts[b]
                pts.append(p / np.linalg.norm(p))
                mid[key] = len(pts) - 1
            return mid[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.array(new)
    pts = np.array(pts)
    return _from_points(pts, faces, 0, {"points": pts})


# ------------------------------------------------------------------ flat torus


def flat_torus(n: int = 8, size: float = 1.0) -> TriMesh:
    """Square torus of side ``size`` on an ``n x n`` grid, each square cut along a diagonal."""
    if n < 3:
        raise ValueError("flat_torus needs n >= 3")

    def vid(i, j):
        return (i % n) * n + (j % n)

    faces = []
    for i in range(n):
        for j in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            faces += [[a, b, c], [a, c, d]]
    h = size / n
    coords = np.array([[i * h, j * h] for i in range(n) for j in range(n)])
    faces = np.array(faces)
    lengths = {}
    for f in faces:
        for u, v in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            key = (min(u, v), max(u, v))
            d = coords[u] - coords[v]
            d -= size * np.round(d / size)
            lengths[key] = float(np.hypot(*d))
    return TriMesh(faces, lengths, 1, n_vertices=n * n,
                   meta={"coords": coords, "size": size, "n": n})


# ------------------------------------------------------------------ genus 2
#
# A regular hyperbolic octagon with interior angles pi/4, sides glued by the
# word a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1 (side k, k in {2, 3, 6, 7}, is
# glued to side k-2 with reversed direction).  The eight triangles
# (centre, v_k, v_{k+1}) are each subdivided by a barycentric lattice taken
# in the hyperboloid model, so lattice lines along the original edges are
# geodesic and side points match under the gluing.

OCTAGON_CIRCUMRADIUS = math.acosh(3 + 2 * math.sqrt(2))
OCTAGON_INRADIUS = math.acosh(1 + math.sqrt(2))


def _hyperboloid(theta, r):
    return np.array([math.cosh(r), math.sinh(r) * math.cos(theta), math.sinh(r) * math.sin(theta)])


def _normalise(X):
    q = X[0] ** 2 - X[1] ** 2 - X[2] ** 2
    return X / math.sqrt(q)


def hyperbolic_distance(X, Y) -> float:
    """Distance on the hyperboloid via ``2 asinh(|X - Y| / 2)`` (stable for short edges)."""
    d = X - Y
    q = d[1] ** 2 + d[2] ** 2 - d[0] ** 2
    return 2.0 * math.asinh(0.5 * math.sqrt(max(q, 0.0)))


def genus2_octagon(n: int = 8) -> TriMesh:
    """Hyperbolic genus-2 surface (``K = -1``, area ``4 pi``) with ``8 n^2`` faces.

    ``mesh.meta["disk"]`` holds Poincare-disk coordinates of one
    representative per vertex and ``meta["radius"]`` the hyperbolic distance
    from the octagon centre.
    """
    if n < 3:
        raise ValueError("genus2_octagon needs n >= 3")
    corners = [_hyperboloid(2 * math.pi * k / 8, OCTAGON_CIRCUMRADIUS) for k in range(8)]
    centre = np.array([1.0, 0.0, 0.0])

    def key(t, i, j):
        if i == 0 and j == 0:
            return ("c",)
        if i + j == n:
            if i == 0 or j == 0:
                return ("V",)
            if t % 4 in (2, 3):
                return ("side", t - 2, n - j)
            return ("side", t, j)
        if j == 0:
            return ("spoke", t, i)
        if i == 0:
            return ("spoke", (t + 1) % 8, j)
        return ("int", t, i, j)

    ids, positions = {}, []

    def vertex(t, i, j):
        k = key(t, i, j)
        X = _normalise((n - i - j) * centre + i * corners[t] + j * corners[(t + 1) % 8])
        if k not in ids:
            ids[k] = len(positions)
            positions.append(X)
        return ids[k], X

    faces, lengths = [], {}

    def add(tri):
        idx = [p[0] for p in tri]
        faces.append(idx)
        for (a, A), (b, B) in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            e = (min(a, b), max(a, b))
            d = hyperbolic_distance(A, B)
            if e in lengths and abs(lengths[e] - d) > 1e-10 * d:
                raise AssertionError(f"inconsistent gluing on edge {e}")
            lengths[e] = d

    for t in range(8):
        for i in range(n):
            for j in range(n - i):
                add([vertex(t, i, j), vertex(t, i + 1, j), vertex(t, i, j + 1)])
                if i + j <= n - 2:
                    add([vertex(t, i + 1, j), vertex(t, i + 1, j + 1), vertex(t, i, j + 1)])

    P = np.array(positions)
    disk = P[:, 1:] / (1.0 + P[:, :1])
    radius = np.arccosh(np.maximum(P[:, 0], 1.0))
    return TriMesh(np.array(faces), lengths, 2, n_vertices=len(P),
                   meta={"disk": disk, "radius": radius, "n": n})


def bump_field(mesh: TriMesh, rng, n_bumps=3, amplitude=0.3, support=None):
    """Smooth random function on the genus-2 fixture: sum of ``(1 - s^2)^4`` bumps.

    Bumps are centred inside the inscribed disk of the octagon and vanish on
    its boundary, so the result is smooth on the glued surface.
    ``support`` is the bump radius in hyperbolic distance.
    """
    disk = mesh.meta["disk"]
    support = support or 0.9 * OCTAGON_INRADIUS
    reach = OCTAGON_INRADIUS - support
    out = np.zeros(mesh.n_vertices)
    for _ in range(n_bumps):
        r = reach * math.sqrt(rng.uniform())
        a = rng.uniform(0, 2 * math.pi)
        c = math.tanh(r / 2) * np.array([math.cos(a), math.sin(a)])
        d = _disk_distance(disk, c)
        s2 = np.clip((d / support) ** 2, 0.0, 1.0)
        out += rng.uniform(-amplitude, amplitude) * (1.0 - s2) ** 4
    return out


def _disk_distance(P, c):
    num = np.sum((P - c) ** 2, axis=1)
    den = (1 - np.sum(P**2, axis=1)) * (1 - c @ c)
    return np.arccosh(1.0 + 2.0 * num / den)
