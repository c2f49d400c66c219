"""Small-dimension convex geometry (d <= 3).

Convex hulls are computed here (monotone chain in the plane, incremental
hull in space); halfspace systems are turned into vertices by brute-force
basis enumeration, which is exact enough and cheap at the sizes we see.
"""
from itertools import combinations

import numpy as np

from .errors import DimensionUnsupported

MAX_DIM = 3
TOL = 1e-9


def _scale(points):
    return max(1.0, float(np.abs(points).max())) if points.size else 1.0


def unique_rows(points, tol=TOL):
    """Drop rows within ``tol`` (relative to data scale) of an earlier row."""
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        return points
    eps = tol * _scale(points)
    keep = []
    for i, p in enumerate(points):
        if not any(np.max(np.abs(points[j] - p)) <= eps for j in keep):
            keep.append(i)
    return points[keep]


def affine_frame(points, tol=TOL):
    """Origin, orthonormal basis (rows) and rank of the affine hull."""
    points = np.asarray(points, dtype=float)
    origin = points[0]
    centered = points - origin
    if len(points) == 1:
        return origin, np.zeros((0, points.shape[1])), 0
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(s > tol * _scale(points) * max(1, len(points))))
    return origin, vt[:rank], rank


def linear_frame(points, tol=TOL):
    """Orthonormal basis (rows) of the linear span."""
    points = np.asarray(points, dtype=float)
    _, s, vt = np.linalg.svd(points, full_matrices=False)
    rank = int(np.sum(s > tol * _scale(points) * max(1, len(points))))
    return vt[:rank]


def _hull_1d(points):
    x = points[:, 0]
    lo, hi = int(np.argmin(x)), int(np.argmax(x))
    return [lo] if x[lo] == x[hi] else [lo, hi]


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull_2d(points):
    """Andrew's monotone chain, counter-clockwise, collinear points dropped."""
    order = sorted(range(len(points)), key=lambda i: (points[i, 0], points[i, 1]))
    if len(order) <= 2:
        return order
    eps = 1e-12 * _scale(points) ** 2

    def chain(idx):
        out = []
        for i in idx:
            while len(out) >= 2 and _cross(points[out[-2]], points[out[-1]], points[i]) <= eps:
                out.pop()
            out.append(i)
        return out

    lower = chain(order)
    upper = chain(order[::-1])
    return lower[:-1] + upper[:-1]


def _hull_3d(points):
    """Incremental hull; returns indices of extreme points."""
    n = len(points)
    scale = _scale(points)
    eps = 1e-12 * scale
    # initial tetrahedron
    i0 = 0
    i1 = int(np.argmax(np.linalg.norm(points - points[i0], axis=1)))
    line = points[i1] - points[i0]
    i2 = int(np.argmax(np.linalg.norm(np.cross(points - points[i0], line), axis=1)))
    normal = np.cross(points[i1] - points[i0], points[i2] - points[i0])
    i3 = int(np.argmax(np.abs((points - points[i0]) @ normal)))
    centroid = points[[i0, i1, i2, i3]].mean(axis=0)

    faces = []

    def make_face(a, b, c):
        nrm = np.cross(points[b] - points[a], points[c] - points[a])
        length = np.linalg.norm(nrm)
        nrm = nrm / length
        off = nrm @ points[a]
        if nrm @ centroid - off > 0:
            return (a, c, b), -nrm, -off
        return (a, b, c), nrm, off

    for tri in ((i0, i1, i2), (i0, i1, i3), (i0, i2, i3), (i1, i2, i3)):
        faces.append(make_face(*tri))
    for p in range(n):
        if p in (i0, i1, i2, i3):
            continue
        visible = [f for f in faces if f[1] @ points[p] - f[2] > eps]
        if not visible:
            continue
        edges = {}
        for (a, b, c), _, _ in visible:
            for e in ((a, b), (b, c), (c, a)):
                edges[e] = edges.get(e, 0) + 1
        horizon = [e for e in edges if (e[1], e[0]) not in edges]
        faces = [f for f in faces if not any(f is v for v in visible)]
        for a, b in horizon:
            faces.append(make_face(a, b, p))
    incident = {}
    for tri, nrm, _ in faces:
        for v in tri:
            incident.setdefault(v, []).append(nrm)
    # a referenced point is extreme iff its incident face normals span R^3
    return sorted(v for v, ns in incident.items() if np.linalg.matrix_rank(np.array(ns), tol=1e-9) == 3)


def convex_hull_vertices(points):
    """Extreme points of conv(points) for ``d <= 3``, as an array of rows."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = points.shape[1]
    if d > MAX_DIM:
        raise DimensionUnsupported(f"convex hulls are limited to d <= {MAX_DIM}, got {d}")
    points = unique_rows(points)
    if len(points) <= 1:
        return points
    origin, frame, rank = affine_frame(points)
    if rank == 0:
        return points[:1]
    if rank < d:
        local = (points - origin) @ frame.T
        return points[_hull_indices(local)]
    return points[_hull_indices(points)]


def _hull_indices(points):
    d = points.shape[1]
    if d == 1:
        return _hull_1d(points)
    if d == 2:
        return _hull_2d(points)
    return _hull_3d(points)


def enumerate_vertices(a, b, tol=TOL):
    """Vertices of ``{x : a x <= b}`` by brute-force basis enumeration."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k = a.shape[1]
    if k == 0:
        return np.zeros((1, 0))
    out = []
    for rows in combinations(range(len(a)), k):
        sub = a[list(rows)]
        if np.linalg.matrix_rank(sub, tol=1e-12 * max(1.0, np.abs(sub).max())) < k:
            continue
        x = np.linalg.solve(sub, b[list(rows)])
        slack = a @ x - b
        if np.all(slack <= tol * (np.abs(b) + np.abs(a) @ np.abs(x) + 1.0)):
            out.append(x)
    if not out:
        return np.zeros((0, k))
    return unique_rows(np.array(out), tol)


def enumerate_rays(a, tol=TOL):
    """Extreme rays (unit vectors) of the pointed cone ``{x : a x <= 0}``."""
    a = np.asarray(a, dtype=float)
    k = a.shape[1]
    out = []
    for rows in combinations(range(len(a)), k - 1):
        sub = a[list(rows)].reshape(len(rows), k)
        if len(rows):
            _, s, vt = np.linalg.svd(sub)
            if np.sum(s > 1e-12 * max(1.0, np.abs(sub).max())) < k - 1:
                continue
            c = vt[-1]
        else:
            c = np.ones(1)
        for sign in (1.0, -1.0):
            ray = sign * c
            if np.all(a @ ray <= tol * (np.abs(a) @ np.abs(ray) + 1e-300)):
                out.append(ray / np.linalg.norm(ray))
    if not out:
        return np.zeros((0, k))
    return unique_rows(np.array(out), tol)


def polar_polyhedron(vertices):
    """Polar of conv(vertices) within span(vertices).

    Returns ``(frame, poly_vertices, rays)`` where ``frame`` holds an
    orthonormal basis of span(vertices) as rows and the other arrays are in
    frame coordinates.  The polar in the ambient space is this polyhedron
    plus the orthogonal complement of the span.
    """
    vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
    frame = linear_frame(vertices)
    local = vertices @ frame.T
    if frame.shape[0] == 0:
        return frame, np.zeros((1, 0)), np.zeros((0, 0))
    poly = enumerate_vertices(local, np.ones(len(local)))
    rays = enumerate_rays(local)
    return frame, poly, rays


def bipolar_vertices(vertices):
    """Vertices of the bipolar computed by two rounds of halfspace duality.

    The first round gives the polar as vertices plus extreme rays; the
    second reads those back as the halfspaces ``<p, x> <= 1`` and
    ``<c, x> <= 0`` and enumerates the resulting bounded polytope.
    """
    vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
    d = vertices.shape[1]
    if d > MAX_DIM:
        raise DimensionUnsupported(f"polars are limited to d <= {MAX_DIM}, got {d}")
    frame, poly, rays = polar_polyhedron(vertices)
    if frame.shape[0] == 0:
        return np.zeros((1, d))
    k = frame.shape[0]
    a = np.vstack([poly, rays]) if len(rays) else poly
    b = np.concatenate([np.ones(len(poly)), np.zeros(len(rays))])
    local = enumerate_vertices(a.reshape(-1, k), b)
    return local @ frame


def hausdorff(a, b):
    """Hausdorff distance between two finite point sets."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    dist = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))
