"""Independent reference computations used by the tests.

Each oracle takes a different route from the library: exhaustive
enumeration, scipy's qhull and LP solvers, or closed forms.
"""
import itertools

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection


def product_of_sections(vectors):
    """All concatenations of a finite family, as a set of per-atom tuples."""
    rows = [v.key() for v in vectors]
    n = len(rows[0])
    sections = [sorted({r[a] for r in rows}) for a in range(n)]
    return set(itertools.product(*sections))


def brute_min(f, K):
    """Minimum of ``f`` over every enumerated selector of ``K``."""
    from l0stable.sets import selectors

    return np.min(np.stack([f(s).values for s in selectors(K)]), axis=0)


def per_atom_rank(generators, atom):
    cols = np.stack([g.points[atom] for g in generators], axis=1)
    if not np.any(cols):
        return 0
    return int(np.linalg.matrix_rank(cols, tol=1e-9 * np.abs(cols).max()))


def _frame(points, tol=1e-10):
    c = points.mean(axis=0)
    u, s, vt = np.linalg.svd(points - c)
    k = int(np.sum(s > tol * max(1.0, s.max() if s.size else 0.0)))
    return c, vt[:k]


def hull_vertices(points):
    """Extreme points via qhull in the affine hull of ``points``."""
    points = np.unique(np.asarray(points, dtype=float), axis=0)
    c, basis = _frame(points)
    k = basis.shape[0]
    if k == 0:
        return points[:1]
    coords = (points - c) @ basis.T
    if k == 1:
        return points[[np.argmin(coords[:, 0]), np.argmax(coords[:, 0])]]
    return points[ConvexHull(coords).vertices]


def hull_with_origin(points):
    return hull_vertices(np.vstack([points, np.zeros(points.shape[1])]))


def hulls_intersect(a, b):
    """LP feasibility of ``sum l_i a_i = sum m_j b_j`` with simplex weights."""
    na, nb = len(a), len(b)
    d = a.shape[1]
    aeq = np.zeros((d + 2, na + nb))
    aeq[:d, :na] = a.T
    aeq[:d, na:] = -b.T
    aeq[d, :na] = 1
    aeq[d + 1, na:] = 1
    beq = np.concatenate([np.zeros(d), [1.0, 1.0]])
    res = linprog(np.zeros(na + nb), A_eq=aeq, b_eq=beq, bounds=[(0, None)] * (na + nb), method="highs")
    return res.status == 0


def polar_vertices(vertices):
    """Vertices of ``{y : V y <= 1}`` (bounded case) by qhull halfspace intersection."""
    v = np.asarray(vertices, dtype=float)
    if v.shape[1] == 1:
        return np.array([[1.0 / v.min()], [1.0 / v.max()]])
    halfspaces = np.hstack([v, -np.ones((len(v), 1))])
    hs = HalfspaceIntersection(halfspaces, np.zeros(v.shape[1]))
    return hull_vertices(hs.intersections)


def hausdorff(a, b):
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def conjugate_loop(x, f, y):
    """Plain double loop ``max_i <x_i, y_j> - f_i`` in Python floats.

    Dot products are summed left to right; the difference rounds to nearest.
    """

    def dot(u, v):
        s = 0.0
        for a, b in zip(u.tolist(), v.tolist()):
            s += a * b
        return s

    out = np.empty(len(y))
    for j, yj in enumerate(y):
        out[j] = max(dot(xi, yj) - float(fi) for xi, fi in zip(x, f))
    return out


def affine_fixed_point(a, b):
    """Fixed point of ``x -> a x + b`` with scalar ``a`` per atom."""
    return b / (1.0 - a)[:, None]
