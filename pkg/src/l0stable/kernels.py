"""Hot numeric kernels, each with a numba and a numpy implementation.

The public names at the bottom pick one according to ``_accel.USE_NUMBA``;
both variants stay importable (``*_numba`` / ``*_numpy``) so tests and the
benchmark can compare them.
"""
import importlib.util
from pathlib import Path

import numpy as np

from . import _gjk
from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# discrete Legendre transform with upward rounding
# ---------------------------------------------------------------------------
#
# g[a, j] = max_i RU(<x_i, y_j> - f[a, i]) where RU rounds the exact difference
# of the two floats up to the next representable value.  Applying the kernel
# twice then gives f** <= f bit-exactly, since each term of the second pass is
# RU of a real that is <= f.  Dot products are summed left to right in both
# kernels so that <x_i, y_j> is the same float in either pass.


@njit
def conjugate_table_numba(x, f, y):
    n, d = x.shape
    m = y.shape[0]
    atoms = f.shape[0]
    dots = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                s += x[i, k] * y[j, k]
            dots[i, j] = s
    out = np.full((atoms, m), -np.inf)
    for a in range(atoms):
        for j in range(m):
            best = -np.inf
            for i in range(n):
                p = dots[i, j]
                q = -f[a, i]
                s = p + q
                if np.isfinite(s):
                    bb = s - p
                    e = (p - (s - bb)) + (q - bb)
                    if e > 0.0:
                        s = np.nextafter(s, np.inf)
                if s > best:
                    best = s
            out[a, j] = best
    return out


def conjugate_table_numpy(x, f, y):
    d = x.shape[1]
    dots = x[:, None, 0] * y[None, :, 0]
    for k in range(1, d):
        dots = dots + x[:, None, k] * y[None, :, k]
    p = dots[None, :, :]
    q = -f[:, :, None]
    with np.errstate(invalid="ignore"):
        s = p + q
        bb = s - p
        e = (p - (s - bb)) + (q - bb)
        s = np.where(np.isfinite(s) & (e > 0.0), np.nextafter(s, np.inf), s)
    return s.max(axis=1)


# ---------------------------------------------------------------------------
# greedy Euclidean cover: first uncovered point (input order) opens a center
# ---------------------------------------------------------------------------


@njit
def greedy_cover_numba(points, r):
    n, d = points.shape
    owner = np.full(n, -1, dtype=np.int64)
    centers = np.empty(n, dtype=np.int64)
    nc = 0
    for c in range(n):
        if owner[c] >= 0:
            continue
        centers[nc] = c
        for i in range(n):
            if owner[i] >= 0:
                continue
            s = 0.0
            for k in range(d):
                t = points[i, k] - points[c, k]
                s += t * t
            if np.sqrt(s) <= r:
                owner[i] = nc
        nc += 1
    return centers[:nc], owner


def greedy_cover_numpy(points, r):
    n, d = points.shape
    owner = np.full(n, -1, dtype=np.int64)
    centers = []
    while True:
        free = np.flatnonzero(owner < 0)
        if free.size == 0:
            break
        c = free[0]
        diff = points - points[c]
        s = diff[:, 0] * diff[:, 0]
        for k in range(1, d):
            s = s + diff[:, k] * diff[:, k]
        hit = (owner < 0) & (np.sqrt(s) <= r)
        owner[hit] = len(centers)
        centers.append(c)
    return np.array(centers, dtype=np.int64), owner


# ---------------------------------------------------------------------------
# closest points between two convex hulls (GJK on the Minkowski difference)
# ---------------------------------------------------------------------------


def _load_plain_gjk():
    """Second copy of ``_gjk`` with every decorator replaced by the identity."""
    spec = importlib.util.spec_from_file_location("l0stable._gjk_plain", Path(__file__).with_name("_gjk.py"))
    module = importlib.util.module_from_spec(spec)
    module.__dict__["JIT"] = lambda fn: fn
    module.__package__ = "l0stable"
    spec.loader.exec_module(module)
    return module


_distance_numba = _gjk._polytope_distance
_distance_numpy = _load_plain_gjk()._polytope_distance


def polytope_distance_numba(a, b):
    """``(dist, closest_a, closest_b, touching)`` for conv(a) and conv(b)."""
    return _distance_numba(np.ascontiguousarray(a, dtype=float), np.ascontiguousarray(b, dtype=float))


def polytope_distance_numpy(a, b):
    return _distance_numpy(np.ascontiguousarray(a, dtype=float), np.ascontiguousarray(b, dtype=float))


if USE_NUMBA:
    conjugate_table = conjugate_table_numba
    greedy_cover = greedy_cover_numba
    polytope_distance = polytope_distance_numba
else:
    conjugate_table = conjugate_table_numpy
    greedy_cover = greedy_cover_numpy
    polytope_distance = polytope_distance_numpy
