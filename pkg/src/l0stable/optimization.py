"""Conditional optimisation: argmin over stable compact sets, the stable
Banach fixed point, strong separation, grid conjugation and polars."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    ContractionViolated,
    DimensionUnsupported,
    GridMismatch,
    MaxIterations,
    NotDisjoint,
    RateNotContractive,
    ValidationError,
)
from .geometry import MAX_DIM, bipolar_vertices, polar_polyhedron
from .measure import Event, Partition
from .scalars import L0Scalar, StepNatural
from .sets import L0Vector, Polytope, StableSet, concat_vectors

STABILITY_SAMPLES = 200


class StableFunction:
    """``f: (L0)^d -> L0`` given by an evaluator on ``L0Vector``.

    Stability forces ``f(x)`` on an atom to depend on ``x`` at that atom
    only; :meth:`check_stability` samples random concatenations to confirm.
    ``convex`` and ``lsc`` are caller assertions kept for reference.
    """

    def __init__(self, evaluator, convex=None, lsc=True, name=None):
        self.evaluator = evaluator
        self.convex = convex
        self.lsc = lsc
        self.name = name

    def __call__(self, x):
        out = self.evaluator(x)
        if not isinstance(out, L0Scalar):
            out = L0Scalar(x.algebra, out)
        return out

    def check_stability(self, algebra, dim, samples=STABILITY_SAMPLES, seed=0):
        """Number of sampled concatenations where ``f`` fails to commute."""
        rng = np.random.default_rng(seed)
        bad = 0
        for _ in range(samples):
            k = int(rng.integers(1, algebra.atom_count + 1))
            part = Partition.from_labels(algebra, rng.integers(k, size=algebra.atom_count))
            xs = [L0Vector(algebra, rng.normal(size=(algebra.atom_count, dim)) * 3) for _ in range(part.num_blocks)]
            lhs = self(concat_vectors(part, xs)).values
            vals = np.stack([self(x).values for x in xs])
            rhs = vals[part.labels, np.arange(algebra.atom_count)]
            bad += int(not np.array_equal(lhs, rhs))
        return bad


class StableMap:
    """``T: (L0)^d -> (L0)^d`` given by an evaluator on ``L0Vector``."""

    def __init__(self, evaluator, name=None):
        self.evaluator = evaluator
        self.name = name

    def __call__(self, x):
        out = self.evaluator(x)
        if not isinstance(out, L0Vector):
            out = L0Vector(x.algebra, out)
        return out


# ---------------------------------------------------------------------------
# argmin
# ---------------------------------------------------------------------------


def _probe_values(f, K):
    """``vals[j, atom] = f`` at the j-th point of each section (clamped)."""
    sizes = np.array(K.sizes())
    alg = K.algebra
    vals = np.full((sizes.max(), alg.atom_count), np.inf)
    for j in range(sizes.max()):
        pts = np.stack([rep.points[min(j, len(rep.points) - 1)] for rep in K.per_atom])
        v = f(L0Vector(alg, pts)).values
        ok = j < sizes
        vals[j, ok] = v[ok]
    return vals


def conditional_argmin(f, K):
    """Measurable minimiser ``x0`` of a stable ``f`` over ``K`` and ``f(x0)``.

    Ties on an atom go to the lexicographically smallest point.
    """
    if not K.is_points:
        raise ValidationError("argmin enumerates Points sets")
    vals = _probe_values(f, K)
    x0 = np.zeros((K.algebra.atom_count, K.dim))
    for atom, rep in enumerate(K.per_atom):
        col = vals[: len(rep.points), atom]
        ties = np.flatnonzero(col == col.min())
        pts = rep.points[ties]
        x0[atom] = pts[np.lexsort(pts.T[::-1])[0]]
    x0 = L0Vector(K.algebra, x0)
    return x0, f(x0)


# ---------------------------------------------------------------------------
# Banach fixed point
# ---------------------------------------------------------------------------


@dataclass
class ContractionSpec:
    T: StableMap
    rate: L0Scalar
    tol: L0Scalar
    domain: StableSet | None = None

    def validate(self, dim, samples=STABILITY_SAMPLES, seed=0):
        r = self.rate.values
        if np.any(r < 0) or np.any(r >= 1):
            bad = Event(self.rate.algebra, (r < 0) | (r >= 1))
            raise RateNotContractive(f"rate must satisfy 0 <= r < 1; fails on atoms {bad.atoms().tolist()}")
        if not np.all(self.tol.values > 0):
            raise ValidationError("tolerance must be strictly positive", "tol")
        alg = self.rate.algebra
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            x, y = (self._sample(alg, dim, rng) for _ in range(2))
            tx, ty = self.T(x).points, self.T(y).points
            lhs = np.linalg.norm(tx - ty, axis=1)
            rhs = r * np.linalg.norm(x.points - y.points, axis=1)
            # evaluating T rounds its outputs; allow a few ulps of them
            slack = 8 * np.finfo(float).eps * (np.abs(tx).max(axis=1) + np.abs(ty).max(axis=1))
            if np.any(lhs > rhs * (1 + 1e-12) + slack):
                raise ContractionViolated("sampled pair violates d(Tx, Ty) <= r d(x, y)")

    def _sample(self, alg, dim, rng):
        if self.domain is None:
            return L0Vector(alg, rng.normal(size=(alg.atom_count, dim)) * 10)
        pts = [rep.points[rng.integers(len(rep.points))] for rep in self.domain.per_atom]
        return L0Vector(alg, np.stack(pts))


@dataclass
class FixpointResult:
    z: L0Vector
    iters: StepNatural
    residual: L0Scalar
    trajectory: list | None = None  # x_0, x_1, ... as (atoms, d) arrays

    def iterate(self, n, atom):
        """``T^n(x1)`` on ``atom`` (valid for ``n <= iters[atom]``)."""
        return self.trajectory[n][atom]


def banach_fixpoint(spec, x1, max_iter=100_000, record=False, check=True):
    """Iterate ``x_{n+1} = T(x_n)`` atom by atom until
    ``d(x_n, T x_n) <= tol (1 - r)``, which bounds ``d(x_n, z)`` by ``tol``.

    Atoms stop independently; ``iters`` counts evaluations of ``T`` per atom
    and the returned point on an atom is ``T^iters(x1)``.
    """
    alg = x1.algebra
    if check:
        spec.validate(x1.dim)
    else:
        r = spec.rate.values
        if np.any(r < 0) or np.any(r >= 1):
            raise RateNotContractive("rate must satisfy 0 <= r < 1")
    threshold = spec.tol.values * (1.0 - spec.rate.values)
    x = x1.points.copy()
    active = np.ones(alg.atom_count, dtype=bool)
    iters = np.zeros(alg.atom_count, dtype=np.int64)
    residual = np.zeros(alg.atom_count)
    trajectory = [x.copy()] if record else None
    for _ in range(max_iter):
        tx = spec.T(L0Vector(alg, x)).points
        iters[active] += 1
        res = np.linalg.norm(x - tx, axis=1)
        residual[active] = res[active]
        done = active & (res <= threshold)
        # a finished atom keeps T(x_n), which is within r * tol of z
        x = np.where(active[:, None], tx, x)
        active &= ~done
        if record:
            trajectory.append(x.copy())
        if not active.any():
            break
    else:
        raise MaxIterations(
            f"no convergence after {max_iter} iterations on atoms {np.flatnonzero(active).tolist()}",
            {"x": x, "iters": iters, "residual": residual},
        )
    return FixpointResult(L0Vector(alg, x), StepNatural(alg, iters), L0Scalar(alg, residual), trajectory)


# ---------------------------------------------------------------------------
# strong separation
# ---------------------------------------------------------------------------


@dataclass
class SeparationCertificate:
    """``f = <., y>`` with ``f(x) + r < f(z)`` for x in S1, z in S2."""

    y: L0Vector
    r: L0Scalar
    gap: L0Scalar

    @property
    def functional(self):
        from .modules import ModuleMap

        return ModuleMap.functional(self.y)


def _vertices(rep):
    return np.ascontiguousarray(rep.points, dtype=float)


def strong_separation(S1, S2, touch_tol=1e-12):
    """Unit-norm separating functional and gap between two stable polytopes.

    Per atom the closest pair of points of the two hulls gives the
    direction; ``r`` is half the support-function gap measured on vertices.
    Raises ``NotDisjoint`` with the event where the hulls meet.
    """
    S1.algebra.check_same(S2)
    if S1.dim != S2.dim:
        raise ValidationError("sets of different dimension")
    if S1.dim > MAX_DIM:
        raise DimensionUnsupported(f"separation is limited to d <= {MAX_DIM}")
    n = S1.algebra.atom_count
    y = np.zeros((n, S1.dim))
    gap = np.zeros(n)
    meet = np.zeros(n, dtype=bool)
    for atom in range(n):
        a, b = _vertices(S1.per_atom[atom]), _vertices(S2.per_atom[atom])
        dist, pa, pb, touching = kernels.polytope_distance(a, b)
        scale = max(1.0, float(np.abs(a).max()), float(np.abs(b).max()))
        if touching or dist <= touch_tol * scale:
            meet[atom] = True
            continue
        u = (pb - pa) / np.linalg.norm(pb - pa)
        g = float((b @ u).min() - (a @ u).max())
        if not g > 0:
            meet[atom] = True
            continue
        y[atom], gap[atom] = u, g
    if meet.any():
        raise NotDisjoint(Event(S1.algebra, meet))
    return SeparationCertificate(L0Vector(S1.algebra, y), L0Scalar(S1.algebra, 0.5 * gap), L0Scalar(S1.algebra, gap))


def audit_separation(cert, S1, S2):
    """Atoms where ``min over vertex pairs of f(z) - f(x) > r`` fails."""
    bad = []
    for atom in range(S1.algebra.atom_count):
        u = cert.y.points[atom]
        fa = S1.per_atom[atom].points @ u
        fb = S2.per_atom[atom].points @ u
        if not (fb[None, :] - fa[:, None]).min() > cert.r.values[atom]:
            bad.append(atom)
    return bad


# ---------------------------------------------------------------------------
# conjugation on grids
# ---------------------------------------------------------------------------


def _grid(points):
    points = np.asarray(points, dtype=float)
    return np.ascontiguousarray(points[:, None] if points.ndim == 1 else points)


def fenchel_conjugate(grid, table, dual_grid):
    """Discrete conjugate ``f*(y) = max_x <x, y> - f(x)`` per atom.

    ``table`` has shape ``(atoms, len(grid))``; the result has shape
    ``(atoms, len(dual_grid))``.  Every difference is rounded upward, which
    keeps ``f** <= f`` exact in floating point.
    """
    x, y = _grid(grid), _grid(dual_grid)
    table = np.ascontiguousarray(np.atleast_2d(np.asarray(table, dtype=float)))
    if table.shape[1] != len(x):
        raise GridMismatch(f"table has {table.shape[1]} columns for a grid of {len(x)} points")
    if x.shape[1] != y.shape[1]:
        raise GridMismatch("primal and dual grids differ in dimension")
    return kernels.conjugate_table(x, table, y)


def biconjugate(grid, table, dual_grid):
    """``f**`` on the primal grid via the dual grid."""
    return fenchel_conjugate(dual_grid, fenchel_conjugate(grid, table, dual_grid), grid)


# ---------------------------------------------------------------------------
# polars
# ---------------------------------------------------------------------------


@dataclass
class PolarResult:
    polar: StableSet | None  # None when some atom's polar is unbounded
    halfspaces: list  # per atom (A, b): polar = {y : A y <= b}
    bounded: np.ndarray
    bipolar: StableSet


def _lexsorted(points):
    points = np.asarray(points)
    return points[np.lexsort(points.T[::-1])] if len(points) else points


def polar_and_bipolar(S):
    """Polar ``{y : <x, y> <= 1 for x in S}`` and bipolar, atom by atom."""
    if S.dim > MAX_DIM:
        raise DimensionUnsupported(f"polars are limited to d <= {MAX_DIM}")
    polar_reps, halfspaces, bounded, bipolar_reps = [], [], [], []
    for rep in S.per_atom:
        v = np.asarray(rep.points, dtype=float)
        frame, poly, rays = polar_polyhedron(v)
        is_bounded = frame.shape[0] == S.dim and len(rays) == 0
        bounded.append(is_bounded)
        halfspaces.append((v.copy(), np.ones(len(v))))
        polar_reps.append(Polytope(_lexsorted(poly @ frame)) if is_bounded else None)
        bipolar_reps.append(Polytope(_lexsorted(bipolar_vertices(v))))
    bounded = np.array(bounded)
    polar = StableSet(S.algebra, S.dim, polar_reps) if bounded.all() else None
    return PolarResult(polar, halfspaces, bounded, StableSet(S.algebra, S.dim, bipolar_reps))
