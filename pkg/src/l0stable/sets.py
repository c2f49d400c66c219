"""Stable subsets of (L0)^d as compact-valued maps on the atoms.

Over a finite algebra a stable set is exactly the product of its per-atom
sections, so a ``StableSet`` stores one compact set per atom and its
measurable selectors are the elements of the stable set.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ArityError, NotEnumerable, NotStable, ValidationError
from .measure import _frozen
from .scalars import L0Scalar, StepNatural


class L0Vector:
    """One point of R^d per atom (array of shape ``(atoms, d)``)."""

    __slots__ = ("algebra", "points")

    def __init__(self, algebra, points):
        points = np.asarray(points, dtype=float)
        if points.ndim == 1 and algebra.atom_count != 1:
            points = points[:, None]
        points = np.atleast_2d(points)
        if points.shape[0] != algebra.atom_count or points.shape[1] < 1:
            raise ValidationError(
                f"expected shape ({algebra.atom_count}, d), got {points.shape}"
            )
        if not np.all(np.isfinite(points)):
            raise ValidationError("vector coordinates must be finite")
        self.algebra = algebra
        self.points = _frozen(points)

    @classmethod
    def constant(cls, algebra, point):
        point = np.atleast_1d(np.asarray(point, dtype=float))
        return cls(algebra, np.tile(point, (algebra.atom_count, 1)))

    @classmethod
    def zeros(cls, algebra, dim):
        return cls(algebra, np.zeros((algebra.atom_count, dim)))

    @property
    def dim(self):
        return self.points.shape[1]

    def _coerce(self, other):
        if isinstance(other, L0Vector):
            self.algebra.check_same(other)
            return other.points
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else L0Vector(self.algebra, self.points + v)

    def __sub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else L0Vector(self.algebra, self.points - v)

    def __neg__(self):
        return L0Vector(self.algebra, -self.points)

    def scale(self, r):
        """``r * x`` for an ``L0Scalar`` or a real."""
        if isinstance(r, L0Scalar):
            self.algebra.check_same(r)
            return L0Vector(self.algebra, self.points * r.values[:, None])
        return L0Vector(self.algebra, self.points * float(r))

    __mul__ = scale
    __rmul__ = scale

    def dot(self, other):
        self.algebra.check_same(other)
        return L0Scalar(self.algebra, np.einsum("ij,ij->i", self.points, other.points))

    def norm(self):
        return L0Scalar(self.algebra, np.linalg.norm(self.points, axis=1))

    def restrict(self, event):
        return L0Vector(self.algebra, np.where(event.mask[:, None], self.points, 0.0))

    def key(self):
        return tuple(map(tuple, self.points.tolist()))

    def __eq__(self, other):
        return (
            isinstance(other, L0Vector)
            and other.algebra == self.algebra
            and np.array_equal(self.points, other.points)
        )

    def __hash__(self):
        return hash(self.points.tobytes())

    def __repr__(self):
        return f"L0Vector({self.points.tolist()})"


def concat_vectors(parts, xs):
    xs = list(xs)
    if len(xs) != parts.num_blocks:
        raise ArityError(f"{parts.num_blocks} blocks but {len(xs)} vectors")
    for x in xs:
        parts.algebra.check_same(x)
    stacked = np.stack([x.points for x in xs])
    return L0Vector(parts.algebra, stacked[parts.labels, np.arange(parts.algebra.atom_count)])


# ---------------------------------------------------------------------------
# per-atom compact sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Points:
    """Finite point cloud."""

    points: np.ndarray

    kind = "points"

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen(np.atleast_2d(np.asarray(self.points, dtype=float))))

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        return type(other) is type(self) and np.array_equal(self.points, other.points)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Polytope(Points):
    """Convex hull of a vertex list (no duplicate vertices)."""

    kind = "polytope"

    def __post_init__(self):
        super().__post_init__()
        if len(self.points) and len({tuple(p) for p in self.points.tolist()}) != len(self.points):
            raise ValidationError("polytope vertex list contains duplicates")


class StableSet:
    """Compact-valued map ``atom -> K_atom``; its selectors form the stable set.

    ``check=False`` skips validation so that malformed data read from files
    can still be inspected by :func:`is_stably_compact`.
    """

    def __init__(self, algebra, dim, per_atom, check=True):
        per_atom = tuple(per_atom)
        self.algebra = algebra
        self.dim = int(dim)
        self.per_atom = per_atom
        if check:
            self.validate()

    def validate(self):
        if len(self.per_atom) != self.algebra.atom_count:
            raise ValidationError(
                f"{len(self.per_atom)} per-atom sets for {self.algebra.atom_count} atoms", "per_atom"
            )
        for i, rep in enumerate(self.per_atom):
            pts = rep.points
            if pts.size == 0 or len(pts) == 0:
                raise ValidationError("per-atom sets must be non-empty", f"per_atom[{i}]")
            if pts.shape[1] != self.dim:
                raise ValidationError(f"expected dimension {self.dim}", f"per_atom[{i}]")
            if not np.all(np.isfinite(pts)):
                raise ValidationError("coordinates must be finite", f"per_atom[{i}]")

    @classmethod
    def from_points(cls, algebra, per_atom_points):
        per_atom_points = list(per_atom_points)
        dim = np.atleast_2d(np.asarray(per_atom_points[0], dtype=float)).shape[1]
        return cls(algebra, dim, [Points(p) for p in per_atom_points])

    @classmethod
    def from_polytopes(cls, algebra, per_atom_vertices):
        per_atom_vertices = list(per_atom_vertices)
        dim = np.atleast_2d(np.asarray(per_atom_vertices[0], dtype=float)).shape[1]
        return cls(algebra, dim, [Polytope(v) for v in per_atom_vertices])

    @classmethod
    def singleton(cls, x):
        return cls(x.algebra, x.dim, [Points(p[None, :]) for p in x.points])

    @property
    def is_points(self):
        return all(rep.kind == "points" for rep in self.per_atom)

    @property
    def is_polytope(self):
        return all(rep.kind == "polytope" for rep in self.per_atom)

    def sizes(self):
        return [len(rep.points) for rep in self.per_atom]

    def to_polytope(self):
        """Per-atom convex hull (``d <= 3``)."""
        from .geometry import convex_hull_vertices

        return StableSet(
            self.algebra,
            self.dim,
            [rep if rep.kind == "polytope" else Polytope(convex_hull_vertices(rep.points)) for rep in self.per_atom],
        )

    def __eq__(self, other):
        return (
            isinstance(other, StableSet)
            and other.algebra == self.algebra
            and other.dim == self.dim
            and all(a == b for a, b in zip(self.per_atom, other.per_atom))
        )

    __hash__ = None

    def same_sections(self, other):
        """Per-atom equality of point sets, ignoring order."""
        if self.algebra != other.algebra or self.dim != other.dim:
            return False
        return all(
            {tuple(p) for p in a.points.tolist()} == {tuple(p) for p in b.points.tolist()}
            for a, b in zip(self.per_atom, other.per_atom)
        )

    def __repr__(self):
        return f"StableSet(dim={self.dim}, sizes={self.sizes()})"


class StableFiniteFamily:
    """Family indexed by ``{1 <= m <= n}`` for a per-atom count ``n``.

    Stored blockwise: ``blocks[k]`` is an event and ``entries[k]`` the
    classical list used on it.  Counts may be zero (empty basis).
    """

    def __init__(self, algebra, blocks, entries):
        blocks = tuple(blocks)
        entries = tuple(tuple(e) for e in entries)
        if len(blocks) != len(entries):
            raise ArityError("one entry list per block required")
        labels = np.full(algebra.atom_count, -1, dtype=np.int64)
        for k, b in enumerate(blocks):
            algebra.check_same(b)
            if np.any(labels[b.mask] >= 0):
                raise ValidationError("family blocks overlap")
            labels[b.mask] = k
        if np.any(labels < 0):
            raise ValidationError("family blocks must cover every atom")
        self.algebra = algebra
        self.blocks = blocks
        self.entries = entries
        self._labels = labels

    @classmethod
    def constant(cls, algebra, items):
        return cls(algebra, [algebra.full()], [list(items)])

    @classmethod
    def from_partition(cls, partition, lists):
        return cls(partition.algebra, partition.blocks, lists)

    @property
    def counts(self):
        return np.array([len(self.entries[k]) for k in self._labels], dtype=np.int64)

    @property
    def length(self):
        return StepNatural(self.algebra, self.counts)

    def on_atom(self, atom):
        return self.entries[self._labels[atom]]

    def block_index(self, atom):
        return int(self._labels[atom])

    def __repr__(self):
        return f"StableFiniteFamily(counts={self.counts.tolist()})"


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def selectors(K):
    """Enumerate all selectors of a Points-valued stable set."""
    if not K.is_points:
        raise NotEnumerable("selector enumeration needs Points reps on every atom")
    sections = [rep.points for rep in K.per_atom]
    for choice in itertools.product(*(range(len(s)) for s in sections)):
        yield L0Vector(K.algebra, np.stack([s[i] for s, i in zip(sections, choice)]))


def selector_count(K):
    return int(np.prod([len(rep.points) for rep in K.per_atom], dtype=object))


def _sections(S):
    S = list(S)
    if not S:
        raise ArityError("need a non-empty list of vectors")
    alg = S[0].algebra
    for x in S[1:]:
        alg.check_same(x)
    sections = []
    for atom in range(alg.atom_count):
        seen = {}
        for x in S:
            seen.setdefault(tuple(x.points[atom].tolist()), None)
        sections.append(list(seen))
    return alg, S, sections


def is_stable(S):
    """Closed under concatenation, i.e. equal to the product of its sections."""
    alg, S, sections = _sections(S)
    distinct = len({x.key() for x in S})
    return distinct == int(np.prod([len(s) for s in sections], dtype=object))


def stable_hull(S):
    """Smallest stable set containing ``S`` (per-atom sections, first-seen order)."""
    alg, S, sections = _sections(S)
    return StableSet(alg, S[0].dim, [Points(np.array(s)) for s in sections])


def extract_setvalued_map(S):
    """The compact-valued map whose selectors are exactly ``S``."""
    if not is_stable(S):
        raise NotStable("the family is not closed under concatenation")
    return stable_hull(S)


def concat_sets(parts, Ks):
    Ks = list(Ks)
    if len(Ks) != parts.num_blocks:
        raise ArityError(f"{parts.num_blocks} blocks but {len(Ks)} sets")
    dim = Ks[0].dim
    for K in Ks:
        parts.algebra.check_same(K)
        if K.dim != dim:
            raise ArityError("sets of different dimension")
    return StableSet(parts.algebra, dim, [Ks[k].per_atom[i] for i, k in enumerate(parts.labels)])


def is_closed_bounded(K):
    """``(True, radius)`` for well-formed finite data, ``(False, None)`` on NaN/inf.

    ``radius`` is the per-atom maximal Euclidean norm over ``K``.
    """
    radius = []
    for rep in K.per_atom:
        pts = rep.points
        if len(pts) == 0 or not np.all(np.isfinite(pts)):
            return False, None
        radius.append(float(np.max(np.linalg.norm(pts, axis=1))))
    return True, L0Scalar(K.algebra, radius)
