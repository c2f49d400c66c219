"""Stable compactness on finite data: Heine-Borel checks, nets, products,
the cluster-point construction and equicontinuity of function tables."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    ArityError,
    ConstructionImpossible,
    DimensionOverflow,
    GridMismatch,
    RadiusNotStrictlyPositive,
    ValidationError,
)
from .measure import Event
from .scalars import L0Scalar, StepNatural
from .sets import L0Vector, Points, StableFiniteFamily, StableSet

MAX_PRODUCT_DIM = 12


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


class StableMetric:
    """L0-valued metric; ``batch(a, b)`` maps (batch, atoms, d) pairs to (batch, atoms)."""

    kind = None

    def __call__(self, x, y):
        return L0Scalar(x.algebra, self.batch(x.points[None], y.points[None])[0])

    def batch(self, a, b):
        raise NotImplementedError

    def atom_matrix(self, atom, pts):
        """Pairwise distances on one atom for a point array (n, d)."""
        raise NotImplementedError


class EuclideanL0(StableMetric):
    kind = "euclidean"

    def batch(self, a, b):
        return np.linalg.norm(a - b, axis=-1)

    def atom_matrix(self, atom, pts):
        return np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)


class SeminormInduced(StableMetric):
    """``d(x, y) = p(x - y)`` for an atomwise (and separated) seminorm."""

    kind = "seminorm"

    def __init__(self, seminorm):
        if not seminorm.local:
            raise ValidationError("metric needs an atomwise seminorm")
        self.seminorm = seminorm

    def batch(self, a, b):
        return self.seminorm.batch(a - b)

    def atom_matrix(self, atom, pts):
        n = self.seminorm.algebra.atom_count
        diff = np.zeros((len(pts) * len(pts), n, pts.shape[1]))
        diff[:, atom, :] = (pts[:, None, :] - pts[None, :, :]).reshape(-1, pts.shape[1])
        return self.seminorm.batch(diff)[:, atom].reshape(len(pts), len(pts))


class DInfinity(StableMetric):
    """``d(f, g) = max_{x in K} |f(x) - g(x)|`` for function tables on ``K``.

    A table is a list with one 1-d array per atom, aligned with K's points.
    """

    kind = "dinf"

    def __init__(self, K):
        if not K.is_points:
            raise ValidationError("d_inf needs a Points set")
        self.K = K

    def __call__(self, f, g):
        return L0Scalar(self.K.algebra, [float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) for a, b in zip(f, g)])

    def batch(self, a, b):
        """``a``, ``b``: arrays of shape (batch, atoms, |K|) (equal section sizes)."""
        return np.max(np.abs(a - b), axis=-1)


def check_metric_axioms(metric, triples):
    """Count violations of the metric axioms on sampled triples.

    ``triples`` is ``(x, y, z)`` with arrays shaped for ``metric.batch``.
    Identity and symmetry are checked exactly; the triangle inequality
    allows a few ulps of rounding.
    """
    x, y, z = triples
    dxy, dyx = metric.batch(x, y), metric.batch(y, x)
    dxz, dyz, dxx = metric.batch(x, z), metric.batch(y, z), metric.batch(x, x)
    same = np.all(x == y, axis=-1)
    bad = np.sum(dxx != 0)
    bad += np.sum((dxy == 0) != same)
    bad += np.sum(dxy != dyx)
    bad += np.sum(dxz > (dxy + dyz) * (1 + 4 * np.finfo(float).eps))
    return int(bad)


# ---------------------------------------------------------------------------
# compactness predicates
# ---------------------------------------------------------------------------


@dataclass
class CompactnessCertificate:
    compact: bool
    radius: L0Scalar | None = None
    bad_atom: int | None = None

    def __bool__(self):
        return self.compact


def is_stably_compact(K, family=None):
    """Stable compactness of finite data, with the bounding radius as certificate.

    Well-formed Points/Polytope data is always stable, closed and bounded;
    an empty or non-finite per-atom set (only possible with unchecked input)
    is reported with its atom index.
    """
    radius = []
    for atom, rep in enumerate(K.per_atom):
        pts = np.asarray(rep.points)
        if pts.size == 0 or len(pts) == 0 or not np.all(np.isfinite(pts)):
            return CompactnessCertificate(False, None, atom)
        radius.append(float(np.max(np.linalg.norm(pts, axis=1))))
    return CompactnessCertificate(True, L0Scalar(K.algebra, radius))


@dataclass
class EpsNet:
    radius: L0Scalar
    centers: StableFiniteFamily
    owners: list = field(default_factory=list)  # per atom: owning center of each point

    @property
    def count(self):
        return self.centers.length


def _family_from_atom_lists(alg, dim, per_atom):
    """Assemble per-atom point lists into a blockwise family of L0Vectors."""
    counts = np.array([len(p) for p in per_atom])
    blocks, entries = [], []
    for c in np.unique(counts):
        mask = counts == c
        block = Event(alg, mask)
        vecs = []
        for m in range(c):
            pts = np.zeros((alg.atom_count, dim))
            for atom in np.flatnonzero(mask):
                pts[atom] = per_atom[atom][m]
            vecs.append(L0Vector(alg, pts))
        blocks.append(block)
        entries.append(vecs)
    return StableFiniteFamily(alg, blocks, entries)


def stable_eps_net(K, metric, r):
    """Greedy per-atom cover of ``K`` by balls of radius ``r(atom)``."""
    if not K.is_points:
        raise ValidationError("nets are built on Points sets")
    if not np.all(r.values > 0):
        raise RadiusNotStrictlyPositive("net radius must be strictly positive")
    centers, owners = [], []
    for atom, rep in enumerate(K.per_atom):
        pts = np.ascontiguousarray(rep.points)
        if isinstance(metric, EuclideanL0):
            idx, own = kernels.greedy_cover(pts, float(r.values[atom]))
        else:
            idx, own = _greedy_cover_matrix(metric.atom_matrix(atom, pts), float(r.values[atom]))
        centers.append(pts[idx])
        owners.append(np.asarray(own))
    return EpsNet(r, _family_from_atom_lists(K.algebra, K.dim, centers), owners)


def _greedy_cover_matrix(dist, r):
    n = len(dist)
    owner = np.full(n, -1, dtype=np.int64)
    centers = []
    for c in range(n):
        if owner[c] >= 0:
            continue
        owner[(owner < 0) & (dist[c] <= r)] = len(centers)
        centers.append(c)
    return np.array(centers), owner


def audit_net(K, metric, net):
    """Exhaustive cover check: every point is within r of some center."""
    misses = 0
    for atom, rep in enumerate(K.per_atom):
        cs = np.array([v.points[atom] for v in net.centers.on_atom(atom)])
        pts = rep.points
        allpts = np.vstack([pts, cs])
        dist = metric.atom_matrix(atom, allpts)[: len(pts), len(pts):]
        misses += int(np.sum(dist.min(axis=1) > net.radius.values[atom]))
    return misses


def product_compactness(Ks, max_dim=MAX_PRODUCT_DIM):
    """Per-atom Cartesian product of Points sets (finite stable product)."""
    Ks = list(Ks)
    if not Ks:
        raise ArityError("empty product")
    alg = Ks[0].algebra
    for K in Ks[1:]:
        alg.check_same(K)
    dim = sum(K.dim for K in Ks)
    if dim > max_dim:
        raise DimensionOverflow(f"product dimension {dim} exceeds {max_dim}")
    per_atom = []
    for atom in range(alg.atom_count):
        sections = [np.asarray(K.per_atom[atom].points) for K in Ks]
        if any(s.size == 0 or len(s) == 0 for s in sections):
            per_atom.append(Points(np.zeros((0, dim))))
            continue
        rows = [np.concatenate(combo) for combo in itertools.product(*sections)]
        per_atom.append(Points(np.array(rows)))
    return StableSet(alg, dim, per_atom, check=False)


# ---------------------------------------------------------------------------
# cluster-point construction
# ---------------------------------------------------------------------------


@dataclass
class ClusterCertificate:
    r: L0Scalar
    B: list
    C: list

    def mass(self):
        return [c.prob() for c in self.C]


def _halving_subevent(alg, candidates, bound):
    """Largest prefix of ``candidates`` (lightest atoms first) with mass < bound."""
    probs = alg.probs[candidates]
    order = np.argsort(probs, kind="stable")
    cum = np.cumsum(probs[order])
    take = int(np.searchsorted(cum, bound, side="left"))
    if take == 0:
        return None
    return Event(alg, np.isin(np.arange(alg.atom_count), candidates[order[:take]]))


def cluster_lemma_construct(rs):
    """Strictly positive ``r`` with ``P(r_n >= r) > 0`` for every ``n``.

    Chain: ``B_1 = {r_1 > 0}``, then ``B_{n+1}`` inside ``{r_{n+1} > 0}``
    with ``0 < P(B_{n+1}) < P(B_n) / 2``; ``C_n = B_n - U_{k>n} B_k`` and
    ``r = sum_n 1_{C_n} r_n / 2 + 1_{no C_n}``.  Raises
    ``ConstructionImpossible`` (with the chain length reached) when the
    atoms run out before the list does.
    """
    rs = list(rs)
    if not rs:
        raise ArityError("need at least one scalar")
    alg = rs[0].algebra
    for x in rs:
        alg.check_same(x)
        if np.any(x.values < 0) or not np.any(x.values > 0):
            raise ValidationError("each r_n must be non-negative and non-zero")
    B = [Event(alg, rs[0].values > 0)]
    for n, x in enumerate(rs[1:], start=1):
        candidates = np.flatnonzero(x.values > 0)
        nxt = _halving_subevent(alg, candidates, 0.5 * B[-1].prob())
        if nxt is None:
            raise ConstructionImpossible(
                f"no sub-event of {{r_{n + 1} > 0}} has mass below half of P(B_{n})", prefix=n
            )
        B.append(nxt)
    C = []
    later = np.zeros(alg.atom_count, dtype=bool)
    for b in reversed(B):
        C.append(Event(alg, b.mask & ~later))
        later |= b.mask
    C.reverse()
    r = np.ones(alg.atom_count)
    for c, x in zip(C, rs):
        r[c.mask] = x.values[c.mask] / 2
    return ClusterCertificate(L0Scalar(alg, r), B, C)


# ---------------------------------------------------------------------------
# equicontinuity and d_inf nets for function tables
# ---------------------------------------------------------------------------


def equicontinuity_modulus(tables):
    """Per-atom largest jump between axis-adjacent grid cells over the family.

    ``tables`` has shape ``(functions, atoms, *grid)``.
    """
    tables = np.asarray(tables, dtype=float)
    if tables.ndim < 3:
        raise GridMismatch("tables need shape (functions, atoms, *grid)")
    jump = np.zeros(tables.shape[1])
    for axis in range(2, tables.ndim):
        if tables.shape[axis] > 1:
            d = np.abs(np.diff(tables, axis=axis))
            jump = np.maximum(jump, d.reshape(d.shape[0], d.shape[1], -1).max(axis=(0, 2)))
    return jump


def is_stably_equicontinuous(tables, r, grid_shape=None):
    """Every grid point has an axis-adjacent neighbourhood on which every
    function of the family moves by at most ``r`` (atomwise)."""
    if isinstance(tables, (list, tuple)):
        shapes = {np.shape(t) for t in tables}
        if len(shapes) != 1:
            raise GridMismatch("function tables live on different grids")
    tables = np.asarray(tables, dtype=float)
    if grid_shape is not None and tuple(tables.shape[2:]) != tuple(grid_shape):
        raise GridMismatch(f"tables have grid {tables.shape[2:]}, expected {tuple(grid_shape)}")
    rv = r.values if isinstance(r, L0Scalar) else np.broadcast_to(np.asarray(r, dtype=float), tables.shape[1:2])
    return bool(np.all(equicontinuity_modulus(tables) <= rv))


def transfer_net(tables, probe, r, s):
    """Total-boundedness transfer for function tables in ``d_inf``.

    ``probe`` selects grid indices; ``f -> f[probe]`` maps the family into
    a finite-dimensional space with the max metric.  If closeness within
    ``s`` there implies ``d_inf <= r`` (checked on every pair), a greedy
    ``s``-net of the images pulls back to an ``r``-net of the family.
    Returns ``(implication_holds, per_atom_center_indices, misses)``.
    """
    tables = np.asarray(tables, dtype=float)
    nf, na = tables.shape[:2]
    flat = tables.reshape(nf, na, -1)
    image = flat[:, :, probe]
    full = np.max(np.abs(flat[:, None] - flat[None, :]), axis=-1)
    small = np.max(np.abs(image[:, None] - image[None, :]), axis=-1)
    implication = bool(np.all((small > s) | (full <= r)))
    centers, misses = [], 0
    for atom in range(na):
        idx, _ = _greedy_cover_matrix(small[:, :, atom], s)
        centers.append(idx)
        misses += int(np.sum(full[:, idx, atom].min(axis=1) > r))
    return implication, centers, misses


def constant_subsequence(K, index_fn, preperiod, period, length):
    """Constant stable subsequence of an eventually periodic stable sequence.

    ``index_fn(n)`` returns per-atom indices into K's sections for
    ``n = 1, 2, ...``; indices repeat with ``period`` after ``preperiod``.
    Returns ``(limit, steps)`` with ``steps`` a list of ``length`` strictly
    increasing ``StepNatural`` values along which the sequence equals
    ``limit`` on every atom.
    """
    alg = K.algebra
    start = preperiod + 1
    window = np.array([index_fn(n) for n in range(start, start + period)])  # period x atoms
    offsets = np.zeros(alg.atom_count, dtype=np.int64)
    limit = np.zeros((alg.atom_count, K.dim))
    for atom in range(alg.atom_count):
        # most frequent index in one period (ties: smallest), first occurrence
        values, counts = np.unique(window[:, atom], return_counts=True)
        chosen = values[np.argmax(counts)]
        offsets[atom] = int(np.flatnonzero(window[:, atom] == chosen)[0])
        limit[atom] = K.per_atom[atom].points[chosen]
    steps = [StepNatural(alg, start + offsets + k * period) for k in range(length)]
    return L0Vector(alg, limit), steps
