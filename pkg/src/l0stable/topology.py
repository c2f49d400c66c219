"""L0-seminorms and the three module topologies as membership predicates.

Seminorms evaluate on batches: ``p.batch(points)`` maps an array of shape
``(batch, atoms, d)`` to ``(batch, atoms)``.  All neighbourhood predicates
use the strict inequalities of their definitions with no tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArityError, TranslatorInvalid, ValidationError
from .measure import Partition, common_coarsening
from .scalars import L0Scalar
from .sets import L0Vector, StableFiniteFamily, StableSet, selectors

AUDIT_SAMPLES = 1000


class Seminorm:
    kind = None
    local = True  # value on an atom depends only on the vector at that atom

    def __init__(self, algebra):
        self.algebra = algebra

    def batch(self, points):
        raise NotImplementedError

    def __call__(self, x):
        self.algebra.check_same(x)
        return L0Scalar(self.algebra, self.batch(x.points[None])[0])

    def homogeneity_partition(self):
        """Scalars constant on these blocks satisfy ``p(r x) = |r| p(x)``."""
        return self.algebra.atoms_partition()


class WeightedNorm(Seminorm):
    """``|| w * x ||_q`` per atom, q in {1, 2, inf}."""

    kind = "weighted_norm"

    def __init__(self, algebra, weights, exponent=2):
        super().__init__(algebra)
        weights = np.asarray(weights, dtype=float)
        if weights.ndim == 1:
            weights = np.tile(weights, (algebra.atom_count, 1))
        if weights.shape[0] != algebra.atom_count or np.any(weights < 0):
            raise ValidationError("weights must be non-negative, one row per atom")
        if exponent in ("inf", float("inf")):
            exponent = np.inf
        if exponent not in (1, 2, np.inf):
            raise ValidationError("exponent must be 1, 2 or inf")
        self.weights = weights
        self.exponent = exponent

    def batch(self, points):
        return np.linalg.norm(points * self.weights, ord=self.exponent, axis=-1)


class Pairing(Seminorm):
    """``|<x, y>|`` per atom."""

    kind = "pairing"

    def __init__(self, y):
        super().__init__(y.algebra)
        self.y = y

    def batch(self, points):
        return np.abs(np.einsum("bad,ad->ba", points, self.y.points))


class ConditionalLp(Seminorm):
    """``E[|x|^p | sub]^(1/p)`` with ``|x|`` the Euclidean norm on each atom.

    Homogeneous only for scalars measurable with respect to ``sub``.
    """

    kind = "conditional_lp"

    def __init__(self, algebra, sub, p=2.0):
        super().__init__(algebra)
        algebra.check_same(sub)
        if not 1 <= p < np.inf:
            raise ValidationError("exponent p must lie in [1, inf)")
        self.sub = sub
        self.p = float(p)
        self.local = sub.num_blocks == algebra.atom_count
        self._onehot = np.eye(sub.num_blocks)[sub.labels] * algebra.probs[:, None]
        self._mass = sub.block_probs()

    def batch(self, points):
        mag = np.linalg.norm(points, axis=-1) ** self.p
        means = (mag @ self._onehot) / self._mass
        return (means ** (1.0 / self.p))[:, self.sub.labels]

    def homogeneity_partition(self):
        return self.sub


class SupHull(Seminorm):
    """Pointwise maximum of finitely many seminorms."""

    kind = "sup"

    def __init__(self, members):
        members = list(members)
        if not members:
            raise ArityError("sup of an empty family")
        super().__init__(members[0].algebra)
        self.members = members
        self.local = all(m.local for m in members)

    def batch(self, points):
        return np.max([m.batch(points) for m in self.members], axis=0)

    def homogeneity_partition(self):
        return common_coarsening([m.homogeneity_partition() for m in self.members])


class Concat(Seminorm):
    """``sum_k 1_{A_k} p_k``."""

    kind = "concat"

    def __init__(self, partition, members):
        members = list(members)
        if len(members) != partition.num_blocks:
            raise ArityError(f"{partition.num_blocks} blocks but {len(members)} seminorms")
        super().__init__(partition.algebra)
        self.partition = partition
        self.members = members
        self.local = all(m.local for m in members)

    def batch(self, points):
        vals = np.stack([m.batch(points) for m in self.members])
        return vals[self.partition.labels, :, np.arange(self.algebra.atom_count)].T

    def homogeneity_partition(self):
        return common_coarsening([m.homogeneity_partition() for m in self.members])


def sup_value(seminorms, points):
    """``sup_{p in N} p`` on a batch; ``points`` has shape (batch, atoms, d)."""
    return np.max([p.batch(points) for p in seminorms], axis=0)


def check_seminorm_axioms(p, dim, samples=AUDIT_SAMPLES, seed=0, rtol=1e-9):
    """Spot-check non-negativity, absolute homogeneity and subadditivity.

    Returns the number of violations (0 means the checks passed).
    """
    rng = np.random.default_rng(seed)
    alg = p.algebra
    n = alg.atom_count
    x = rng.normal(size=(samples, n, dim)) * rng.exponential(2.0, size=(samples, n, 1))
    y = rng.normal(size=(samples, n, dim)) * rng.exponential(2.0, size=(samples, n, 1))
    part = p.homogeneity_partition()
    r = rng.normal(size=(samples, part.num_blocks))[:, part.labels] * 3.0
    px, py, pxy = p.batch(x), p.batch(y), p.batch(x + y)
    prx = p.batch(x * r[:, :, None])
    bad = np.sum(px < 0)
    bad += np.sum(np.abs(prx - np.abs(r) * px) > rtol * np.maximum(1.0, np.abs(r) * px))
    bad += np.sum(pxy > (px + py) * (1 + 1e-12) + 1e-300)
    return int(bad)


@dataclass
class SeminormFamily:
    """Finite family of seminorms; stable hulls are built on demand."""

    members: list
    separated: bool = False

    @property
    def algebra(self):
        return self.members[0].algebra

    def concat(self, partition, indices):
        """Element of st(P): ``sum_k 1_{A_k} p_{indices[k]}``."""
        return Concat(partition, [self.members[i] for i in indices])

    def concat_sup(self, partition, index_sets):
        """Element of st-sup(P): ``sum_k 1_{A_k} sup_{p in S_k} p``."""
        return Concat(partition, [SupHull([self.members[i] for i in s]) for s in index_sets])

    def check_separated(self, dim, samples=AUDIT_SAMPLES, seed=0):
        """Sampled check that ``sup_p p(x) = 0`` forces ``x = 0`` atomwise."""
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(samples, self.algebra.atom_count, dim))
        # zero random coordinates so that coordinate subspaces get probed too
        x *= rng.random(size=x.shape) < 0.6
        vals = sup_value(self.members, x)
        return bool(np.all(vals[np.any(x != 0, axis=-1)] > 0))


# ---------------------------------------------------------------------------
# neighbourhoods
# ---------------------------------------------------------------------------


@dataclass
class EpsLambda:
    """``{y : P(sup_N p(x - y) < eps) > 1 - lam}``."""

    center: L0Vector
    seminorms: list
    eps: float
    lam: float

    def __post_init__(self):
        if not self.eps > 0 or not 0 < self.lam < 1:
            raise ValidationError("need eps > 0 and 0 < lam < 1")

    def contains_batch(self, points):
        vals = sup_value(self.seminorms, self.center.points[None] - points)
        mass = (vals < self.eps) @ self.center.algebra.probs
        return mass > 1.0 - self.lam


@dataclass
class L0Ball:
    """``{y : sup_N p(x - y) < r}`` with ``r`` strictly positive."""

    center: L0Vector
    seminorms: list
    r: L0Scalar

    def __post_init__(self):
        if not np.all(self.r.values > 0):
            raise ValidationError("ball radius must be strictly positive")

    def contains_batch(self, points):
        vals = sup_value(self.seminorms, self.center.points[None] - points)
        return np.all(vals < self.r.values, axis=1)


@dataclass
class StableBall:
    """``{y : sup_{p in F} p(x - y) < r}`` for a stable finite family ``F``."""

    center: L0Vector
    family: StableFiniteFamily
    r: L0Scalar

    def __post_init__(self):
        if not np.all(self.r.values > 0):
            raise ValidationError("ball radius must be strictly positive")
        if np.any(self.family.counts < 1):
            raise ValidationError("stable ball needs a non-empty family on every atom")

    def contains_batch(self, points):
        diff = self.center.points[None] - points
        n = self.center.algebra.atom_count
        vals = np.full((len(points), n), -np.inf)
        for block, entries in zip(self.family.blocks, self.family.entries):
            if not block.mask.any():
                continue
            v = sup_value(entries, diff)
            vals[:, block.mask] = v[:, block.mask]
        return np.all(vals < self.r.values, axis=1)


def contains(U, y):
    """Membership of ``y`` in the neighbourhood ``U``."""
    return bool(U.contains_batch(y.points[None])[0])


def product_contains(neighborhoods, ys):
    """Membership in a finite product of neighbourhoods (stable product topology)."""
    if len(neighborhoods) != len(ys):
        raise ArityError("one point per factor required")
    return all(contains(U, y) for U, y in zip(neighborhoods, ys))


def chain_neighborhoods(center, N, extras, r, lam):
    """Nested triple StableBall ⊆ L0Ball ⊆ EpsLambda around ``center``.

    ``extras`` is ``(partition, lists)``: the stable family adds
    ``lists[k]`` to ``N`` on block k.  The eps,lambda set uses
    ``eps = max r`` so that every point of the L0 ball passes on all atoms.
    """
    partition, lists = extras
    family = StableFiniteFamily.from_partition(partition, [list(N) + list(extra) for extra in lists])
    return (
        StableBall(center, family, r),
        L0Ball(center, list(N), r),
        EpsLambda(center, list(N), float(r.values.max()), lam),
    )


# ---------------------------------------------------------------------------
# witnesses comparing the three topologies
# ---------------------------------------------------------------------------


@dataclass
class Witness:
    seminorms: list
    eps: float
    lam: float
    m: int


def _tail_cut(block_probs, lam):
    """Smallest m with P(union of blocks after m) < lam / 2."""
    tails = np.concatenate([np.cumsum(block_probs[::-1])[::-1][1:], [0.0]])
    for m, tail in enumerate(tails, start=1):
        if tail < lam / 2:
            return m
    return len(block_probs)  # pragma: no cover - tail of the last block is 0


def epslambda_witness(q, eps, lam):
    """Finite ``N``, ``eps'``, ``lam'`` with U(0, N, eps', lam') ⊆ U(0, {q}, eps, lam).

    ``q`` is ``Concat`` of ``SupHull`` pieces (a bare seminorm counts as a
    one-element sup).
    """
    if not 0 < lam < 1 or not eps > 0:
        raise ValidationError("need eps > 0 and 0 < lam < 1")
    if isinstance(q, Concat):
        partition, pieces = q.partition, q.members
    else:
        partition, pieces = q.algebra.trivial_partition(), [q]
    m = _tail_cut(partition.block_probs(), lam)
    N = []
    for piece in pieces[:m]:
        for p in piece.members if isinstance(piece, SupHull) else [piece]:
            if not any(p is other for other in N):
                N.append(p)
    return Witness(N, eps, lam / 2, m)


def audit_points(center, dim, samples, rng, spread=(-2.0, 1.0)):
    """Sample points around ``center`` at log-uniform per-atom distances."""
    n = center.algebra.atom_count
    direction = rng.normal(size=(samples, n, dim))
    scale = 10.0 ** rng.uniform(*spread, size=(samples, n, 1))
    return center.points[None] + direction * scale


def audit_inclusion(inner, outer, points):
    """Number of sampled points in ``inner`` but not in ``outer``."""
    a = inner.contains_batch(points)
    b = outer.contains_batch(points)
    return int(np.sum(a & ~b))


def topology_refinement_witness(N1, eps, lam, translator, dim, samples=AUDIT_SAMPLES, seed=0):
    """``(N2, eps2, lam2)`` with the N2-eps2,lam2 set inside the N1-eps,lam set.

    ``translator(N1, eps)`` returns ``(N2, s)`` such that
    ``sup_{N2} p < s`` implies ``sup_{N1} p < eps`` on each atom.  It is
    audited on ``samples`` points before use.
    """
    if not 0 < lam < 1 or not eps > 0:
        raise ValidationError("need eps > 0 and 0 < lam < 1")
    N2, s = translator(list(N1), eps)
    if not np.all(s.values > 0):
        raise TranslatorInvalid("translator radius is not strictly positive")
    alg = s.algebra
    rng = np.random.default_rng(seed)
    pts = audit_points(L0Vector.zeros(alg, dim), dim, samples, rng, spread=(-3.0, 2.0))
    inner = sup_value(N2, pts) < s.values
    outer = sup_value(N1, pts) < eps
    if np.any(inner & ~outer):
        raise TranslatorInvalid("sampled counterexample to the translator's ball inclusion")
    # blocks of the canonical partition of s, largest value first
    levels, labels = np.unique(s.values, return_inverse=True)
    order = np.argsort(-levels)
    block_probs = np.bincount(labels.ravel(), weights=alg.probs, minlength=levels.size)[order]
    m = _tail_cut(block_probs, lam)
    eps2 = float(levels[order][:m].min())
    return Witness(list(N2), eps2, lam / 2, m)


def closure(K, family=None, audit=None):
    """Topological closure of a stable set given by finite data.

    Finite point sets and polytopes are closed, so ``K`` comes back
    unchanged.  With ``audit`` (a list of ``L0Vector``) every point outside
    ``K`` is shown to be outside the closure in all three topologies; the
    return value is then ``(K, failures)``.
    """
    if audit is None:
        return K
    if family is None or not K.is_points:
        raise ValidationError("closure audits need a Points set and a seminorm family")
    if not all(p.local for p in family.members):
        raise ValidationError("closure audits need atomwise seminorms")
    members = family.members
    sels = np.stack([x.points for x in selectors(K)])
    failures = 0
    for y in audit:
        dist = np.zeros(K.algebra.atom_count)
        for atom, rep in enumerate(K.per_atom):
            diffs = np.broadcast_to(y.points, (len(rep.points),) + y.points.shape).copy()
            diffs[:, atom, :] = y.points[atom] - rep.points
            dist[atom] = sup_value(members, diffs)[:, atom].min()
        if not np.any(dist > 0):
            continue  # y is a selector of K
        atom = int(np.argmax(dist))
        r = np.ones_like(dist)
        r[atom] = dist[atom]
        radius = L0Scalar(K.algebra, r)
        nbhds = (
            L0Ball(y, members, radius),
            StableBall(y, StableFiniteFamily.constant(K.algebra, members), radius),
            EpsLambda(y, members, float(dist[atom]), 0.5 * float(K.algebra.probs[atom])),
        )
        for U in nbhds:
            failures += int(np.any(U.contains_batch(sels)))
    return K, failures
