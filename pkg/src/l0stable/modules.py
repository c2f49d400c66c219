"""Stable linear algebra over L0 at finite rank.

Bases are found atom by atom with greedy elimination; atoms that pick the
same pivot generators form one block of the stable basis, and the rank on
that block is its stable dimension.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import ArityError, DominationViolated, NotInSpan, NotSublinear, ValidationError
from .measure import Event, Partition
from .scalars import L0Scalar
from .sets import L0Vector, StableFiniteFamily

RANK_TOL = 1e-9
SPAN_TOL = 1e-9


class ModuleMap:
    """L0-linear map (L0)^d_in -> (L0)^d_out given by one matrix per atom."""

    def __init__(self, algebra, matrices):
        matrices = np.array(matrices, dtype=float)
        if matrices.ndim != 3 or matrices.shape[0] != algebra.atom_count:
            raise ValidationError("expected per-atom matrices of shape (atoms, d_out, d_in)")
        if not np.all(np.isfinite(matrices)):
            raise ValidationError("module map entries must be finite")
        self.algebra = algebra
        self.matrices = matrices
        self.matrices.flags.writeable = False

    @classmethod
    def functional(cls, y):
        """``x -> <x, y>`` for ``y`` in (L0)^d."""
        return cls(y.algebra, y.points[:, None, :])

    @property
    def shape(self):
        return self.matrices.shape[1:]

    def __call__(self, x):
        self.algebra.check_same(x)
        out = np.einsum("aij,aj->ai", self.matrices, x.points)
        if self.shape[0] == 1:
            return L0Scalar(self.algebra, out[:, 0])
        return L0Vector(self.algebra, out)

    def tolist(self):
        return self.matrices.tolist()


@dataclass
class StableBasis:
    """Blockwise basis; ``vectors.entries[k]`` are the basis vectors on block k."""

    profile: Partition
    ranks: list
    pivots: list
    vectors: StableFiniteFamily
    dim: int

    @property
    def dimension(self):
        """Stable dimension ``sum_k 1_{A_k} n_k`` (zero allowed)."""
        return L0Scalar(self.profile.algebra, np.asarray(self.ranks, dtype=float)[self.profile.labels])

    def matrix(self, atom):
        """Basis vectors on ``atom`` as columns, shape ``(d, n_k)``."""
        vecs = self.vectors.on_atom(atom)
        if not vecs:
            return np.zeros((self.dim, 0))
        return np.stack([v.points[atom] for v in vecs], axis=1)


def _pivot_columns(g):
    """Greedy elimination with partial pivoting in generator order."""
    d, m = g.shape
    scale = float(np.abs(g).max()) if g.size else 0.0
    if scale == 0.0:
        return ()
    work = g.astype(float).copy()
    used_rows = []
    pivots = []
    for j in range(m):
        col = work[:, j]
        free = [i for i in range(d) if i not in used_rows]
        if not free:
            break
        i = max(free, key=lambda r: abs(col[r]))
        if abs(col[i]) <= RANK_TOL * scale:
            continue
        pivots.append(j)
        used_rows.append(i)
        # eliminate row i from later columns
        factors = work[i, j + 1:] / col[i]
        work[:, j + 1:] -= np.outer(col, factors)
    return tuple(pivots)


def extract_stable_basis(generators):
    """Stable basis of the stable span of ``generators``."""
    generators = list(generators)
    if not generators:
        raise ArityError("need at least one generator")
    alg = generators[0].algebra
    dim = generators[0].dim
    for g in generators[1:]:
        alg.check_same(g)
        if g.dim != dim:
            raise ArityError("generators of different dimension")
    stacked = np.stack([g.points for g in generators], axis=2)  # atoms x d x m
    pivot_sets = [_pivot_columns(stacked[a]) for a in range(alg.atom_count)]
    keys = {}
    labels = np.array([keys.setdefault(p, len(keys)) for p in pivot_sets])
    profile = Partition.from_labels(alg, labels)
    pivots = [pivot_sets[b.atoms()[0]] for b in profile.blocks]
    entries = [[generators[j] for j in piv] for piv in pivots]
    family = StableFiniteFamily.from_partition(profile, entries)
    return StableBasis(profile, [len(p) for p in pivots], pivots, family, dim)


def stable_lincomb(coeffs, vecs):
    """``sum_{1<=m<=n} r_m x_m`` evaluated block by block."""
    if not np.array_equal(coeffs.counts, vecs.counts):
        raise ArityError("coefficient and vector families have different lengths")
    alg = vecs.algebra
    dim = None
    for entries in vecs.entries:
        if entries:
            dim = entries[0].dim
            break
    dim = dim or 1
    out = np.zeros((alg.atom_count, dim))
    for atom in range(alg.atom_count):
        for r, x in zip(coeffs.on_atom(atom), vecs.on_atom(atom)):
            out[atom] += r.values[atom] * x.points[atom]
    return L0Vector(alg, out)


def coordinates(basis, x):
    """Coefficient family of ``x`` in ``basis``; raises ``NotInSpan``."""
    alg = basis.profile.algebra
    alg.check_same(x)
    outside = np.zeros(alg.atom_count, dtype=bool)
    coef = np.zeros((alg.atom_count, max(basis.ranks) if basis.ranks else 0))
    for atom in range(alg.atom_count):
        v = basis.matrix(atom)
        target = x.points[atom]
        if v.shape[1] == 0:
            sol = np.zeros(0)
        else:
            sol, *_ = np.linalg.lstsq(v, target, rcond=None)
        resid = target - v @ sol
        scale = max(1.0, float(np.abs(target).max()), float(np.abs(v).max()) if v.size else 0.0)
        if np.abs(resid).max() > SPAN_TOL * scale:
            outside[atom] = True
        coef[atom, : sol.size] = sol
    if outside.any():
        raise NotInSpan(Event(alg, outside))
    entries = []
    for k, block in enumerate(basis.profile.blocks):
        entries.append([L0Scalar(alg, np.where(block.mask, coef[:, m], 0.0)) for m in range(basis.ranks[k])])
    return StableFiniteFamily.from_partition(basis.profile, entries)


# ---------------------------------------------------------------------------
# gauges and Hahn-Banach
# ---------------------------------------------------------------------------


class Gauge:
    """Per-atom sublinear function ``p(atom, x) -> float``.

    Subclasses may override :meth:`extension_range` with an exact formula;
    the default solves the two one-sided problems numerically.
    """

    def __call__(self, atom, x):
        raise NotImplementedError

    def batch(self, atoms, xs):
        """``p(atoms[i], xs[i])`` for every row."""
        return np.array([self(int(a), x) for a, x in zip(atoms, xs)])

    def extension_range(self, atom, sub, values, v):
        """Interval of admissible values at ``v`` for an extension of the
        functional with ``<sub[:, i], .> -> values[i]`` dominated by p.

        lo = sup_u g(u) - p(u - v),  hi = inf_u p(u + v) - g(u),  u in span(sub).
        """
        k = sub.shape[1]

        def g(c):
            return float(c @ values)

        def upper(c):
            return self(atom, sub @ c + v) - g(c)

        def lower(c):
            return self(atom, sub @ c - v) - g(c)

        best_hi, best_lo = self(atom, v), -self(atom, -v)
        if k:
            for start in (np.zeros(k), np.ones(k), -np.ones(k)):
                res = minimize(upper, start, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
                best_hi = min(best_hi, float(res.fun))
                res = minimize(lower, start, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
                best_lo = max(best_lo, -float(res.fun))
        return best_lo, best_hi


class CallableGauge(Gauge):
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, atom, x):
        return float(self.fn(atom, np.asarray(x, dtype=float)))


class WeightedNormGauge(Gauge):
    """``p(x) = || w * x ||_q`` with per-atom positive weights, q in {1, 2, inf}.

    The dual ball is explicit, so the extension interval is computed exactly
    (closed form for q = 2, a linear program for q = 1 and q = inf).
    """

    def __init__(self, weights, exponent):
        self.weights = np.asarray(weights, dtype=float)
        if np.any(self.weights <= 0):
            raise ValidationError("weights must be strictly positive")
        if exponent not in (1, 2, np.inf, float("inf"), "inf"):
            raise ValidationError("exponent must be 1, 2 or inf")
        self.exponent = np.inf if exponent in ("inf", float("inf")) else exponent

    def __call__(self, atom, x):
        return float(np.linalg.norm(self.weights[atom] * np.asarray(x, dtype=float), ord=self.exponent))

    def batch(self, atoms, xs):
        return np.linalg.norm(self.weights[np.asarray(atoms)] * xs, ord=self.exponent, axis=-1)

    def extension_range(self, atom, sub, values, v):
        w = self.weights[atom]
        d = w.size
        # substitute z = y / w; constraints <z, w*sub_i> = values_i, objective <z, w*v>
        a = (sub * w[:, None]).T
        c = w * v
        if self.exponent == 2:
            if a.shape[0]:
                z0, *_ = np.linalg.lstsq(a, values, rcond=None)
                _, s, vt = np.linalg.svd(a)
                rank = int(np.sum(s > 1e-12 * max(1.0, s.max())))
                null = vt[rank:]
            else:
                z0 = np.zeros(d)
                null = np.eye(d)
            slack = 1.0 - float(z0 @ z0)
            if slack < -1e-12:
                raise DominationViolated(f"atom {atom}: functional exceeds the gauge on the subspace")
            half = float(np.linalg.norm(null @ c)) * np.sqrt(max(slack, 0.0))
            mid = float(z0 @ c)
            return mid - half, mid + half
        # dual norm ball of z: q=1 -> |z_i| <= 1 ; q=inf -> sum |z_i| <= 1
        if self.exponent == 1:
            bounds = [(-1.0, 1.0)] * d
            res = [linprog(s * c, A_eq=a if a.size else None, b_eq=values if a.size else None, bounds=bounds, method="highs") for s in (1, -1)]
        else:
            # split z = zp - zm, zp, zm >= 0, sum(zp + zm) <= 1
            aeq = np.hstack([a, -a]) if a.size else None
            aub = np.ones((1, 2 * d))
            res = [
                linprog(s * np.concatenate([c, -c]), A_ub=aub, b_ub=[1.0], A_eq=aeq, b_eq=values if a.size else None, bounds=[(0, None)] * (2 * d), method="highs")
                for s in (1, -1)
            ]
        if not all(r.status == 0 for r in res):
            raise DominationViolated(f"atom {atom}: no dominated extension exists")
        return float(res[0].fun), float(-res[1].fun)


def check_sublinear(gauge, algebra, dim, samples=1000, seed=0, rtol=1e-9):
    """Spot-check positive homogeneity and subadditivity of ``gauge``."""
    rng = np.random.default_rng(seed)
    atoms = rng.integers(algebra.atom_count, size=samples)
    x = rng.normal(size=(samples, dim)) * rng.exponential(2.0, size=(samples, 1))
    y = rng.normal(size=(samples, dim)) * rng.exponential(2.0, size=(samples, 1))
    t = rng.exponential(2.0, size=samples)
    px, py, pxy = gauge.batch(atoms, x), gauge.batch(atoms, y), gauge.batch(atoms, x + y)
    ptx = gauge.batch(atoms, t[:, None] * x)
    bad = np.abs(ptx - t * px) > rtol * np.maximum(1.0, t * px)
    if bad.any():
        raise NotSublinear(f"positive homogeneity fails on atom {int(atoms[bad.argmax()])}")
    bad = pxy > px + py + rtol * np.maximum(1.0, px + py)
    if bad.any():
        raise NotSublinear(f"subadditivity fails on atom {int(atoms[bad.argmax()])}")


def hahn_banach_extend(p, F, f, samples=1000, seed=0, trace=None):
    """Dominated L0-linear extension of ``f`` from span(F) to (L0)^d.

    Per atom the basis of F is completed by standard basis vectors and the
    functional is extended one direction at a time, choosing the midpoint of
    the admissible interval ``[lo, hi]``.  ``trace`` (a list) receives one
    ``(atom, lo, hi)`` record per extension step.
    """
    alg = F.profile.algebra
    dim = F.dim
    check_sublinear(p, alg, dim, samples=samples, seed=seed)
    rng = np.random.default_rng(seed)
    out = np.zeros((alg.atom_count, 1, dim))
    for atom in range(alg.atom_count):
        sub = F.matrix(atom)
        values = (f.matrices[atom] @ sub).ravel() if sub.shape[1] else np.zeros(0)
        # domination on sampled points of F
        if sub.shape[1]:
            c = rng.normal(size=(samples, sub.shape[1])) * rng.exponential(2.0, size=(samples, 1))
            fx, px = c @ values, p.batch(np.full(samples, atom), c @ sub.T)
            if np.any(fx > px + 1e-9 * np.maximum(1.0, np.abs(px))):
                raise DominationViolated(f"f exceeds p on F at atom {atom}")
        for e in np.eye(dim):
            probe = np.column_stack([sub, e])
            if np.linalg.matrix_rank(probe, tol=RANK_TOL * max(1.0, np.abs(probe).max())) == sub.shape[1]:
                continue
            lo, hi = p.extension_range(atom, sub, values, e)
            if trace is not None:
                trace.append((atom, lo, hi))
            if lo > hi + 1e-9 * max(1.0, abs(lo), abs(hi)):
                raise DominationViolated(f"empty extension interval at atom {atom}")
            sub = probe
            values = np.append(values, 0.5 * (lo + hi) if np.isfinite(lo + hi) else min(max(0.0, lo), hi))
        # sub is now square: solve sub^T y = values
        y = np.linalg.solve(sub.T, values)
        # one refinement step keeps the prescribed values to rounding
        y = y + np.linalg.solve(sub.T, values - sub.T @ y)
        out[atom, 0] = y
    _polish(out, F, f)
    return ModuleMap(alg, out)


def _polish(out, F, f, rounds=3, steps=16):
    """Make ``fhat(b) == f(b)`` bit for bit on the basis vectors of F.

    The linear solve leaves an error of about one ulp.  Coordinates are
    walked in order of decreasing ``|b_i|`` (coarse to fine): a Newton step,
    then single-ulp moves while the error shrinks.  Evaluation goes through
    the same code path as ``ModuleMap``.
    """
    alg = F.profile.algebra
    for _ in range(rounds):
        clean = True
        for atom in range(alg.atom_count):
            y = out[atom, 0]
            for b in F.vectors.on_atom(atom):
                col = b.points[atom]
                target = _apply(f.matrices[atom], col)
                if _apply(y[None, :], col) == target:
                    continue
                clean = False
                for i in np.argsort(-np.abs(col)):
                    if col[i] == 0:
                        break
                    err = target - _apply(y[None, :], col)
                    if err == 0:
                        break
                    y[i] += err / col[i]
                    best = abs(target - _apply(y[None, :], col))
                    for _ in range(steps):
                        if best == 0:
                            break
                        up = (target > _apply(y[None, :], col)) == (col[i] > 0)
                        old = y[i]
                        y[i] = np.nextafter(old, np.inf if up else -np.inf)
                        now = abs(target - _apply(y[None, :], col))
                        if now > best:
                            y[i] = old
                            break
                        best = now
        if clean:
            return


def _apply(matrix, x):
    """First output of ``matrix @ x`` via the ``ModuleMap`` evaluation path."""
    return np.einsum("aij,aj->ai", matrix[None], x[None])[0, 0]
