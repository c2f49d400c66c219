"""The ring L0 over a finite measure algebra, and step naturals."""
from __future__ import annotations

import numbers

import numpy as np

from .errors import ArityError, ValidationError
from .measure import Partition, _frozen


class L0Scalar:
    """One real per atom.

    ``extended=True`` admits ``+inf`` values (used by conjugation only).
    Order predicates compare atom by atom with no tolerance.
    """

    __slots__ = ("algebra", "values", "extended")

    def __init__(self, algebra, values, extended=False):
        values = np.asarray(values, dtype=float)
        if values.shape == ():
            values = np.full(algebra.atom_count, float(values))
        if values.shape != (algebra.atom_count,):
            raise ValidationError(f"expected {algebra.atom_count} values, got shape {values.shape}")
        if extended:
            if np.any(np.isnan(values)) or np.any(values == -np.inf):
                raise ValidationError("extended scalars admit +inf only")
        elif not np.all(np.isfinite(values)):
            raise ValidationError("scalar values must be finite")
        self.algebra = algebra
        self.values = _frozen(values)
        self.extended = bool(extended)

    @classmethod
    def constant(cls, algebra, c):
        return cls(algebra, np.full(algebra.atom_count, float(c)))

    @classmethod
    def indicator(cls, event):
        return cls(event.algebra, event.mask.astype(float))

    def _coerce(self, other):
        if isinstance(other, L0Scalar):
            self.algebra.check_same(other)
            return other.values
        if isinstance(other, numbers.Real):
            return float(other)
        return NotImplemented

    def _wrap(self, values):
        return L0Scalar(self.algebra, values)

    def __add__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(self.values + v)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(self.values - v)

    def __rsub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(v - self.values)

    def __mul__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(self.values * v)

    __rmul__ = __mul__

    def __truediv__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(self.values / v)

    def __neg__(self):
        return self._wrap(-self.values)

    def __abs__(self):
        return self._wrap(np.abs(self.values))

    def maximum(self, other):
        return self._wrap(np.maximum(self.values, self._coerce(other)))

    def minimum(self, other):
        return self._wrap(np.minimum(self.values, self._coerce(other)))

    # a.e. order -------------------------------------------------------------
    def le(self, other):
        return bool(np.all(self.values <= self._coerce(other)))

    def lt(self, other):
        """Strict a.e. order: ``<`` on every atom."""
        return bool(np.all(self.values < self._coerce(other)))

    def event_le(self, other):
        """The event ``{self <= other}``."""
        from .measure import Event

        return Event(self.algebra, self.values <= self._coerce(other))

    def event_lt(self, other):
        from .measure import Event

        return Event(self.algebra, self.values < self._coerce(other))

    def event_ge(self, other):
        from .measure import Event

        return Event(self.algebra, self.values >= self._coerce(other))

    def event_gt(self, other):
        from .measure import Event

        return Event(self.algebra, self.values > self._coerce(other))

    def restrict(self, event):
        """``1_A * self``."""
        return self._wrap(np.where(event.mask, self.values, 0.0))

    def __eq__(self, other):
        return (
            isinstance(other, L0Scalar)
            and other.algebra == self.algebra
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self):
        return f"L0Scalar({self.values.tolist()})"

    def tolist(self):
        return self.values.tolist()


class StepNatural:
    """Element of L0_s(N): a positive integer on every atom.

    The canonical decomposition ``n = sum_k 1_{A_k} n_k`` groups atoms by value.
    """

    __slots__ = ("algebra", "values")

    def __init__(self, algebra, values):
        values = np.asarray(values)
        if values.shape == ():
            values = np.full(algebra.atom_count, int(values))
        if values.shape != (algebra.atom_count,):
            raise ValidationError(f"expected {algebra.atom_count} values")
        if not np.issubdtype(values.dtype, np.integer):
            if not np.all(values == np.round(values)):
                raise ValidationError("step naturals must be integers")
        values = values.astype(np.int64)
        if np.any(values < 1):
            raise ValidationError("step naturals must be >= 1 on every atom")
        self.algebra = algebra
        self.values = _frozen(values)

    def canonical(self):
        """``(partition, [n_k])`` with one block per distinct value."""
        levels, labels = np.unique(self.values, return_inverse=True)
        part = Partition.from_labels(self.algebra, labels.ravel())
        return part, [int(self.values[b.atoms()[0]]) for b in part.blocks]

    def __eq__(self, other):
        return (
            isinstance(other, StepNatural)
            and other.algebra == self.algebra
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self):
        return f"StepNatural({self.values.tolist()})"

    def tolist(self):
        return self.values.tolist()


def concat_scalars(parts, xs):
    """Paste ``xs[k]`` on block ``k`` of ``parts``."""
    xs = list(xs)
    if len(xs) != parts.num_blocks:
        raise ArityError(f"{parts.num_blocks} blocks but {len(xs)} scalars")
    for x in xs:
        parts.algebra.check_same(x)
    stacked = np.stack([x.values for x in xs])
    return L0Scalar(parts.algebra, stacked[parts.labels, np.arange(parts.algebra.atom_count)])


def ess_sup(xs):
    xs = list(xs)
    if not xs:
        raise ArityError("ess_sup of an empty family")
    for x in xs[1:]:
        xs[0].algebra.check_same(x)
    return L0Scalar(xs[0].algebra, np.max([x.values for x in xs], axis=0))


def ess_inf(xs):
    xs = list(xs)
    if not xs:
        raise ArityError("ess_inf of an empty family")
    for x in xs[1:]:
        xs[0].algebra.check_same(x)
    return L0Scalar(xs[0].algebra, np.min([x.values for x in xs], axis=0))


def is_strictly_positive(x):
    return bool(np.all(x.values > 0))


def conditional_expectation(x, sub):
    """Blockwise probability-weighted mean of ``x`` over ``sub``."""
    sub.algebra.check_same(x)
    p = sub.algebra.probs
    num = np.bincount(sub.labels, weights=p * x.values, minlength=sub.num_blocks)
    den = sub.block_probs()
    return L0Scalar(x.algebra, (num / den)[sub.labels])


def evaluate_stable_sequence(n, seq):
    """``x_n := sum_k 1_{A_k} x_{n_k}`` for a sequence given as a callback.

    ``seq(k)`` returns any object with a ``concat``-able array attribute
    (``L0Scalar`` or ``L0Vector``); evaluation is blockwise on the canonical
    partition of ``n``.
    """
    part, ns = n.canonical()
    pieces = [seq(k) for k in ns]
    if isinstance(pieces[0], L0Scalar):
        return concat_scalars(part, pieces)
    from .sets import concat_vectors

    return concat_vectors(part, pieces)
