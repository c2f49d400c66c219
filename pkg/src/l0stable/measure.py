"""Finite atomic measure algebras, events and partitions.

Atoms stand in for the equivalence classes of a probability space modulo
null sets, so "almost everywhere" is literal per-atom equality.
"""
from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from .errors import AlgebraMismatch, ValidationError

NORMALIZATION_TOL = 1e-12


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


class MeasureAlgebra:
    """Probability space on ``atom_count`` atoms, every atom of positive mass.

    >>> alg = MeasureAlgebra.uniform(4)
    >>> alg.prob(alg.event([0, 2]))
    0.5
    """

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValidationError("probs must be a non-empty list", "probs")
        if not np.all(np.isfinite(probs)) or np.any(probs <= 0):
            raise ValidationError("every atom needs strictly positive mass", "probs")
        if abs(math.fsum(probs) - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"probs sum to {math.fsum(probs)!r}, not 1", "probs")
        self.probs = _frozen(probs)

    @classmethod
    def uniform(cls, n):
        if n < 1:
            raise ValidationError("atom_count must be positive", "atoms")
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def dyadic(cls, depth):
        """Uniform algebra on ``2**depth`` atoms (masses are exact in binary)."""
        return cls.uniform(2 ** depth)

    @property
    def atom_count(self):
        return self.probs.size

    def __len__(self):
        return self.atom_count

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, MeasureAlgebra) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"MeasureAlgebra(atoms={self.atom_count})"

    def check_same(self, other):
        alg = other if isinstance(other, MeasureAlgebra) else other.algebra
        if alg != self:
            raise AlgebraMismatch("objects live on different measure algebras")

    # events ------------------------------------------------------------
    def event(self, atoms=()):
        mask = np.zeros(self.atom_count, dtype=bool)
        mask[list(atoms)] = True
        return Event(self, mask)

    def full(self):
        return Event(self, np.ones(self.atom_count, dtype=bool))

    def empty(self):
        return Event(self, np.zeros(self.atom_count, dtype=bool))

    def prob(self, event):
        self.check_same(event)
        return event.prob()

    # partitions ----------------------------------------------------------
    def atoms_partition(self):
        return Partition.from_labels(self, np.arange(self.atom_count))

    def trivial_partition(self):
        return Partition.from_labels(self, np.zeros(self.atom_count, dtype=int))


class Event:
    """Element of the measure algebra, stored as a boolean atom mask."""

    __slots__ = ("algebra", "mask", "__weakref__")

    def __init__(self, algebra, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (algebra.atom_count,):
            raise ValidationError(f"event mask must have length {algebra.atom_count}")
        self.algebra = algebra
        self.mask = _frozen(mask)

    def _other(self, other):
        if not isinstance(other, Event):
            raise TypeError(f"expected Event, got {type(other).__name__}")
        self.algebra.check_same(other)
        return other.mask

    def meet(self, other):
        return Event(self.algebra, self.mask & self._other(other))

    def join(self, other):
        return Event(self.algebra, self.mask | self._other(other))

    def complement(self):
        return Event(self.algebra, ~self.mask)

    def difference(self, other):
        return Event(self.algebra, self.mask & ~self._other(other))

    def leq(self, other):
        return not np.any(self.mask & ~self._other(other))

    __and__ = meet
    __or__ = join
    __invert__ = complement
    __sub__ = difference
    __le__ = leq

    def prob(self):
        return math.fsum(self.algebra.probs[self.mask])

    def atoms(self):
        return np.flatnonzero(self.mask)

    def is_empty(self):
        return not self.mask.any()

    def is_full(self):
        return bool(self.mask.all())

    def __len__(self):
        return int(self.mask.sum())

    def __eq__(self, other):
        return (
            isinstance(other, Event)
            and other.algebra == self.algebra
            and np.array_equal(self.mask, other.mask)
        )

    def __hash__(self):
        return hash(self.mask.tobytes())

    def __repr__(self):
        atoms = self.atoms()
        shown = ",".join(map(str, atoms[:8])) + (",..." if atoms.size > 8 else "")
        return f"Event({{{shown}}})"


def meet(a, b):
    return a.meet(b)


def join(a, b):
    return a.join(b)


def complement(a):
    return a.complement()


def prob(a):
    return a.prob()


class Partition:
    """Partition of the full event into non-empty, pairwise disjoint blocks.

    Stored as one integer label per atom; ``blocks`` keeps construction
    order.  Equality ignores block order.
    """

    __slots__ = ("algebra", "labels", "__dict__")

    def __init__(self, algebra, blocks):
        labels = np.full(algebra.atom_count, -1, dtype=np.int64)
        for k, block in enumerate(blocks):
            if isinstance(block, Event):
                algebra.check_same(block)
                mask = block.mask
            else:
                mask = algebra.event(block).mask
            if not mask.any():
                raise ValidationError(f"block {k} is empty", f"blocks[{k}]")
            if np.any(labels[mask] >= 0):
                raise ValidationError(f"block {k} overlaps an earlier block", f"blocks[{k}]")
            labels[mask] = k
        if np.any(labels < 0):
            raise ValidationError("blocks do not cover every atom", "blocks")
        self.algebra = algebra
        self.labels = _frozen(labels)

    @classmethod
    def from_labels(cls, algebra, labels):
        """Blocks are the level sets of ``labels``, ordered by first atom."""
        labels = np.asarray(labels)
        if labels.shape != (algebra.atom_count,):
            raise ValidationError("one label per atom required", "labels")
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first))
        obj = cls.__new__(cls)
        obj.algebra = algebra
        obj.labels = _frozen(order[inverse.ravel()].astype(np.int64))
        return obj

    @cached_property
    def blocks(self):
        return tuple(Event(self.algebra, self.labels == k) for k in range(self.num_blocks))

    @property
    def num_blocks(self):
        return int(self.labels.max()) + 1

    def __len__(self):
        return self.num_blocks

    def __iter__(self):
        return iter(self.blocks)

    def block_probs(self):
        return np.bincount(self.labels, weights=self.algebra.probs, minlength=self.num_blocks)

    def block_of(self, atom):
        return int(self.labels[atom])

    def refines(self, other):
        """True when every block of ``self`` sits inside a block of ``other``."""
        self.algebra.check_same(other)
        for block in self.blocks:
            if np.unique(other.labels[block.mask]).size != 1:
                return False
        return True

    def _canonical(self):
        return frozenset(block.mask.tobytes() for block in self.blocks)

    def __eq__(self, other):
        return (
            isinstance(other, Partition)
            and other.algebra == self.algebra
            and self._canonical() == other._canonical()
        )

    def __hash__(self):
        return hash(self._canonical())

    def __repr__(self):
        return "Partition(" + ", ".join(repr(b) for b in self.blocks) + ")"


def common_refinement(partitions):
    """Coarsest partition refining every input.

    Blocks are the non-empty intersections of one block from each input.
    """
    partitions = list(partitions)
    if not partitions:
        raise ValidationError("need at least one partition")
    alg = partitions[0].algebra
    for p in partitions[1:]:
        alg.check_same(p)
    keys = np.stack([p.labels for p in partitions], axis=1)
    _, labels = np.unique(keys, axis=0, return_inverse=True)
    return Partition.from_labels(alg, labels.ravel())


def common_coarsening(partitions):
    """Finest partition coarser than every input (connected components)."""
    partitions = list(partitions)
    if not partitions:
        raise ValidationError("need at least one partition")
    alg = partitions[0].algebra
    parent = np.arange(alg.atom_count)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p in partitions:
        alg.check_same(p)
        for block in p.blocks:
            atoms = block.atoms()
            root = find(atoms[0])
            for a in atoms[1:]:
                parent[find(a)] = root
    return Partition.from_labels(alg, np.array([find(i) for i in range(alg.atom_count)]))
