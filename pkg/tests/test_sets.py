import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import product_of_sections

from l0stable.errors import NotEnumerable, NotStable, ValidationError
from l0stable.measure import MeasureAlgebra, Partition
from l0stable.sets import (
    L0Vector,
    Points,
    Polytope,
    StableFiniteFamily,
    StableSet,
    concat_sets,
    concat_vectors,
    extract_setvalued_map,
    is_closed_bounded,
    is_stable,
    selector_count,
    selectors,
    stable_hull,
)


def vectors(alg, rows):
    return [L0Vector(alg, np.asarray(r, dtype=float).reshape(alg.atom_count, -1)) for r in rows]


@st.composite
def vector_families(draw):
    n = draw(st.integers(1, 3))
    alg = MeasureAlgebra.uniform(n)
    k = draw(st.integers(1, 6))
    rows = draw(st.lists(st.lists(st.integers(-2, 2), min_size=n, max_size=n), min_size=k, max_size=k))
    return alg, vectors(alg, rows)


@given(vector_families())
def test_stability_means_product_of_sections(data):
    _, S = data
    assert is_stable(S) == ({x.key() for x in S} == product_of_sections(S))


@given(vector_families())
def test_stable_hull_is_the_product_and_contains_the_family(data):
    _, S = data
    H = stable_hull(S)
    keys = {s.key() for s in selectors(H)}
    assert keys == product_of_sections(S)
    assert {x.key() for x in S} <= keys
    assert is_stable(list(selectors(H)))


def test_example_two_atom_grid():
    alg = MeasureAlgebra.uniform(2)
    S = vectors(alg, [[0, 0], [1, 1]])
    assert not is_stable(S)
    with pytest.raises(NotStable):
        extract_setvalued_map(S)
    full = vectors(alg, [[0, 0], [1, 1], [0, 1], [1, 0]])
    K = extract_setvalued_map(full)
    assert K.sizes() == [2, 2]
    assert {s.key() for s in selectors(K)} == {x.key() for x in full}


def test_selectors_are_counted_and_enumerated(uniform4):
    K = StableSet.from_points(uniform4, [[[0.0]], [[1.0], [2.0]], [[3.0], [4.0], [5.0]], [[6.0]]])
    sels = list(selectors(K))
    assert selector_count(K) == len(sels) == 6
    assert len({s.key() for s in sels}) == 6


def test_polytope_sets_are_not_enumerable(uniform4):
    K = StableSet.from_polytopes(uniform4, [[[0, 0], [1, 0], [0, 1]]] * 4)
    with pytest.raises(NotEnumerable):
        next(selectors(K))


@pytest.mark.parametrize(
    "per_atom, exc",
    [
        ([[[0.0, 1.0]], [[1.0]]], ValidationError),
        ([[[0.0]], [[np.nan]]], ValidationError),
        ([[[0.0]]], ValidationError),
    ],
)
def test_malformed_sets_are_rejected(per_atom, exc):
    alg = MeasureAlgebra.uniform(2)
    with pytest.raises(exc):
        StableSet(alg, 1, [Points(p) for p in per_atom])


def test_polytope_rejects_duplicate_vertices():
    with pytest.raises(ValidationError):
        Polytope([[0, 0], [1, 1], [0, 0]])


def test_concatenation_of_sets_and_vectors(uniform4):
    part = Partition(uniform4, [[0, 2], [1, 3]])
    A = StableSet.from_points(uniform4, [[[0.0]]] * 4)
    B = StableSet.from_points(uniform4, [[[1.0], [2.0]]] * 4)
    C = concat_sets(part, [A, B])
    assert C.sizes() == [1, 2, 1, 2]
    x = concat_vectors(part, [L0Vector.constant(uniform4, [0.0]), L0Vector.constant(uniform4, [1.0])])
    assert x.points[:, 0].tolist() == [0, 1, 0, 1]


def test_closed_bounded_certificate(uniform4):
    K = StableSet.from_points(uniform4, [[[3, 4]], [[0, 0], [1, 0]], [[-1, 0]], [[0, 2]]])
    ok, radius = is_closed_bounded(K)
    assert ok and radius.tolist() == [5.0, 1.0, 1.0, 2.0]
    broken = StableSet(uniform4, 1, [Points([[0.0]]), Points([[np.inf]]), Points([[0.0]]), Points([[0.0]])], check=False)
    assert is_closed_bounded(broken) == (False, None)


def test_stable_finite_family_counts(uniform4):
    part = Partition(uniform4, [[0, 1], [2, 3]])
    fam = StableFiniteFamily.from_partition(part, [["a"], ["b", "c", "d"]])
    assert fam.counts.tolist() == [1, 1, 3, 3]
    assert fam.length.values.tolist() == [1, 1, 3, 3]
    assert fam.on_atom(3) == ("b", "c", "d")


def test_every_selector_of_a_product_is_a_concatenation():
    alg = MeasureAlgebra.uniform(3)
    K = StableSet.from_points(alg, [[[0.0], [1.0]]] * 3)
    sels = list(selectors(K))
    for a, b in itertools.product(sels, repeat=2):
        for labels in itertools.product([0, 1], repeat=3):
            part = Partition.from_labels(alg, labels)
            pieces = [a, b][: part.num_blocks]
            assert concat_vectors(part, pieces).key() in {s.key() for s in sels}


@pytest.mark.parametrize(
    "per_atom, radius",
    [
        ([[[0.0, 0.0]]] * 2, [0.0, 0.0]),
        ([[[1, 1], [1, -1], [-1, 1], [-1, -1]]] * 2, [np.sqrt(2)] * 2),
        ([[[0, 3], [1, 0]], [[-2, 0]]], [3.0, 2.0]),
    ],
)
def test_radius_is_the_per_atom_maximal_norm(per_atom, radius):
    alg = MeasureAlgebra.uniform(2)
    ok, r = is_closed_bounded(StableSet.from_points(alg, per_atom))
    assert ok and r.values == pytest.approx(radius, abs=0)


def test_concat_of_differently_sized_sets():
    alg = MeasureAlgebra.uniform(2)
    A = StableSet.from_points(alg, [[[0.0], [1.0]], [[0.0]]])
    B = StableSet.from_points(alg, [[[5.0]], [[1.0], [2.0], [3.0]]])
    assert concat_sets(Partition(alg, [[0], [1]]), [A, B]).sizes() == [2, 3]
    assert concat_sets(alg.trivial_partition(), [A]) == A
