import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import affine_fixed_point, brute_min, conjugate_loop, hull_with_origin, hulls_intersect, polar_vertices

from l0stable.builtins import affine, identity, make_function, sq_norm
from l0stable.compactness import is_stably_compact
from l0stable.errors import (
    ContractionViolated,
    DimensionUnsupported,
    GridMismatch,
    MaxIterations,
    NotDisjoint,
    RateNotContractive,
    ValidationError,
)
from l0stable.measure import MeasureAlgebra, Partition
from l0stable.optimization import (
    ContractionSpec,
    StableFunction,
    StableMap,
    audit_separation,
    banach_fixpoint,
    biconjugate,
    conditional_argmin,
    fenchel_conjugate,
    polar_and_bipolar,
    strong_separation,
)
from l0stable.scalars import L0Scalar
from l0stable.sets import L0Vector, Points, Polytope, StableSet, concat_sets

SQUARE = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])


def points_set(alg, sections, kind=Points):
    return StableSet(alg, np.asarray(sections[0]).shape[1], [kind(np.asarray(s, dtype=float)) for s in sections])


# ---------------------------------------------------------------------------
# conditional argmin
# ---------------------------------------------------------------------------


def test_argmin_of_constant_is_first_point(skewed3):
    K = points_set(skewed3, [[[2.0], [1.0]], [[0.0], [5.0]], [[3.0], [-3.0]]])
    x0, value = conditional_argmin(make_function({"name": "constant", "params": {"value": 4.0}}, skewed3, 1), K)
    assert value.values.tolist() == [4.0] * 3
    # ties go to the lexicographically smallest point
    assert x0.points[:, 0].tolist() == [1.0, 0.0, -3.0]


def test_argmin_sq_norm_on_two_points(uniform4):
    K = points_set(uniform4, [[[-1.0], [2.0]]] * 4)
    x0, value = conditional_argmin(sq_norm(uniform4, 1), K)
    assert x0.points[:, 0].tolist() == [-1.0] * 4
    assert value.values.tolist() == [1.0] * 4


@given(st.integers(1, 4), st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_argmin_matches_brute_force(n_atoms, n_points, dim, seed):
    alg = MeasureAlgebra.uniform(n_atoms)
    rng = np.random.default_rng(seed)
    K = points_set(alg, [rng.integers(-3, 4, size=(int(rng.integers(1, n_points + 1)), dim)) for _ in range(n_atoms)])
    f = make_function({"name": "quadratic", "params": {"b": rng.normal(size=dim).tolist()}}, alg, dim)
    x0, value = conditional_argmin(f, K)
    assert np.array_equal(value.values, brute_min(f, K))
    assert np.array_equal(f(x0).values, value.values)
    for atom in range(n_atoms):
        assert any(np.array_equal(x0.points[atom], p) for p in K.per_atom[atom].points)


def test_argmin_commutes_with_concatenation(skewed3):
    A = points_set(skewed3, [[[0.0], [3.0]], [[1.0], [-2.0]], [[4.0], [5.0]]])
    B = points_set(skewed3, [[[7.0], [-1.0]], [[0.5], [2.0]], [[6.0], [4.5]]])
    part = Partition.from_labels(skewed3, [0, 1, 0])
    f = sq_norm(skewed3, 1, center=0.25)
    xa, va = conditional_argmin(f, A)
    xb, vb = conditional_argmin(f, B)
    xc, vc = conditional_argmin(f, concat_sets(part, [A, B]))
    mask = np.array([True, False, True])
    assert np.array_equal(xc.points, np.where(mask[:, None], xa.points, xb.points))
    assert np.array_equal(vc.values, np.where(mask, va.values, vb.values))


def test_argmin_rejects_polytopes(uniform4):
    K = points_set(uniform4, [SQUARE] * 4, Polytope)
    with pytest.raises(ValidationError):
        conditional_argmin(sq_norm(uniform4, 2), K)


def test_stability_check_catches_nonlocal_function(uniform4):
    good = sq_norm(uniform4, 2)
    bad = StableFunction(lambda x: L0Scalar(x.algebra, np.full(x.algebra.atom_count, x.points.sum())))
    assert good.check_stability(uniform4, 2) == 0
    assert bad.check_stability(uniform4, 2) > 0


# ---------------------------------------------------------------------------
# Banach fixed point
# ---------------------------------------------------------------------------


def test_identity_on_singleton_takes_one_step(uniform4):
    alg = uniform4
    T, rate = identity(alg, 2)
    x1 = L0Vector(alg, np.arange(8.0).reshape(4, 2))
    domain = StableSet(alg, 2, [Points(x1.points[a : a + 1]) for a in range(4)])
    res = banach_fixpoint(ContractionSpec(T, rate, L0Scalar(alg, [1e-9] * 4), domain), x1)
    assert res.iters.values.tolist() == [1] * 4
    assert np.array_equal(res.z.points, x1.points)


def test_affine_per_atom_iteration_counts():
    alg = MeasureAlgebra.uniform(2)
    T, rate = affine(alg, 1, [0.5, 0.9], 1.0)
    tol = L0Scalar(alg, [1e-9, 1e-9])
    res = banach_fixpoint(ContractionSpec(T, rate, tol), L0Vector(alg, [[0.0], [0.0]]), record=True)
    assert res.iters.values[0] < res.iters.values[1]
    z = affine_fixed_point(np.array([0.5, 0.9]), np.ones((2, 1)))
    err = np.abs(res.z.points - z)[:, 0]
    assert np.all(err <= tol.values * (1 + 1e-12))
    # a-posteriori bound: d(x_n, z) <= r / (1 - r) d(x_{n-1}, x_n)
    for atom, r in enumerate([0.5, 0.9]):
        n = res.iters.values[atom] - 1
        step = abs(res.iterate(n, atom)[0] - res.iterate(n - 1, atom)[0])
        assert abs(res.iterate(n, atom)[0] - z[atom, 0]) <= r / (1 - r) * step + 8 * np.finfo(float).eps * abs(z[atom, 0])


@given(st.floats(0.0, 0.95), st.floats(-5, 5), st.floats(-100, 100), st.floats(-100, 100))
def test_two_starts_agree(a, b, s1, s2):
    alg = MeasureAlgebra.uniform(1)
    T, rate = affine(alg, 1, a, b)
    spec = ContractionSpec(T, rate, L0Scalar(alg, [1e-8]))
    z1 = banach_fixpoint(spec, L0Vector(alg, [[s1]])).z.points
    z2 = banach_fixpoint(spec, L0Vector(alg, [[s2]])).z.points
    assert np.abs(z1 - z2).max() <= 2e-8 * (1 + 1e-9)


def test_matrix_affine_map(uniform4):
    A = np.array([[0.3, 0.2], [-0.1, 0.4]])
    T, rate = affine(uniform4, 2, A, [1.0, -1.0])
    res = banach_fixpoint(ContractionSpec(T, rate, L0Scalar(uniform4, [1e-10] * 4)), L0Vector(uniform4, np.zeros((4, 2))))
    z = np.linalg.solve(np.eye(2) - A, [1.0, -1.0])
    assert np.abs(res.z.points - z).max() <= 1e-10


@pytest.mark.parametrize("r", [1.0, 1.5, -0.1])
def test_rate_not_contractive(uniform4, r):
    T, _ = identity(uniform4, 1)
    spec = ContractionSpec(T, L0Scalar(uniform4, [0.5, 0.5, 0.5, r]), L0Scalar(uniform4, [1e-6] * 4))
    with pytest.raises(RateNotContractive):
        banach_fixpoint(spec, L0Vector(uniform4, np.zeros((4, 1))))
    with pytest.raises(RateNotContractive):
        banach_fixpoint(spec, L0Vector(uniform4, np.zeros((4, 1))), check=False)


def test_understated_rate_is_caught(uniform4):
    T, _ = affine(uniform4, 1, 0.9)
    spec = ContractionSpec(T, L0Scalar(uniform4, [0.5] * 4), L0Scalar(uniform4, [1e-6] * 4))
    with pytest.raises(ContractionViolated):
        spec.validate(1)


def test_nonpositive_tolerance(uniform4):
    T, rate = identity(uniform4, 1)
    with pytest.raises(ValidationError):
        ContractionSpec(T, rate, L0Scalar(uniform4, [0.0] * 4)).validate(1)


def test_max_iterations_reports_partial():
    alg = MeasureAlgebra.uniform(2)
    T, rate = affine(alg, 1, [0.1, 0.99], 1.0)
    spec = ContractionSpec(T, rate, L0Scalar(alg, [1e-12, 1e-12]))
    with pytest.raises(MaxIterations) as info:
        banach_fixpoint(spec, L0Vector(alg, [[0.0], [0.0]]), max_iter=50)
    assert info.value.partial["iters"][0] < 50
    assert info.value.partial["iters"][1] == 50


# ---------------------------------------------------------------------------
# strong separation
# ---------------------------------------------------------------------------


def test_separate_singletons():
    alg = MeasureAlgebra.uniform(2)
    A = points_set(alg, [[[0.0]], [[5.0]]])
    B = points_set(alg, [[[2.0]], [[1.0]]])
    cert = strong_separation(A, B)
    assert cert.y.points[:, 0].tolist() == [1.0, -1.0]
    assert cert.r.values.tolist() == [1.0, 2.0]
    assert audit_separation(cert, A, B) == []


def test_separate_squares(uniform4):
    A = points_set(uniform4, [SQUARE] * 4, Polytope)
    B = points_set(uniform4, [SQUARE + [4.0, 0.0]] * 4, Polytope)
    cert = strong_separation(A, B)
    np.testing.assert_allclose(cert.y.points, [[1.0, 0.0]] * 4, atol=1e-12)
    np.testing.assert_allclose(cert.r.values, 1.0, atol=1e-12)
    assert audit_separation(cert, A, B) == []
    f = cert.functional
    for atom in range(4):
        row = np.asarray(f.matrices[atom])[0]
        assert (B.per_atom[atom].points @ row).min() - (A.per_atom[atom].points @ row).max() > cert.r.values[atom]


def test_touching_reports_event(skewed3):
    A = points_set(skewed3, [SQUARE] * 3, Polytope)
    B = points_set(skewed3, [SQUARE + [2.0, 0.0], SQUARE + [5.0, 0.0], SQUARE + [0.5, 0.5]], Polytope)
    with pytest.raises(NotDisjoint) as info:
        strong_separation(A, B)
    assert info.value.event.atoms().tolist() == [0, 2]


@pytest.mark.parametrize("seed", range(40))
def test_separation_agrees_with_lp(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    alg = MeasureAlgebra.uniform(1)
    a = rng.normal(size=(int(rng.integers(1, 7)), d))
    b = rng.normal(size=(int(rng.integers(1, 7)), d)) + rng.normal(size=d) * 3
    A, B = points_set(alg, [a], Polytope), points_set(alg, [b], Polytope)
    if hulls_intersect(a, b):
        with pytest.raises(NotDisjoint):
            strong_separation(A, B)
    else:
        cert = strong_separation(A, B)
        assert audit_separation(cert, A, B) == []
        assert np.isclose(np.linalg.norm(cert.y.points[0]), 1.0)


def test_separation_dimension_limit():
    alg = MeasureAlgebra.uniform(1)
    A = points_set(alg, [np.zeros((1, 4))])
    B = points_set(alg, [np.ones((1, 4))])
    with pytest.raises(DimensionUnsupported):
        strong_separation(A, B)


# ---------------------------------------------------------------------------
# conjugation
# ---------------------------------------------------------------------------


GRID = np.linspace(-2.0, 2.0, 41)


def test_conjugate_of_zero_is_support_function():
    g = fenchel_conjugate(GRID, np.zeros((1, 41)), GRID)
    assert np.array_equal(g[0], 2.0 * np.abs(GRID))


def test_conjugate_of_half_square():
    f = 0.5 * GRID**2
    g = fenchel_conjugate(GRID, f[None], GRID)[0]
    np.testing.assert_allclose(g, 0.5 * GRID**2, atol=1e-12)


@given(st.integers(0, 2**31 - 1), st.integers(1, 2))
def test_biconjugate_below_function(seed, d):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(25, d))
    y = rng.normal(size=(30, d)) * 3
    f = rng.normal(size=(3, 25)) * 4
    ff = biconjugate(x, f, y)
    assert np.all(ff <= f)


def test_conjugate_matches_loop(rng):
    x = rng.normal(size=(20, 2))
    y = rng.normal(size=(15, 2))
    f = rng.normal(size=(2, 20))
    g = fenchel_conjugate(x, f, y)
    for atom in range(2):
        exact = conjugate_loop(x, f[atom], y)
        assert np.all(g[atom] >= exact)
        assert np.all(g[atom] <= np.nextafter(exact, np.inf))


def test_conjugate_of_convex_is_recovered():
    f = np.abs(GRID)[None] + 0.25 * GRID[None] ** 2
    ff = biconjugate(GRID, f, np.linspace(-4, 4, 401))
    np.testing.assert_allclose(ff, f, atol=1e-12)


@pytest.mark.parametrize("cols", [40, 42])
def test_grid_mismatch(cols):
    with pytest.raises(GridMismatch):
        fenchel_conjugate(GRID, np.zeros((1, cols)), GRID)


def test_grid_dimension_mismatch():
    with pytest.raises(GridMismatch):
        fenchel_conjugate(np.zeros((3, 2)), np.zeros((1, 3)), np.zeros((3, 1)))


# ---------------------------------------------------------------------------
# polars
# ---------------------------------------------------------------------------


def same_rows(a, b, tol=1e-9):
    a, b = np.asarray(a), np.asarray(b)
    d = np.linalg.norm(a[:, None] - b[None], axis=-1)
    return len(a) == len(b) and max(d.min(0).max(), d.min(1).max()) <= tol


def test_square_polar_is_diamond(uniform4):
    res = polar_and_bipolar(points_set(uniform4, [SQUARE] * 4, Polytope))
    assert res.bounded.all()
    diamond = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
    for atom in range(4):
        assert same_rows(res.polar.per_atom[atom].points, diamond)
        assert same_rows(res.bipolar.per_atom[atom].points, SQUARE)
    assert is_stably_compact(res.polar).compact


def test_polar_unbounded_flag(skewed3):
    S = points_set(skewed3, [SQUARE, SQUARE + [3.0, 3.0], [[1.0, 0.0], [0.0, 1.0]]], Polytope)
    res = polar_and_bipolar(S)
    assert res.bounded.tolist() == [True, False, False]
    assert res.polar is None
    A, b = res.halfspaces[1]
    assert np.array_equal(A, S.per_atom[1].points) and np.array_equal(b, np.ones(4))


@pytest.mark.parametrize("seed", range(20))
def test_polar_and_bipolar_match_oracles(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    alg = MeasureAlgebra.uniform(1)
    v = rng.normal(size=(int(rng.integers(d + 1, 9)), d)) * 2
    res = polar_and_bipolar(points_set(alg, [v], Polytope))
    assert same_rows(res.bipolar.per_atom[0].points, hull_with_origin(v), 1e-8)
    if res.bounded[0]:
        assert same_rows(res.polar.per_atom[0].points, polar_vertices(v), 1e-8)


def test_polar_dimension_limit():
    alg = MeasureAlgebra.uniform(1)
    with pytest.raises(DimensionUnsupported):
        polar_and_bipolar(points_set(alg, [np.eye(4)]))


def test_stable_map_wraps_evaluator(uniform4):
    m = StableMap(lambda x: L0Vector(x.algebra, 2 * x.points), name="double")
    x = L0Vector(uniform4, np.ones((4, 1)))
    assert np.array_equal(m(x).points, 2 * np.ones((4, 1)))
