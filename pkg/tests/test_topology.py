import numpy as np
import pytest

from l0stable.errors import TranslatorInvalid, ValidationError
from l0stable.measure import MeasureAlgebra, Partition
from l0stable.scalars import L0Scalar
from l0stable.sets import L0Vector, StableFiniteFamily, StableSet
from l0stable.topology import (
    Concat,
    ConditionalLp,
    EpsLambda,
    L0Ball,
    Pairing,
    SeminormFamily,
    StableBall,
    SupHull,
    WeightedNorm,
    audit_inclusion,
    audit_points,
    chain_neighborhoods,
    check_seminorm_axioms,
    closure,
    contains,
    epslambda_witness,
    product_contains,
    topology_refinement_witness,
)


def abs_norm(alg):
    return WeightedNorm(alg, np.ones(1), exponent=2)


def point(alg, vals):
    return L0Vector(alg, np.asarray(vals, dtype=float)[:, None])


def test_center_belongs_to_every_neighbourhood(uniform4):
    x = point(uniform4, [1, -2, 3, 0])
    p = abs_norm(uniform4)
    r = L0Scalar(uniform4, [0.1, 1, 2, 3])
    fam = StableFiniteFamily.constant(uniform4, [p])
    for U in (EpsLambda(x, [p], 0.1, 0.5), L0Ball(x, [p], r), StableBall(x, fam, r)):
        assert contains(U, x)


def test_l0_ball_is_strict(uniform4):
    zero = point(uniform4, [0, 0, 0, 0])
    U = L0Ball(zero, [abs_norm(uniform4)], L0Scalar.constant(uniform4, 1.0))
    assert contains(U, point(uniform4, [0.5, 0.5, 0.5, 0.5]))
    assert not contains(U, point(uniform4, [0.5, 0.5, 1.0, 0.5]))


def test_epslambda_needs_mass_strictly_above_threshold(uniform4):
    zero = point(uniform4, [0, 0, 0, 0])
    U = EpsLambda(zero, [abs_norm(uniform4)], 1.0, 0.5)
    assert not contains(U, point(uniform4, [0.5, 0.5, 2, 2]))
    assert contains(U, point(uniform4, [0.5, 0.5, 0.5, 2]))


def test_radius_must_be_strictly_positive(uniform4):
    zero = point(uniform4, [0, 0, 0, 0])
    with pytest.raises(ValidationError):
        L0Ball(zero, [abs_norm(uniform4)], L0Scalar(uniform4, [1, 1, 0, 1]))
    with pytest.raises(ValidationError):
        EpsLambda(zero, [abs_norm(uniform4)], 1.0, 1.0)


def test_product_membership(uniform4):
    zero = point(uniform4, [0, 0, 0, 0])
    U = L0Ball(zero, [abs_norm(uniform4)], L0Scalar.constant(uniform4, 1.0))
    assert product_contains([U, U], [zero, point(uniform4, [0.9] * 4)])
    assert not product_contains([U, U], [zero, point(uniform4, [0.9, 0.9, 0.9, 1.0])])


def test_conditional_lp_anchor_cases(skewed3, rng):
    x = rng.normal(size=(20, 3, 2))
    plain = ConditionalLp(skewed3, skewed3.atoms_partition(), p=3)
    assert np.allclose(plain.batch(x), np.linalg.norm(x, axis=-1), rtol=1e-13)
    full = ConditionalLp(skewed3, skewed3.trivial_partition(), p=2)
    expect = np.sqrt((np.linalg.norm(x, axis=-1) ** 2) @ skewed3.probs)
    assert np.allclose(full.batch(x), expect[:, None], rtol=1e-13)
    assert plain.local and not full.local


@pytest.mark.parametrize("build", ["weighted1", "weightedinf", "pairing", "condlp", "sup", "concat"])
def test_constructed_seminorms_satisfy_the_axioms(build, skewed3, rng):
    alg = skewed3
    base = {
        "weighted1": lambda: WeightedNorm(alg, rng.uniform(0, 2, size=(3, 2)), 1),
        "weightedinf": lambda: WeightedNorm(alg, rng.uniform(0, 2, size=(3, 2)), "inf"),
        "pairing": lambda: Pairing(L0Vector(alg, rng.normal(size=(3, 2)))),
        "condlp": lambda: ConditionalLp(alg, Partition(alg, [[0, 2], [1]]), 1.5),
    }
    if build in base:
        p = base[build]()
    elif build == "sup":
        p = SupHull([base["weighted1"](), base["pairing"](), base["condlp"]()])
    else:
        p = Concat(Partition(alg, [[0], [1, 2]]), [base["pairing"](), SupHull([base["condlp"](), base["weightedinf"]()])])
    assert check_seminorm_axioms(p, 2, samples=1000, seed=1) == 0


def test_separated_family(skewed3):
    fam = SeminormFamily([Pairing(L0Vector(skewed3, [[1, 0]] * 3)), Pairing(L0Vector(skewed3, [[0, 1]] * 3))], True)
    assert fam.check_separated(2)
    assert not SeminormFamily([fam.members[0]]).check_separated(2)


def test_epslambda_witness_examples():
    alg = MeasureAlgebra([0.5, 0.3, 0.2])
    fam = SeminormFamily([WeightedNorm(alg, [1.0], 2), Pairing(L0Vector(alg, [[2.0]] * 3))])
    q = fam.concat_sup(Partition(alg, [[0], [1], [2]]), [[0], [1], [0, 1]])
    w = epslambda_witness(q, 1.0, 0.5)
    assert w.m == 2 and w.lam == 0.25 and w.eps == 1.0
    assert len(w.seminorms) == 2
    single = epslambda_witness(fam.members[0], 1.0, 0.5)
    assert single.m == 1 and single.seminorms == [fam.members[0]]


@pytest.mark.parametrize("seed", range(5))
def test_epslambda_witness_passes_inclusion_audit(seed):
    rng = np.random.default_rng(seed)
    n = 6
    alg = MeasureAlgebra(rng.dirichlet(np.ones(n)))
    fam = SeminormFamily([WeightedNorm(alg, rng.uniform(0.1, 2, size=(n, 2)), 2), Pairing(L0Vector(alg, rng.normal(size=(n, 2))))])
    part = Partition.from_labels(alg, rng.integers(0, 3, size=n))
    q = fam.concat_sup(part, [[int(rng.integers(2))] for _ in range(part.num_blocks)])
    w = epslambda_witness(q, 0.7, 0.6)
    zero = L0Vector.zeros(alg, 2)
    pts = audit_points(zero, 2, 10_000, rng, spread=(-3, 2))
    bad = audit_inclusion(EpsLambda(zero, w.seminorms, w.eps, w.lam), EpsLambda(zero, [q], 0.7, 0.6), pts)
    assert bad == 0


def test_refinement_witness_with_identity_translator(skewed3):
    N = [WeightedNorm(skewed3, [1.0, 1.0], 2)]
    ident = lambda N1, eps: (N1, L0Scalar.constant(skewed3, eps))  # noqa: E731
    w = topology_refinement_witness(N, 0.3, 0.4, ident, dim=2, samples=2000)
    assert w.seminorms == N and w.eps == 0.3 and w.lam == 0.2


def test_refinement_witness_uses_blockwise_radii():
    alg = MeasureAlgebra([0.1, 0.3, 0.6])
    N1 = [WeightedNorm(alg, [1.0], 2)]
    N2 = [WeightedNorm(alg, [[1.0], [2.0], [4.0]], 2)]
    # |2x| < 2 eps forces |x| < eps, and so on
    translator = lambda N, eps: (N2, L0Scalar(alg, [eps, 2 * eps, 4 * eps]))  # noqa: E731
    w = topology_refinement_witness(N1, 0.5, 0.5, translator, dim=1, samples=5000)
    # levels by decreasing value: 2.0 (p=.6), 1.0 (p=.3), 0.5 (p=.1); tail < .25 after two blocks
    assert w.m == 2 and w.eps == 1.0
    zero = L0Vector.zeros(alg, 1)
    pts = audit_points(zero, 1, 10_000, np.random.default_rng(0), spread=(-3, 2))
    bad = audit_inclusion(EpsLambda(zero, N2, w.eps, w.lam), EpsLambda(zero, N1, 0.5, 0.5), pts)
    assert bad == 0


def test_invalid_translator_is_caught(skewed3):
    N1 = [WeightedNorm(skewed3, [1.0], 2)]
    wrong = lambda N, eps: (N, L0Scalar.constant(skewed3, 10 * eps))  # noqa: E731
    with pytest.raises(TranslatorInvalid):
        topology_refinement_witness(N1, 0.5, 0.5, wrong, dim=1, samples=2000)


def test_topology_chain_inclusions(uniform4, rng):
    p1 = WeightedNorm(uniform4, [1.0, 2.0], 1)
    p2 = Pairing(L0Vector(uniform4, rng.normal(size=(4, 2))))
    center = L0Vector(uniform4, rng.normal(size=(4, 2)))
    r = L0Scalar(uniform4, rng.uniform(0.2, 2, size=4))
    part = Partition(uniform4, [[0, 1], [2, 3]])
    sb, lb, el = chain_neighborhoods(center, [p1], (part, [[p2], []]), r, 0.3)
    pts = audit_points(center, 2, 10_000, rng, spread=(-2, 1))
    assert audit_inclusion(sb, lb, pts) == 0
    assert audit_inclusion(lb, el, pts) == 0


def test_closure_is_identity_and_excludes_exterior_points(uniform4, rng):
    K = StableSet.from_points(uniform4, [[[0.0], [1.0]], [[2.0]], [[-1.0], [3.0]], [[0.5]]])
    assert closure(K) is K
    fam = SeminormFamily([abs_norm(uniform4)])
    outside = [point(uniform4, rng.normal(size=4) * 3) for _ in range(50)]
    same, failures = closure(K, fam, audit=outside)
    assert same is K and failures == 0
