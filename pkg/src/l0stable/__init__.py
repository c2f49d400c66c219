"""Stable sets, L0-modules and conditional optimisation over finite measure algebras."""
from .errors import L0Error, MathError, ValidationError
from .measure import Event, MeasureAlgebra, Partition, common_coarsening, common_refinement
from .scalars import L0Scalar, StepNatural, concat_scalars, conditional_expectation, evaluate_stable_sequence
from .sets import (
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
    selectors,
    stable_hull,
)
from .modules import ModuleMap, StableBasis, coordinates, extract_stable_basis, hahn_banach_extend, stable_lincomb
from .topology import (
    Concat,
    ConditionalLp,
    EpsLambda,
    L0Ball,
    Pairing,
    SeminormFamily,
    StableBall,
    SupHull,
    WeightedNorm,
    closure,
    contains,
    epslambda_witness,
    topology_refinement_witness,
)
from .compactness import (
    DInfinity,
    EuclideanL0,
    cluster_lemma_construct,
    is_stably_compact,
    product_compactness,
    stable_eps_net,
)
from .optimization import (
    ContractionSpec,
    StableFunction,
    StableMap,
    banach_fixpoint,
    biconjugate,
    conditional_argmin,
    fenchel_conjugate,
    polar_and_bipolar,
    strong_separation,
)

__version__ = "0.1.0"
