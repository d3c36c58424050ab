"""Exact classification of step functions of two variables."""

from measfun.canonical import (
    CanonicalImage,
    EquivalenceWitness,
    brute_force_equivalent,
    canonical_form,
    diagonal_equivalent,
    equivalent,
    is_tautological,
    refine,
    section_metric,
)
from measfun.core import (
    Alphabet,
    Distribution,
    StepFunction,
    WeightedSpace,
    apply_permutations,
    load,
    random_function,
    save,
)
from measfun.matrixdist import (
    SampledMatrix,
    empirical_measure_on_measures,
    empirical_row_measure,
    exact_pattern_marginal,
    matrixdist_equal_upto,
    reconstruct,
    sample_atoms,
    sample_matrix,
    simplicity_diagnostic,
)
from measfun.purity import (
    is_pure,
    is_totally_pure,
    purify,
    purity_partition,
    symmetry_group,
)
from measfun.sjd import (
    c_set,
    check_coherence,
    find_column_transport,
    joint_distribution,
    section_distribution,
    sjd_equal,
    sjd_signature,
    skew_equivalent,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "CanonicalImage",
    "Distribution",
    "EquivalenceWitness",
    "SampledMatrix",
    "StepFunction",
    "WeightedSpace",
    "apply_permutations",
    "brute_force_equivalent",
    "c_set",
    "canonical_form",
    "check_coherence",
    "diagonal_equivalent",
    "empirical_measure_on_measures",
    "empirical_row_measure",
    "equivalent",
    "exact_pattern_marginal",
    "find_column_transport",
    "is_pure",
    "is_tautological",
    "is_totally_pure",
    "joint_distribution",
    "load",
    "matrixdist_equal_upto",
    "purify",
    "purity_partition",
    "random_function",
    "reconstruct",
    "refine",
    "sample_atoms",
    "sample_matrix",
    "save",
    "section_distribution",
    "section_metric",
    "simplicity_diagnostic",
    "sjd_equal",
    "sjd_signature",
    "skew_equivalent",
    "symmetry_group",
]
