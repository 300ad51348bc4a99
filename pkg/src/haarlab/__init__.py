"""Exact Carleson-constant machinery, Gamlen-Gaudet block bases and Haar-type constant estimates."""

from .carleson import (
    AlmostDisjointCover,
    CarlesonReport,
    ChainStructure,
    CondensationWitness,
    GenerationDecomposition,
    almost_disjoint_decomposition,
    carleson_constant,
    chain_structure,
    choose_M,
    condensation_search,
    generation_density,
    generations,
    lemma1_upper_bound,
    local_generations,
    local_mass,
)
from .collection import EmptyCollectionError, IntervalCollection, full_grid
from .dyadic import (
    CellSet,
    CertificateViolation,
    DyadicInterval,
    DyadicRational,
    HaarlabError,
    Relation,
    StepFunction,
    haar,
    interval_relations,
)
from .synthesis import CoefficientFamily, SpaceDescriptor, VectorStepFunction, rayleigh_ratio, synthesize

__version__ = "0.1.0"

__all__ = [
    "almost_disjoint_decomposition",
    "AlmostDisjointCover",
    "carleson_constant",
    "CarlesonReport",
    "CellSet",
    "CertificateViolation",
    "chain_structure",
    "ChainStructure",
    "choose_M",
    "CoefficientFamily",
    "condensation_search",
    "CondensationWitness",
    "DyadicInterval",
    "DyadicRational",
    "EmptyCollectionError",
    "full_grid",
    "generation_density",
    "GenerationDecomposition",
    "generations",
    "haar",
    "HaarlabError",
    "interval_relations",
    "IntervalCollection",
    "lemma1_upper_bound",
    "local_generations",
    "local_mass",
    "rayleigh_ratio",
    "Relation",
    "SpaceDescriptor",
    "StepFunction",
    "synthesize",
    "VectorStepFunction",
]

