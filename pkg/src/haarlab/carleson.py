"""Carleson constants, generations, almost-disjoint decomposition and condensation.

All measures are handled as integers in units of ``2**-L`` where ``L`` is the
finest level of the collection at hand, and are returned as exact
:class:`DyadicRational` values.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .collection import EmptyCollectionError, IntervalCollection
from .dyadic import CellSet, CertificateViolation, DyadicInterval, DyadicRational, HaarlabError, as_fraction


def _require_nonempty(E: IntervalCollection, what: str = "collection") -> None:
    if not E:
        raise EmptyCollectionError(f"empty {what}")


def _mass_units(E: IntervalCollection) -> dict[DyadicInterval, int]:
    """Post-order accumulation of ``Σ_{J ⊆ I} |J|`` for every member, in units of ``2**-max_level``."""
    units = E.measure_units
    parents = E.parent_map
    mass = dict(units)
    for J in reversed(E.intervals):
        parent = parents[J]
        if parent is not None:
            mass[parent] += mass[J]
    return mass


def local_mass(E: IntervalCollection, interval: DyadicInterval) -> DyadicRational:
    """``Σ |J|`` over members ``J ⊆ interval``; ``interval`` need not belong to ``E``."""
    total = DyadicRational(0)
    for J in E:
        if interval.contains(J):
            total = total + J.measure
    return total


@dataclass(frozen=True)
class CarlesonReport:
    constant: DyadicRational
    witness: DyadicInterval
    local_masses: dict[DyadicInterval, DyadicRational]


def carleson_constant(E: IntervalCollection) -> CarlesonReport:
    """Exact Carleson constant with the smallest ``(level, index)`` member attaining it."""
    _require_nonempty(E)
    top = E.max_level
    mass = _mass_units(E)
    best = None
    best_ratio = -1
    for I in E:  # sorted, so strict comparison keeps the smallest tie
        ratio = mass[I] << I.level
        if ratio > best_ratio:
            best, best_ratio = I, ratio
    masses = {I: DyadicRational(m, top) for I, m in mass.items()}
    return CarlesonReport(DyadicRational(best_ratio, top), best, masses)


@dataclass(frozen=True)
class GenerationDecomposition:
    generations: list[IntervalCollection]

    def __len__(self) -> int:
        return len(self.generations)

    def __getitem__(self, k: int) -> IntervalCollection:
        if k < len(self.generations):
            return self.generations[k]
        return IntervalCollection()

    def union(self) -> IntervalCollection:
        out = IntervalCollection()
        for g in self.generations:
            out = out | g
        return out


def generations(E: IntervalCollection) -> GenerationDecomposition:
    """Peel maximal elements off ``E`` repeatedly.

    In a dyadic tree the strict ancestors of a member form a chain, so the
    member belongs to ``G_k`` exactly when ``k`` members strictly contain it.
    """
    _require_nonempty(E)
    buckets: dict[int, list[DyadicInterval]] = defaultdict(list)
    for J, d in E.depth_map.items():
        buckets[d].append(J)
    return GenerationDecomposition([IntervalCollection(buckets[k]) for k in range(max(buckets) + 1)])


def local_generations(interval: DyadicInterval, E: IntervalCollection) -> GenerationDecomposition:
    restricted = E.restrict(interval)
    if not restricted:
        raise EmptyCollectionError(f"no member of the collection lies inside {interval}")
    return generations(restricted)


def choose_M(carleson) -> int:
    """Largest integer strictly smaller than ``4 * carleson + 1``."""
    c = as_fraction(carleson)
    if c < 1:
        raise HaarlabError(f"Carleson constant must be at least 1, got {c}")
    return math.ceil(4 * c + 1) - 1


@dataclass(frozen=True)
class PartBound:
    """Verified masses for one member ``I`` of a part."""

    child_mass: DyadicRational  # Σ over the first generation of the part below I
    local_mass: DyadicRational  # Σ over all members of the part inside I
    measure: DyadicRational

    @property
    def child_ok(self) -> bool:
        return 2 * self.child_mass <= self.measure

    @property
    def local_ok(self) -> bool:
        return self.local_mass <= 2 * self.measure


@dataclass(frozen=True)
class AlmostDisjointCover:
    carleson: DyadicRational
    M: int
    parts: list[IntervalCollection]
    certificate: list[dict[DyadicInterval, PartBound]]

    def violations(self) -> list[dict]:
        out = []
        for i, cert in enumerate(self.certificate):
            for I, bound in cert.items():
                if not bound.child_ok:
                    out.append({"part": i, "interval": [I.level, I.index], "inequality": "children"})
                if not bound.local_ok:
                    out.append({"part": i, "interval": [I.level, I.index], "inequality": "local"})
        return out

    def to_json(self) -> dict:
        return {
            "carleson": str(self.carleson),
            "M": self.M,
            "parts": [[[I.level, I.index] for I in part] for part in self.parts],
            "violations": self.violations(),
        }


def part_certificate(part: IntervalCollection) -> dict[DyadicInterval, PartBound]:
    """Exact masses behind the two almost-disjointness inequalities for each member."""
    if not part:
        return {}
    top = part.max_level
    units = part.measure_units
    mass = _mass_units(part)
    children = part.children_map
    cert = {}
    for I in part:
        child_units = sum(units[J] for J in children[I])
        cert[I] = PartBound(DyadicRational(child_units, top), DyadicRational(mass[I], top), I.measure)
    return cert


def _check_part(part: IntervalCollection, cert: dict[DyadicInterval, PartBound], label: str) -> None:
    for I, bound in cert.items():
        if not bound.child_ok:
            raise CertificateViolation(
                f"{label}: first generation below {I} has mass {bound.child_mass} > |I|/2", I, "children"
            )
        if not bound.local_ok:
            raise CertificateViolation(f"{label}: mass inside {I} is {bound.local_mass} > 2|I|", I, "local")


def almost_disjoint_decomposition(E: IntervalCollection) -> AlmostDisjointCover:
    """Split ``E`` into ``M`` parts, part ``i`` holding generations ``i, i+M, i+2M, ...``.

    Both inequalities are checked exactly for every member of every part; a
    failure raises :class:`CertificateViolation`.  Empty parts are kept so that
    part ``i`` always corresponds to residue ``i``.
    """
    report = carleson_constant(E)
    M = choose_M(report.constant)
    buckets: list[list[DyadicInterval]] = [[] for _ in range(M)]
    for J, d in E.depth_map.items():
        buckets[d % M].append(J)
    parts = [IntervalCollection(b) for b in buckets]
    certificate = []
    for i, part in enumerate(parts):
        cert = part_certificate(part)
        _check_part(part, cert, f"part {i}")
        certificate.append(cert)
    return AlmostDisjointCover(report.constant, M, parts, certificate)


@dataclass(frozen=True)
class ChainStructure:
    """Ancestor chains and fringe sets of an almost-disjoint collection.

    ``chains[K]`` is ``(K, parent, grandparent, ..., root)`` within the part,
    so ``chains[K][l]`` is the ``l``-th ancestor and ``len(chains[K]) - 1``
    is the chain length ``n(K)``.
    """

    part: IntervalCollection
    chains: dict[DyadicInterval, tuple[DyadicInterval, ...]]
    fringe_measures: dict[DyadicInterval, DyadicRational]
    decay: dict[tuple[DyadicInterval, int], DyadicRational] = field(repr=False)

    def chain_length(self, K: DyadicInterval) -> int:
        return len(self.chains[K]) - 1

    def fringe(self, K: DyadicInterval) -> CellSet:
        """``K`` minus its children in the part, at the part's finest resolution."""
        res = self.part.max_level
        return CellSet.from_intervals([K], res) - CellSet.from_intervals(self.part.children_map[K], res)


def chain_structure(part: IntervalCollection) -> ChainStructure:
    """Build ancestor chains and verify fringe bounds, disjointness and chain decay exactly."""
    if not part:
        return ChainStructure(part, {}, {}, {})
    cert = part_certificate(part)
    for I, bound in cert.items():
        if not (bound.child_ok and bound.local_ok):
            raise HaarlabError(f"collection is not almost disjoint at {I}")

    top = part.max_level
    units = part.measure_units
    parents = part.parent_map
    children = part.children_map

    chains: dict[DyadicInterval, tuple[DyadicInterval, ...]] = {}
    for K in part:  # parents first
        parent = parents[K]
        chains[K] = (K,) if parent is None else (K,) + chains[parent]
    roots = {K for K in part if parents[K] is None}
    for K, chain in chains.items():
        if chain[-1] not in roots:
            raise CertificateViolation(f"chain of {K} does not end in a maximal member", K, "chain")

    fringe = {}
    for K in part:
        f_units = units[K] - sum(units[J] for J in children[K])
        if not (units[K] <= 2 * f_units and f_units <= units[K]):
            raise CertificateViolation(f"fringe of {K} has measure {DyadicRational(f_units, top)}", K, "fringe")
        fringe[K] = DyadicRational(f_units, top)

    # multiplicity of each cell among the fringes: Σ_K (1_K - Σ_{children J} 1_J)
    diff = np.zeros((1 << top) + 1, dtype=np.int64)
    for K in part:
        lo, hi = K.cell_range(top)
        diff[lo] += 1
        diff[hi] -= 1
        for J in children[K]:
            jlo, jhi = J.cell_range(top)
            diff[jlo] -= 1
            diff[jhi] += 1
    multiplicity = np.cumsum(diff[:-1])
    if multiplicity.min() < 0 or multiplicity.max() > 1:
        raise CertificateViolation("fringe sets are not pairwise disjoint", None, "fringe")

    decay_units: dict[tuple[DyadicInterval, int], int] = defaultdict(int)
    for K, chain in chains.items():
        for l, I in enumerate(chain):
            decay_units[(I, l)] += units[K]
    decay = {}
    for (I, l), u in decay_units.items():
        # Σ_{K: l-th ancestor = I} |K| <= 2^-l |I|, i.e. u * 2^l <= units[I]
        if (u << l) > units[I]:
            raise CertificateViolation(f"chain decay fails at {I}, l={l}", I, "decay")
        decay[(I, l)] = DyadicRational(u, top)
    return ChainStructure(part, chains, fringe, decay)


@dataclass(frozen=True)
class CondensationWitness:
    root: DyadicInterval
    depth: int
    density: DyadicRational


def generation_masses(E: IntervalCollection, depth: int) -> dict[DyadicInterval, int]:
    """For each member ``K``, the mass of ``G_depth(K, E)`` in units of ``2**-max_level``."""
    units = E.measure_units
    parents = E.parent_map
    out = {K: 0 for K in E}
    for J in E:
        anc = J
        for _ in range(depth):
            anc = parents[anc]
            if anc is None:
                break
        if anc is not None:
            out[anc] += units[J]
    return out


def generation_density(E: IntervalCollection, root: DyadicInterval, depth: int) -> DyadicRational:
    """``Σ_{J ∈ G_depth(root, E)} |J| / |root|``."""
    restricted = E.restrict(root)
    if not restricted or root not in restricted:
        return DyadicRational(0)
    masses = generation_masses(restricted, depth)
    return DyadicRational(masses[root] << root.level, restricted.max_level)


def condensation_search(E: IntervalCollection, depth: int) -> CondensationWitness:
    """Member whose generation ``depth`` covers the largest fraction of it."""
    _require_nonempty(E)
    if depth < 1:
        raise HaarlabError("depth must be at least 1")
    masses = generation_masses(E, depth)
    best, best_ratio = None, -1
    for K in E:
        ratio = masses[K] << K.level
        if ratio > best_ratio:
            best, best_ratio = K, ratio
    return CondensationWitness(best, depth, DyadicRational(best_ratio, E.max_level))


def lemma1_upper_bound(carleson, p: float) -> float:
    """``(1 - 2**(-1/p))**-1 * M**(1 - 1/p)`` with ``M = choose_M(carleson)``."""
    if not p > 1:
        raise HaarlabError(f"p must exceed 1, got {p}")
    M = choose_M(carleson)
    return M ** (1.0 - 1.0 / p) / (1.0 - 2.0 ** (-1.0 / p))

