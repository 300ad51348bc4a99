"""Gamlen-Gaudet block bases built from a densely packed collection.

Starting from a root ``K0`` whose ``n``-th generation nearly tiles it, each
``I`` in ``D_n`` gets a family ``B_I`` of pairwise disjoint members of ``E``:
``B_[0,1) = {K0}`` and the families for the two halves of ``I`` collect the
first-generation members below the left (resp. right) halves of the members
of ``B_I``.  The block functions ``k_I = Σ_{K ∈ B_I} h_K`` restricted to a
trimmed support ``S`` then have exactly the joint law of the Haar functions
``h_I, I ∈ D_n``.

Everything here is exact: sets are cell masks on a fixed dyadic grid and all
measures are :class:`DyadicRational`.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .carleson import generation_density
from .collection import IntervalCollection, full_grid
from .dyadic import (
    CellSet,
    CertificateViolation,
    DyadicInterval,
    DyadicRational,
    HaarlabError,
    StepFunction,
    as_fraction,
    haar,
)
from .synthesis import CoefficientFamily, SpaceDescriptor, VectorStepFunction, synthesize


class InsufficientCondensation(HaarlabError):
    pass


class InfeasibleDelta(HaarlabError):
    pass


class JointDistributionMismatch(CertificateViolation):
    def __init__(self, message: str, mismatches: list[dict]):
        super().__init__(message, None, "joint-distribution")
        self.mismatches = mismatches


@dataclass(frozen=True)
class GamlenGaudetSystem:
    root: DyadicInterval
    depth: int
    requested_delta: DyadicRational
    delta: DyadicRational  # effective value after rounding to the grid
    resolution: int
    blocks: dict[DyadicInterval, tuple[DyadicInterval, ...]]
    block_sets: dict[DyadicInterval, CellSet]
    trimmed_sets: dict[DyadicInterval, CellSet]
    support: CellSet
    functions: dict[DyadicInterval, StepFunction] = field(repr=False)

    @property
    def epsilon(self) -> Fraction:
        return self.delta.to_fraction() / (1 << (self.depth + 1))

    @property
    def index_set(self) -> list[DyadicInterval]:
        """``D_n`` in (level, index) order."""
        return list(self.blocks)

    def leaves(self) -> list[DyadicInterval]:
        return [I for I in self.blocks if I.level == self.depth]

    def to_json(self) -> dict:
        def runs(cs: CellSet) -> list:
            return cs.runs()

        return {
            "root": [self.root.level, self.root.index],
            "depth": self.depth,
            "requested_delta": str(self.requested_delta),
            "delta": str(self.delta),
            "resolution": self.resolution,
            "blocks": [
                {"index": [I.level, I.index], "intervals": [[K.level, K.index] for K in B]}
                for I, B in self.blocks.items()
            ],
            "block_sets": [
                {"index": [I.level, I.index], "runs": runs(cs)} for I, cs in self.block_sets.items()
            ],
            "trimmed_sets": [
                {"index": [I.level, I.index], "runs": runs(cs)} for I, cs in self.trimmed_sets.items()
            ],
            "support": {"resolution": self.resolution, "runs": runs(self.support)},
        }


def _even_floor(value: Fraction) -> int:
    n = value.numerator // value.denominator
    return n - (n % 2)


def effective_delta(root: DyadicInterval, depth: int, delta, resolution: int) -> tuple[DyadicRational, int]:
    """Smallest ``δ' ≥ δ`` whose leaf target ``(1-δ')2^-n|K0|`` is an even number of cells.

    Returns ``δ'`` and the target size in cells.
    """
    delta = as_fraction(delta)
    leaf_cells = Fraction(1 << (resolution - root.level - depth))  # 2^-n |K0| in cells
    if leaf_cells.denominator != 1 or leaf_cells < 1:
        raise InfeasibleDelta(f"resolution {resolution} is too coarse for depth {depth} below {root}")
    target = _even_floor((1 - delta) * leaf_cells)
    if target <= 0:
        raise InfeasibleDelta(f"δ={delta} leaves no room for an even number of cells at resolution {resolution}")
    eff = 1 - Fraction(target) / leaf_cells
    return DyadicRational.from_value(eff), target


def build_system(
    E: IntervalCollection,
    root: DyadicInterval,
    depth: int,
    delta,
    resolution: int | None = None,
    verify: bool = True,
) -> GamlenGaudetSystem:
    """Construct the block system at ``depth`` below ``root`` and verify it.

    ``delta`` must be a dyadic rational in ``(0, 1)``; it is raised to the next
    value compatible with an exact symmetric trim at the working resolution
    (``max level below root + 1`` unless given).
    """
    if root not in E:
        raise HaarlabError(f"root {root} is not a member of the collection")
    if depth < 1:
        raise HaarlabError("depth must be at least 1")
    delta = DyadicRational.from_value(as_fraction(delta))
    if not 0 < delta < 1:
        raise HaarlabError(f"delta must lie in (0, 1), got {delta}")

    local = E.restrict(root)
    eps = delta.to_fraction() / (1 << (depth + 1))
    density = generation_density(local, root, depth)
    if density < 1 - eps:
        raise InsufficientCondensation(
            f"generation {depth} below {root} covers {density.to_fraction()} < 1 - ε = {1 - eps}"
        )
    if resolution is None:
        resolution = local.max_level + 1
    if resolution < local.max_level + 1:
        raise HaarlabError("resolution must exceed the finest level below the root")
    eff_delta, target_cells = effective_delta(root, depth, delta, resolution)

    children = local.children_map
    index_set = list(full_grid(depth))
    blocks: dict[DyadicInterval, tuple[DyadicInterval, ...]] = {DyadicInterval(0, 0): (root,)}
    for I in index_set:
        if I.level == depth:
            continue
        left, right = [], []
        for K in blocks[I]:
            lh = K.left_half()
            for J in children[K]:
                (left if lh.contains(J) else right).append(J)
        blocks[I.left_half()] = tuple(sorted(left))
        blocks[I.right_half()] = tuple(sorted(right))
    blocks = {I: blocks[I] for I in index_set}

    block_sets = {I: CellSet.from_intervals(B, resolution) for I, B in blocks.items()}
    functions = {I: _block_function(B, resolution) for I, B in blocks.items()}

    leaf_sets = {I: _trim_leaf(blocks[I], resolution, target_cells) for I in index_set if I.level == depth}
    support = CellSet.empty(resolution)
    for A in leaf_sets.values():
        support = support | A
    trimmed = {I: leaf_sets[I] if I.level == depth else block_sets[I] & support for I in index_set}

    system = GamlenGaudetSystem(
        root=root,
        depth=depth,
        requested_delta=delta,
        delta=eff_delta,
        resolution=resolution,
        blocks=blocks,
        block_sets=block_sets,
        trimmed_sets=trimmed,
        support=support,
        functions=functions,
    )
    if verify:
        verify_system(system, E)
    return system


def _block_function(block: tuple[DyadicInterval, ...], resolution: int) -> StepFunction:
    values = np.zeros(1 << resolution, dtype=np.int64)
    for K in block:
        values = values + haar(K, resolution).values
    return StepFunction(resolution, values)


def _trim_leaf(block: tuple[DyadicInterval, ...], resolution: int, target_cells: int) -> CellSet:
    """Remove mirrored cell pairs, smallest members first, until ``target_cells`` remain.

    A cell removed from the left half of ``K`` is matched by the cell at the
    same offset in the right half, so ``k_I`` stays symmetric on what is left.
    """
    mask = np.zeros(1 << resolution, dtype=bool)
    for K in block:
        lo, hi = K.cell_range(resolution)
        mask[lo:hi] = True
    excess = int(mask.sum()) - target_cells
    if excess < 0 or excess % 2:
        raise CertificateViolation(f"leaf block holds {int(mask.sum())} cells, cannot trim to {target_cells}")
    for K in sorted(block, key=lambda K: (-K.level, K.index)):
        if excess == 0:
            break
        lo, hi = K.cell_range(resolution)
        size = hi - lo
        if size <= excess:
            mask[lo:hi] = False
            excess -= size
        else:
            half = size // 2
            pairs = excess // 2
            mask[lo + half - pairs : lo + half] = False
            mask[hi - pairs : hi] = False
            excess = 0
    return CellSet(resolution, mask)


def verify_system(system: GamlenGaudetSystem, E: IntervalCollection | None = None) -> dict[str, bool]:
    """Check properties (i)-(v), (a), (b) and the support identities; raise on the first failure."""
    root, n = system.root, system.depth
    K0 = root.measure.to_fraction()
    res = system.resolution
    delta = system.delta.to_fraction()
    eps = system.epsilon
    index_set = system.index_set

    def fail(item: str, message: str, I: DyadicInterval | None = None):
        raise CertificateViolation(f"({item}) {message}", I, item)

    for I, B in system.blocks.items():
        for K in B:
            if not root.contains(K) or (E is not None and K not in E):
                fail("i", f"{K} in B_{I} is not a member inside the root", I)
        ordered = sorted(B, key=lambda K: K.cell_range(res))
        for a, b in zip(ordered, ordered[1:]):
            if a.cell_range(res)[1] > b.cell_range(res)[0]:
                fail("ii", f"{a} and {b} in B_{I} overlap", I)

    sets = system.block_sets
    for I, J in itertools.combinations(index_set, 2):
        disjoint_idx = not (I.contains(J) or J.contains(I))
        if sets[I].isdisjoint(sets[J]) != disjoint_idx:
            fail("iii", f"disjointness of B_{I}, B_{J} differs from that of {I}, {J}", I)
        for A, B in ((I, J), (J, I)):
            if sets[A].issubset(sets[B]) != B.contains(A):
                fail("iii", f"inclusion of B_{A} in B_{B} differs from that of {A} in {B}", A)

    for I in index_set:
        if I.level == n:
            continue
        k = system.functions[I]
        if not sets[I.left_half()].issubset(k.level_set(1)):
            fail("iv", f"B of the left half of {I} is not inside {{k_I = 1}}", I)
        if not sets[I.right_half()].issubset(k.level_set(-1)):
            fail("iv", f"B of the right half of {I} is not inside {{k_I = -1}}", I)

    for I in index_set:
        size = sets[I].measure.to_fraction()
        upper = K0 / (1 << I.level)
        if not (upper - 2 * eps * K0 <= size <= upper):
            fail("v", f"|B_{I}| = {size} outside [{upper - 2 * eps * K0}, {upper}]", I)

    leaf_target = (1 - delta) * K0 / (1 << n)
    for I in system.leaves():
        A = system.trimmed_sets[I]
        if not A.issubset(sets[I]):
            fail("a", f"A_{I} is not inside B_{I}", I)
        if A.measure != leaf_target:
            fail("a", f"|A_{I}| = {A.measure} differs from {leaf_target}", I)
        k = system.functions[I]
        if (A & k.level_set(1)).measure != (A & k.level_set(-1)).measure:
            fail("b", f"k_{I} is not symmetric on A_{I}", I)

    if system.support.measure != (1 - delta) * K0:
        fail("S", f"|S| = {system.support.measure} differs from {(1 - delta) * K0}")
    for I in index_set:
        if I.level < n and system.trimmed_sets[I] != sets[I] & system.support:
            fail("S", f"A_{I} differs from B_{I} ∩ S", I)
    return {item: True for item in ("i", "ii", "iii", "iv", "v", "a", "b", "S")}


@dataclass(frozen=True)
class JointDistributionReport:
    atoms: dict[tuple[int, ...], DyadicRational]  # sign pattern -> measure inside S
    expected: DyadicRational
    support_measure: DyadicRational

    @property
    def normalized(self) -> dict[tuple[int, ...], Fraction]:
        s = self.support_measure.to_fraction()
        return {pat: m.to_fraction() / s for pat, m in self.atoms.items()}


def haar_patterns(depth: int) -> list[tuple[int, ...]]:
    """Value patterns of ``(h_I)_{I ∈ D_n}`` on the ``2**(n+1)`` atoms of ``[0,1)``."""
    index_set = list(full_grid(depth))
    res = depth + 1
    table = np.stack([haar(I, res).values for I in index_set])
    return [tuple(int(v) for v in table[:, c]) for c in range(1 << res)]


def verify_joint_distribution(system: GamlenGaudetSystem, support: CellSet | None = None) -> JointDistributionReport:
    """Exact comparison of the law of ``(k_I)`` on ``S`` with the law of ``(h_I)`` on ``[0,1)``.

    Every Haar sign pattern must carry measure ``2^-(n+1) |S|`` inside ``S``
    and no other pattern may occur; otherwise :class:`JointDistributionMismatch`
    lists the offending patterns.
    """
    S = system.support if support is None else support
    res = max(system.resolution, S.resolution)
    mask = S.refine(res).mask
    index_set = system.index_set
    table = np.stack([system.functions[I].refine(res).values for I in index_set])[:, mask]
    counts = Counter(tuple(int(v) for v in table[:, c]) for c in range(table.shape[1]))

    n_atoms = 1 << (system.depth + 1)
    expected = Fraction(int(mask.sum()), n_atoms)  # cells per atom
    mismatches = []
    for pat in haar_patterns(system.depth):
        got = counts.pop(pat, 0)
        if got != expected:
            mismatches.append({"pattern": list(pat), "cells": got, "expected_cells": str(expected)})
    for pat, got in counts.items():
        mismatches.append({"pattern": list(pat), "cells": got, "expected_cells": "0"})
    if mismatches:
        raise JointDistributionMismatch(f"{len(mismatches)} atom(s) differ from the Haar law", mismatches)
    atoms = {pat: DyadicRational(int(expected), res) for pat in haar_patterns(system.depth)}
    return JointDistributionReport(atoms, DyadicRational(int(expected), res), DyadicRational(int(mask.sum()), res))


def corrupt_support(system: GamlenGaudetSystem, cell: int) -> GamlenGaudetSystem:
    """Copy of the system with one cell of ``S`` flipped (for negative tests)."""
    mask = system.support.mask.copy()
    mask[cell] = not mask[cell]
    return replace(system, support=CellSet(system.resolution, mask))


def transfer_coefficients(system: GamlenGaudetSystem, x: CoefficientFamily, p: float) -> CoefficientFamily:
    """``y_K = (|K|/|I|)**(1/p) x_I`` for every ``K ∈ B_I``; zero off the blocks."""
    out = {}
    for I, v in x.items():
        if I not in system.blocks:
            raise HaarlabError(f"coefficient at {I} lies outside D_{system.depth}")
        for K in system.blocks[I]:
            out[K] = 2.0 ** ((I.level - K.level) / p) * v
    return CoefficientFamily(out, x.dim)


@dataclass(frozen=True)
class TransferReport:
    haar_norm: float  # ‖Σ_{D_n} x_I h_I/|I|^{1/p}‖
    block_norm_on_support: float  # |S|^{-1/p} ‖Σ k_I x_I/|I|^{1/p}‖_{L^p(S)}
    transferred_norm: float  # |S|^{-1/p} ‖Σ_E y_K h_K/|K|^{1/p}‖
    y_power_sum: float  # Σ ‖y_K‖^p
    weighted_x_power_sum: float  # Σ |B_I|/|I| ‖x_I‖^p
    x_power_sum: float
    coefficient_bound: float  # |S| (1-δ)^{-1} Σ ‖x_I‖^p

    def to_json(self) -> dict:
        return dict(self.__dict__)


def verify_transfer_inequality(
    system: GamlenGaudetSystem,
    E: IntervalCollection,
    x: CoefficientFamily,
    p: float,
    space: SpaceDescriptor,
    rtol: float = 1e-9,
) -> TransferReport:
    """Evaluate both sides of the transfer estimate and raise if any link fails."""
    res = system.resolution
    index_set = system.index_set
    haar_side = synthesize(full_grid(system.depth), x, p).norm(p, space)

    block_values = np.zeros((1 << res, x.dim))
    for I, v in x.items():
        k = system.functions[I].values.astype(float)
        block_values += np.outer(k, v) * 2.0 ** (I.level / p)
    S_measure = float(system.support.measure)
    on_support = VectorStepFunction(res, block_values).norm(p, space, on=system.support) / S_measure ** (1 / p)

    y = transfer_coefficients(system, x, p)
    full = synthesize(E, y, p).norm(p, space) / S_measure ** (1 / p) if len(y) else 0.0

    norms_x = {I: float(space.norm(v[None, :])[0]) for I, v in x.items()}
    y_sum = y.lp_norm(p, space) ** p if len(y) else 0.0
    weighted = sum(
        float(system.block_sets[I].measure) * (1 << I.level) * norms_x[I] ** p for I in index_set if I in x
    )
    x_sum = sum(v**p for v in norms_x.values())
    bound = S_measure / (1 - float(system.delta)) * x_sum

    report = TransferReport(haar_side, on_support, full, y_sum, weighted, x_sum, bound)
    scale = max(haar_side, 1e-300)
    if abs(haar_side - on_support) > rtol * scale:
        raise CertificateViolation(f"law identity fails: {haar_side} vs {on_support}", None, "transfer")
    if on_support > full * (1 + rtol) + 1e-300:
        raise CertificateViolation(f"restriction to S increased the norm: {on_support} > {full}", None, "transfer")
    if abs(y_sum - weighted) > rtol * max(weighted, 1e-300):
        raise CertificateViolation(f"Σ‖y‖^p = {y_sum} differs from Σ|B_I|/|I|‖x_I‖^p = {weighted}", None, "transfer")
    if y_sum > bound * (1 + rtol):
        raise CertificateViolation(f"Σ‖y‖^p = {y_sum} exceeds {bound}", None, "transfer")
    return report
