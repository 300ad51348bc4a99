"""
Copying the Haar system into a dense collection
===============================================

If some member K0 has an n-th generation that almost fills it, sums of
Haar functions over blocks of that generation reproduce the joint law of
the first n levels of the Haar system on a slightly smaller set S.
"""

from fractions import Fraction

import numpy as np

from haarlab.carleson import condensation_search
from haarlab.gamlen_gaudet import (
    JointDistributionMismatch,
    build_system,
    corrupt_support,
    verify_joint_distribution,
)
from haarlab.harness import GeneratorSpec, generate

E = generate(GeneratorSpec.cascade(3, 4, Fraction(1, 50), seed=4))
depth = 3
w = condensation_search(E, depth)
print(f"{len(E)} intervals; generation {depth} below {w.root} covers {w.density.to_fraction()} of it")

system = build_system(E, w.root, depth, Fraction(1, 8))
print(f"effective delta {system.delta.to_fraction()}, |S| = {system.support.measure.to_fraction()}")

# Blocks get finer as the index interval shrinks.
for I, B in system.blocks.items():
    print(f"  B{I}: {len(B):3d} members, measure {system.block_sets[I].measure.to_fraction()}")

# Each of the 2^(n+1) sign patterns of (h_I) occurs on exactly |S| / 2^(n+1) of S.
report = verify_joint_distribution(system)
print(f"\n{len(report.atoms)} atoms, each of measure {report.expected.to_fraction()}")

# Flipping a single cell of S breaks the law.
cell = int(np.flatnonzero(system.support.mask)[0])
try:
    verify_joint_distribution(corrupt_support(system, cell))
except JointDistributionMismatch as exc:
    print("corrupted support:", exc)
