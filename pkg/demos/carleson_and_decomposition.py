"""
Carleson constants and almost-disjoint parts
============================================

How densely a collection of dyadic intervals packs inside its own members,
and how a dense collection is split into a bounded number of sparse ones.
"""

from fractions import Fraction

from haarlab import (
    DyadicInterval,
    IntervalCollection,
    almost_disjoint_decomposition,
    carleson_constant,
    chain_structure,
    full_grid,
)
from haarlab.harness import GeneratorSpec, generate

# The full grid of depth n is as dense as it gets: every level contributes
# the whole of [0,1), so the constant is n + 1.
for n in range(5):
    rep = carleson_constant(full_grid(n))
    print(f"full_grid({n}): constant {rep.constant.to_fraction()}, witness {rep.witness}")

# A chain [0,1) > [0,1/2) > [0,1/4) > ... adds a geometric series.
chain = IntervalCollection(DyadicInterval(j, 0) for j in range(11))
print("chain of length 10:", carleson_constant(chain).constant.to_fraction())

# Splitting by generation depth modulo M gives parts in which every
# interval's immediate descendants cover at most half of it.
cover = almost_disjoint_decomposition(full_grid(6))
print(f"\nfull_grid(6): M = {cover.M}, non-empty parts = {sum(1 for part in cover.parts if part)}")

E = generate(GeneratorSpec.random_budget(10, Fraction(5, 4), seed=3))
cover = almost_disjoint_decomposition(E)
print(f"random collection: {len(E)} intervals, constant {cover.carleson.to_fraction()}, M = {cover.M}")
worst = max(
    (bound.child_mass / bound.measure for cert in cover.certificate for bound in cert.values()),
    default=Fraction(0),
)
# With fewer than M generations every part is a single generation, hence
# pairwise disjoint, and the ratio below is 0.
print("largest child mass ratio over all parts:", worst)

# Inside a part, chains of ancestors shrink geometrically: the intervals
# whose l-th ancestor is I have total measure at most 2^-l |I|.  A long
# chain of nested intervals shows it best: part 0 keeps every M-th level.
long_chain = IntervalCollection(DyadicInterval(j, 0) for j in range(21))
cover = almost_disjoint_decomposition(long_chain)
cs = chain_structure(cover.parts[0])
top = DyadicInterval(0, 0)
print(f"\nchain of length 20: M = {cover.M}, part 0 = {' '.join(map(str, cover.parts[0]))}")
for l in range(3):
    print(f"  l = {l}: mass {cs.decay[(top, l)].to_fraction()}, bound {Fraction(1, 2**l)}")
