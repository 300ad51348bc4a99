"""
Best constants in the upper Haar estimate
=========================================

Lower bounds come from concrete coefficient families found by power
iteration; the upper bound is a closed form in the Carleson constant.
"""

from fractions import Fraction

from haarlab import SpaceDescriptor, full_grid
from haarlab.harness import GeneratorSpec, generate
from haarlab.type_constant import check_transfer, estimate_best_constant, l1_witness_ratio

# In L^2 the normalized Haar functions are orthonormal, so the constant is 1
# on every collection.
est = estimate_best_constant(full_grid(4), 2.0)
print(f"full_grid(4), p=2, scalar: lower {est.lower:.9f}, upper {est.upper:.4f}")

# In l^1 the picture changes: giving every interval its own coordinate makes
# the ratio grow with the depth, so l^1 has no Haar type p > 1.
for n in range(7):
    print(f"  n = {n}: l1 witness ratio {l1_witness_ratio(n, 2.0):.6f}")

E = generate(GeneratorSpec.random_budget(6, Fraction(2), seed=1))
for p in (1.25, 1.5, 2.0):
    est = estimate_best_constant(E, p, SpaceDescriptor.lq(1, 8))
    print(f"random collection, p={p}, l1(8): {est.lower:.4f} <= C <= {est.upper:.4f}")

# A dense collection is at least as bad as the full grid of depth n, up to
# the factor (1 - delta)^(1/p) lost to the trimmed support.
E = generate(GeneratorSpec.cascade(3, 4, Fraction(1, 50), seed=4))
rep = check_transfer(E, 3, Fraction(1, 8), 1.5, SpaceDescriptor.lq(1, 15))
print(
    f"\ntransfer at p=1.5: ratio on D_3 {rep.ratio_haar:.4f}, "
    f"transferred {rep.ratio_transferred:.4f}, factor {rep.factor:.4f}"
)
