from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from haarlab import CertificateViolation, CoefficientFamily, DyadicInterval, HaarlabError, IntervalCollection, full_grid, haar
from haarlab.carleson import condensation_search
from haarlab.gamlen_gaudet import (
    InfeasibleDelta,
    InsufficientCondensation,
    JointDistributionMismatch,
    build_system,
    corrupt_support,
    effective_delta,
    haar_patterns,
    transfer_coefficients,
    verify_joint_distribution,
    verify_system,
)
from haarlab.harness import GeneratorSpec, generate
from haarlab.synthesis import SpaceDescriptor

ROOT = DyadicInterval(0, 0)
HALF = DyadicInterval(1, 1)


def test_identity_system_reproduces_haar():
    E = full_grid(5)
    system = build_system(E, ROOT, 2, Fraction(1, 8))
    assert system.delta == Fraction(1, 8)
    for I, B in system.blocks.items():
        assert B == (I,)
        assert np.array_equal(system.functions[I].values, haar(I, system.resolution).values)
    assert system.support.measure == Fraction(7, 8)


def test_identity_joint_distribution():
    system = build_system(full_grid(8), ROOT, 3, Fraction(1, 16))
    assert system.delta == Fraction(1, 16)
    report = verify_joint_distribution(system)
    assert len(report.atoms) == 16
    assert all(m == Fraction(15, 16) / 16 for m in report.atoms.values())
    assert set(report.normalized.values()) == {Fraction(1, 16)}


def test_half_interval_example(half_interval_collection):
    E = half_interval_collection
    system = build_system(E, HALF, 1, Fraction(1, 4))
    assert system.blocks[ROOT] == (HALF,)
    assert system.blocks[DyadicInterval(1, 0)] == (DyadicInterval(2, 2),)
    assert system.blocks[DyadicInterval(1, 1)] == (DyadicInterval(2, 3),)
    verify_system(system, E)
    report = verify_joint_distribution(system)
    S = system.support.measure
    assert len(report.atoms) == 4 and all(m == S / 4 for m in report.atoms.values())
    assert S == Fraction(3, 4) * HALF.measure


def test_effective_delta_rounds_up():
    system = build_system(full_grid(6), ROOT, 3, Fraction(1, 16))
    assert system.requested_delta == Fraction(1, 16) and system.delta == Fraction(1, 8)
    # at resolution 3 the leaf target (1-δ)/2 must be an even number of eighths
    delta, cells = effective_delta(ROOT, 1, Fraction(1, 16), 3)
    assert delta == Fraction(1, 2) and cells == 2
    delta, cells = effective_delta(ROOT, 1, Fraction(1, 16), 6)
    assert delta == Fraction(1, 16) and cells == 30
    with pytest.raises(InfeasibleDelta):
        effective_delta(ROOT, 2, Fraction(1, 2), 2)


def test_insufficient_condensation():
    disjoint = IntervalCollection.from_pairs([(0, 0), (2, 0), (2, 3)])
    with pytest.raises(InsufficientCondensation):
        build_system(disjoint, ROOT, 1, Fraction(1, 4))


def test_argument_errors():
    E = full_grid(3)
    with pytest.raises(HaarlabError):
        build_system(E, DyadicInterval(5, 0), 1, Fraction(1, 4))
    with pytest.raises(HaarlabError):
        build_system(E, ROOT, 0, Fraction(1, 4))
    with pytest.raises(HaarlabError):
        build_system(E, ROOT, 1, Fraction(1))
    with pytest.raises(HaarlabError):
        build_system(E, ROOT, 1, Fraction(1, 4), resolution=2)


def test_corruption_is_detected():
    system = build_system(full_grid(5), ROOT, 2, Fraction(1, 8))
    for cell in (0, 5, 31):
        with pytest.raises(JointDistributionMismatch) as info:
            verify_joint_distribution(corrupt_support(system, cell))
        assert info.value.mismatches


def test_verify_system_names_failed_item():
    system = build_system(full_grid(5), ROOT, 2, Fraction(1, 8))
    broken = corrupt_support(system, 0)
    with pytest.raises(CertificateViolation) as info:
        verify_system(broken, full_grid(5))
    assert info.value.item == "S"


def test_haar_patterns_are_distinct():
    for n in range(4):
        pats = haar_patterns(n)
        assert len(pats) == 2 ** (n + 1) == len(set(pats))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 3), st.integers(0, 10_000))
def test_cascade_systems_verify(branching, seed):
    E = generate(GeneratorSpec.cascade(branching, 3, Fraction(1, 100), seed))
    witness = condensation_search(E, 2)
    try:
        system = build_system(E, witness.root, 2, Fraction(1, 4))
    except InsufficientCondensation:
        return
    verify_system(system, E)
    report = verify_joint_distribution(system)
    assert sum(report.atoms.values()) == system.support.measure


def test_transfer_identity_is_identity():
    system = build_system(full_grid(4), ROOT, 2, Fraction(1, 8))
    rng = np.random.default_rng(1)
    x = CoefficientFamily({I: rng.standard_normal(2) for I in full_grid(2)}, 2)
    y = transfer_coefficients(system, x, 1.5)
    assert y.support() == x.support()
    for I, v in x.items():
        assert np.allclose(y[I], v)


def test_transfer_half_interval(half_interval_collection):
    system = build_system(half_interval_collection, HALF, 1, Fraction(1, 4))
    y = transfer_coefficients(system, CoefficientFamily({ROOT: np.array([1.0])}, 1), 2)
    assert y[HALF][0] == pytest.approx(0.5**0.5)
    assert len(y) == 1


def test_transfer_zero_input():
    system = build_system(full_grid(3), ROOT, 1, Fraction(1, 4))
    y = transfer_coefficients(system, CoefficientFamily({}, 3), 2)
    assert len(y) == 0


def test_transfer_rejects_outside_index():
    system = build_system(full_grid(3), ROOT, 1, Fraction(1, 4))
    with pytest.raises(HaarlabError):
        transfer_coefficients(system, CoefficientFamily({DyadicInterval(2, 0): np.ones(1)}, 1), 2)


def test_transfer_inequality_half_interval(half_interval_collection):
    from haarlab.gamlen_gaudet import verify_transfer_inequality

    E = half_interval_collection
    system = build_system(E, HALF, 1, Fraction(1, 4))
    rng = np.random.default_rng(7)
    x = CoefficientFamily({I: rng.standard_normal(3) for I in full_grid(1)}, 3)
    rep = verify_transfer_inequality(system, E, x, 2.0, SpaceDescriptor.lq(1, 3))
    assert rep.haar_norm == pytest.approx(rep.block_norm_on_support, rel=1e-12)
    assert rep.block_norm_on_support <= rep.transferred_norm * (1 + 1e-9)
    assert rep.y_power_sum <= rep.coefficient_bound * (1 + 1e-9)
