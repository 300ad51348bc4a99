import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from haarlab import (
    DyadicInterval,
    EmptyCollectionError,
    HaarlabError,
    IntervalCollection,
    almost_disjoint_decomposition,
    carleson_constant,
    chain_structure,
    choose_M,
    condensation_search,
    full_grid,
    generations,
    lemma1_upper_bound,
    local_generations,
    local_mass,
)

from strategies import collections, intervals


def endpoints(I):
    return Fraction(I.index, 2**I.level), Fraction(I.index + 1, 2**I.level)


def brute_mass(E, I):
    a, b = endpoints(I)
    total = Fraction(0)
    for J in E:
        c, d = endpoints(J)
        if a <= c and d <= b:
            total += d - c
    return total


def brute_carleson(E):
    return max(brute_mass(E, I) / (endpoints(I)[1] - endpoints(I)[0]) for I in E)


def peel(E):
    """Generations by repeatedly removing maximal elements, straight from the definition."""
    rest = set(E)
    out = []
    while rest:
        maximal = {
            I for I in rest if not any(J != I and endpoints(J)[0] <= endpoints(I)[0] and endpoints(I)[1] <= endpoints(J)[1] for J in rest)
        }
        out.append(maximal)
        rest -= maximal
    return out


def test_local_mass_examples():
    E = full_grid(2)
    assert local_mass(E, DyadicInterval(0, 0)) == 3
    assert local_mass(IntervalCollection([DyadicInterval(0, 0)]), DyadicInterval(0, 0)) == 1
    assert local_mass(E, DyadicInterval(1, 0)) == 1


@given(collections())
def test_local_masses_match_brute_force(E):
    report = carleson_constant(E)
    for I in E:
        assert report.local_masses[I] == brute_mass(E, I)


def test_full_grid_constant_matches_oracle():
    for n in range(7):
        report = carleson_constant(full_grid(n))
        assert report.constant == n + 1 == brute_carleson(full_grid(n))
        assert report.witness == DyadicInterval(0, 0)


def test_disjoint_family_constant_is_one():
    E = IntervalCollection.from_pairs([(2, 0), (3, 2), (1, 1)])
    assert carleson_constant(E).constant == 1


@pytest.mark.parametrize("n", [1, 4, 10])
def test_chain_constant(n):
    E = IntervalCollection(DyadicInterval(j, 0) for j in range(n + 1))
    report = carleson_constant(E)
    # closed form of the geometric sum, attained at the top
    assert report.constant == 2 - Fraction(1, 2**n) == brute_carleson(E)
    assert report.witness == DyadicInterval(0, 0)


def test_empty_collection_rejected():
    with pytest.raises(EmptyCollectionError):
        carleson_constant(IntervalCollection())
    with pytest.raises(EmptyCollectionError):
        generations(IntervalCollection())


@given(collections())
def test_report_invariants(E):
    report = carleson_constant(E)
    assert report.constant >= 1
    assert report.constant == report.local_masses[report.witness] / report.witness.measure
    assert report.constant == brute_carleson(E)


@given(collections(), collections())
def test_monotone_under_inclusion(E, F):
    assert carleson_constant(E).constant <= carleson_constant(E | F).constant


@given(collections(max_level=4), intervals(max_level=3))
def test_scaling_covariance(E, I):
    restricted = E.restrict(I)
    if not restricted:
        return
    shifted = IntervalCollection(
        DyadicInterval(J.level - I.level, J.index - (I.index << (J.level - I.level))) for J in restricted
    )
    assert carleson_constant(shifted).constant == carleson_constant(restricted).constant


def test_generation_examples():
    gens = generations(full_grid(2))
    assert [set(g) for g in gens.generations] == [set(IntervalCollection(DyadicInterval(k, i) for i in range(2**k))) for k in range(3)]
    disjoint = IntervalCollection.from_pairs([(2, 0), (2, 3)])
    assert len(generations(disjoint)) == 1
    gens = generations(IntervalCollection.from_pairs([(0, 0), (2, 0)]))
    assert list(gens[0]) == [DyadicInterval(0, 0)] and list(gens[1]) == [DyadicInterval(2, 0)]


@given(collections())
def test_generations_match_peeling(E):
    gens = generations(E)
    assert [set(g) for g in gens.generations] == peel(E)
    assert gens.union() == E


def test_local_generations():
    E = full_grid(2)
    assert local_generations(DyadicInterval(0, 0), E).generations == generations(E).generations
    gens = local_generations(DyadicInterval(1, 0), E)
    assert list(gens[0]) == [DyadicInterval(1, 0)]
    assert list(gens[1]) == [DyadicInterval(2, 0), DyadicInterval(2, 1)]
    with pytest.raises(EmptyCollectionError):
        local_generations(DyadicInterval(3, 1), IntervalCollection.from_pairs([(1, 1)]))


@pytest.mark.parametrize("c, M", [(Fraction(1), 4), (Fraction(3), 12), (Fraction(9, 8), 5), (Fraction(7, 4), 7)])
def test_choose_M(c, M):
    assert choose_M(c) == M
    assert M < 4 * c + 1 <= M + 1


def test_decomposition_disjoint_family():
    E = IntervalCollection.from_pairs([(3, k) for k in range(8)])
    cover = almost_disjoint_decomposition(E)
    assert cover.M == 4
    assert cover.parts[0] == E and all(not part for part in cover.parts[1:])
    assert cover.violations() == []


def test_decomposition_full_grid_8():
    cover = almost_disjoint_decomposition(full_grid(8))
    assert cover.carleson == 9 and cover.M == 36
    for i, part in enumerate(cover.parts):
        expected = {DyadicInterval(i, k) for k in range(2**i)} if i <= 8 else set()
        assert set(part) == expected


def test_decomposition_chain(chain10):
    cover = almost_disjoint_decomposition(chain10)
    assert cover.carleson == 2 - Fraction(1, 1024)
    assert cover.M == 8
    for i, part in enumerate(cover.parts):
        assert set(part) == {DyadicInterval(j, 0) for j in range(11) if j % 8 == i}
    top = cover.certificate[0][DyadicInterval(0, 0)]
    assert top.child_mass / top.measure == Fraction(1, 256)


@settings(max_examples=60)
@given(collections(max_level=7, max_size=80))
def test_decomposition_partition_and_certificates(E):
    cover = almost_disjoint_decomposition(E)
    gens = generations(E)
    union = IntervalCollection()
    for i, part in enumerate(cover.parts):
        expected = set()
        for k in range(i, len(gens), cover.M):
            expected |= set(gens[k])
        assert set(part) == expected
        union = union | part
        for I, bound in cover.certificate[i].items():
            # recompute both sums directly from the part
            inner = [J for J in part if J != I and I.contains(J)]
            first = [J for J in inner if not any(K != J and K.contains(J) for K in inner)]
            assert bound.child_mass == sum((J.measure.to_fraction() for J in first), Fraction(0))
            assert 2 * bound.child_mass <= I.measure
            assert bound.local_mass == brute_mass(part, I) <= 2 * I.measure
    assert union == E


def test_chain_structure_examples(chain10):
    disjoint = IntervalCollection.from_pairs([(2, 0), (2, 3), (3, 4)])
    cs = chain_structure(disjoint)
    for K in disjoint:
        assert cs.chain_length(K) == 0
        assert cs.fringe_measures[K] == K.measure
        assert cs.fringe(K).measure == K.measure

    pair = IntervalCollection.from_pairs([(0, 0), (2, 0)])
    cs = chain_structure(pair)
    fringe = cs.fringe(DyadicInterval(0, 0))
    assert fringe.measure == Fraction(3, 4) and fringe.runs() == [[1, 4]]
    assert cs.chains[DyadicInterval(2, 0)] == (DyadicInterval(2, 0), DyadicInterval(0, 0))

    part0 = almost_disjoint_decomposition(chain10).parts[0]
    cs = chain_structure(part0)
    assert cs.decay[(DyadicInterval(0, 0), 1)] / DyadicInterval(0, 0).measure == Fraction(1, 256)


def test_chain_structure_rejects_dense_part():
    with pytest.raises(HaarlabError):
        chain_structure(full_grid(2))


@settings(max_examples=60)
@given(collections(max_level=7, max_size=80))
def test_chain_invariants(E):
    for part in almost_disjoint_decomposition(E).parts:
        cs = chain_structure(part)
        fringes = {K: cs.fringe(K) for K in part}
        for K, A in fringes.items():
            assert A.measure == cs.fringe_measures[K]
            assert K.measure <= 2 * A.measure and A.measure <= K.measure
            root = cs.chains[K][-1]
            assert not any(J != root and J.contains(root) for J in part)
        keys = list(fringes)
        for i, K in enumerate(keys):
            for L in keys[i + 1 :]:
                assert fringes[K].isdisjoint(fringes[L])
        for (I, l), mass in cs.decay.items():
            assert mass * (2**l) <= I.measure


def test_condensation_examples():
    for N in range(1, 5):
        for n in range(1, N + 1):
            w = condensation_search(full_grid(N), n)
            assert w.root == DyadicInterval(0, 0) and w.density == 1
    disjoint = IntervalCollection.from_pairs([(2, 0), (2, 1)])
    assert condensation_search(disjoint, 1).density == 0
    E = full_grid(4) - [DyadicInterval(4, 0)]
    w = condensation_search(E, 4)
    assert w.root == DyadicInterval(0, 0) and w.density == Fraction(15, 16)


@given(collections(), st.integers(1, 4))
def test_condensation_density_is_disjoint_union_fraction(E, n):
    w = condensation_search(E, n)
    assert 0 <= w.density <= 1
    layer = local_generations(w.root, E)[n]
    mass = sum((J.measure.to_fraction() for J in layer), Fraction(0))
    assert w.density == mass / w.root.measure
    # members of one generation are pairwise disjoint
    members = list(layer)
    for i, J in enumerate(members):
        for K in members[i + 1 :]:
            assert not J.contains(K) and not K.contains(J)


def test_lemma1_upper_bound_values():
    # closed forms evaluated independently
    assert lemma1_upper_bound(1, 2) == pytest.approx(2 / (1 - 2**-0.5), rel=1e-12)
    assert lemma1_upper_bound(1, 2) == pytest.approx(6.828427124746, rel=1e-11)
    assert lemma1_upper_bound(3, 1.5) == pytest.approx(12 ** (1 / 3) / (1 - 2 ** (-2 / 3)), rel=1e-12)
    assert lemma1_upper_bound(3, 1.5) == pytest.approx(6.186984469107, rel=1e-11)
    # M = 4 vs M = 7 (carleson 7/4): ratio sqrt(7/4) at p = 2
    assert lemma1_upper_bound(Fraction(7, 4), 2) / lemma1_upper_bound(1, 2) == pytest.approx(math.sqrt(7 / 4))
    with pytest.raises(HaarlabError):
        lemma1_upper_bound(1, 1.0)
