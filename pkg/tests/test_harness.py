import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from haarlab import CertificateViolation, DyadicInterval, HaarlabError, carleson_constant, full_grid
from haarlab.harness import CHECKS, GeneratorSpec, generate, parallel_map, run_corpus
from haarlab.io import dumps, format_intervals, parse_intervals, read_intervals, write_intervals
from haarlab.type_constant import EstimateConfig

from strategies import collections

FAST = EstimateConfig(restarts=1, max_iter=40, single_starts=1)


def test_full_generator():
    E = generate(GeneratorSpec.full(3))
    assert len(E) == 15 and E == full_grid(3)


def test_disjoint_generator():
    E = generate(GeneratorSpec.disjoint(3, 8))
    assert len(E) == 8 and carleson_constant(E).constant == 1
    with pytest.raises(HaarlabError):
        generate(GeneratorSpec.disjoint(2, 5))


def test_chain_generator():
    E = generate(GeneratorSpec.chain(10))
    assert carleson_constant(E).constant == 2 - Fraction(1, 1024)


def test_unknown_kind():
    with pytest.raises(HaarlabError):
        GeneratorSpec("spiral")


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(4, 16), st.integers(0, 2**31 - 1))
def test_random_budget_respected(depth, quarters, seed):
    budget = Fraction(quarters, 4)
    spec = GeneratorSpec.random_budget(depth, budget, seed)
    E = generate(spec)
    assert E and E.max_level <= depth
    assert carleson_constant(E).constant <= budget
    assert generate(spec) == E


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 1000))
def test_cascade_is_deterministic_and_rooted(branching, depth, seed):
    spec = GeneratorSpec.cascade(branching, depth, Fraction(1, 10), seed)
    E = generate(spec)
    assert DyadicInterval(0, 0) in E
    assert generate(spec) == E


@pytest.mark.parametrize(
    "spec",
    [
        GeneratorSpec.full(2),
        GeneratorSpec.disjoint(3, 4),
        GeneratorSpec.chain(5),
        GeneratorSpec.random_budget(5, Fraction(3, 2), 9),
        GeneratorSpec.cascade(2, 3, Fraction(1, 8), 1),
    ],
)
def test_spec_json_round_trip(spec):
    data = json.loads(json.dumps(spec.to_json()))
    assert GeneratorSpec.from_json(data) == spec


@given(collections())
def test_text_round_trip(E):
    assert parse_intervals(format_intervals(E, "header\nsecond line")) == E


def test_parse_errors():
    assert parse_intervals("# only a comment\n\n0 0  # trailing\n") == full_grid(0)
    for bad in ("1", "1 2 3", "a b", "1 5"):
        with pytest.raises(HaarlabError):
            parse_intervals(bad)


def test_file_round_trip(tmp_path):
    path = tmp_path / "E.txt"
    write_intervals(full_grid(2), path)
    assert read_intervals(path) == full_grid(2)
    with open(path) as fh:
        assert read_intervals(fh) == full_grid(2)


def test_dumps_is_stable():
    assert dumps({"b": 1, "a": [1, 2]}) == dumps({"a": [1, 2], "b": 1})
    assert dumps({}).endswith("\n")


def test_empty_corpus_succeeds():
    report = run_corpus([], ["lemma1"], seed=0)
    assert report.passed and report.rows == []


def test_unknown_check_rejected():
    with pytest.raises(HaarlabError):
        run_corpus([GeneratorSpec.full(1)], ["bogus"], seed=0)


def test_corpus_runs_all_checks(tmp_path):
    specs = [GeneratorSpec.full(3), GeneratorSpec.chain(4), GeneratorSpec.random_budget(4, 2, 5)]
    report = run_corpus(specs, CHECKS, seed=1, p_values=(1.5,), config=FAST, transfer_depth=1, transfer_delta=Fraction(1, 4))
    assert report.passed, report.failures
    assert set(report.criteria) == set(CHECKS)
    path = report.write(tmp_path, timestamp="fixed")
    data = json.loads(path.read_text())
    assert data["passed"] and data["timestamp"] == "fixed"
    assert (tmp_path / "report.csv").read_text().startswith("instance,")
    assert "total" in json.loads((tmp_path / "timings.json").read_text())


def test_corpus_is_deterministic(tmp_path):
    specs = [GeneratorSpec.random_budget(5, Fraction(5, 2), s) for s in range(3)]

    def once():
        rep = run_corpus(specs, ["lemma1", "decompose"], seed=7, p_values=(1.25, 2.0), config=FAST)
        return dumps(rep.to_json())

    assert once() == once()


def test_failure_replay(tmp_path, monkeypatch):
    import haarlab.harness as harness

    def broken(E, p, space=None, config=None):
        raise CertificateViolation("injected", None, "lemma1")

    monkeypatch.setattr(harness, "check_lemma1", broken)
    spec = GeneratorSpec.random_budget(4, Fraction(7, 4), 11)
    report = run_corpus([spec], ["lemma1"], seed=0, p_values=(1.5,))
    assert not report.passed and report.criteria["lemma1"] is False
    report.write(tmp_path)
    saved = tmp_path / "failures" / "0000.txt"
    assert read_intervals(saved) == generate(spec)
    failure = report.failures[0]
    assert GeneratorSpec.from_json(failure["generator"]) == spec
    assert failure["replay"] == {"p": 1.5}


def _square(x):
    return x * x


def test_parallel_map_matches_serial(monkeypatch):
    monkeypatch.setenv("HAARLAB_THREADS", "2")
    assert parallel_map(_square, list(range(5))) == [0, 1, 4, 9, 16]
    monkeypatch.setenv("HAARLAB_THREADS", "junk")
    assert parallel_map(_square, [3]) == [9]


def test_hundred_random_budget_lemma1():
    from haarlab.acceptance import corpus_specs

    report = run_corpus(corpus_specs(3, 100), ["lemma1"], seed=3, config=FAST)
    assert report.passed and len(report.rows) == 300
