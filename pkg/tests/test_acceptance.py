"""Acceptance criteria 1-9, each at its stated tolerance and runtime budget.

Each test prints a single ``[PASS]``/``[FAIL]`` line, which shows up even
under captured output.  ``python tests/test_acceptance.py`` prints the same
lines without pytest.
"""

import json
import shutil
import subprocess
import sys
import time
from pathlib import Path

import pytest

from haarlab import acceptance
from haarlab.acceptance import CriterionResult
from haarlab.harness import generate

SEED = 42


@pytest.fixture(scope="module")
def corpus():
    return [generate(s) for s in acceptance.corpus_specs(SEED)]


def report(capsys, result: CriterionResult) -> None:
    with capsys.disabled():
        print("\n" + result.line())
    assert result.correct, result.detail
    assert result.within_budget, f"{result.runtime:.2f}s over the {result.budget}s budget"


def test_criterion_1_carleson_exactness(capsys):
    report(capsys, acceptance.criterion_1())


def test_criterion_2_decomposition_certificates(capsys, corpus):
    result = acceptance.criterion_2(SEED, corpus)
    assert result.detail.get("collections") == 200
    report(capsys, result)


def test_criterion_3_identity_system(capsys):
    report(capsys, acceptance.criterion_3())


def test_criterion_4_cascade_system(capsys):
    report(capsys, acceptance.criterion_4())


def test_criterion_5_norm_oracles(capsys):
    report(capsys, acceptance.criterion_5())


def test_criterion_6_lemma1_sweep(capsys, corpus):
    result = acceptance.criterion_6(SEED, corpus)
    assert result.detail.get("checks") == 600
    report(capsys, result)


def test_criterion_7_transfer(capsys):
    report(capsys, acceptance.criterion_7(SEED))


def test_criterion_8_growth_probe(capsys):
    report(capsys, acceptance.criterion_8())


def _reproduce(out: Path) -> tuple[str, str]:
    exe = shutil.which("haarlab")
    cmd = [exe] if exe else [sys.executable, "-m", "haarlab.cli"]
    subprocess.run(cmd + ["reproduce", "--seed", str(SEED), "--out", str(out)], check=True, capture_output=True)
    data = json.loads((out / "report.json").read_text())
    data.pop("timestamp")
    return json.dumps(data, sort_keys=True), (out / "report.csv").read_text()


def test_criterion_9_determinism(capsys, tmp_path):
    start = time.perf_counter()
    first = _reproduce(tmp_path / "a")
    second = _reproduce(tmp_path / "b")
    elapsed = time.perf_counter() - start
    same = first == second and json.loads(first[0])["correct"]
    result = CriterionResult(9, "reproduce twice, identical reports", same, {}, elapsed, 600.0)
    report(capsys, result)


if __name__ == "__main__":
    results = acceptance.run_all(SEED)
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)
