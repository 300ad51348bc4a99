import io
import json

import pytest

from haarlab import full_grid
from haarlab.cli import main
from haarlab.io import format_intervals, write_intervals


@pytest.fixture
def grid3(tmp_path):
    path = tmp_path / "grid3.txt"
    write_intervals(full_grid(3), path)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_carleson_from_file(capsys, grid3):
    code, out, _ = run(capsys, "carleson", "--input", grid3)
    data = json.loads(out)
    assert code == 0 and data["carleson"] == "4/2^0" and data["witness"] == [0, 0]


def test_carleson_from_stdin(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(format_intervals(full_grid(1))))
    code, out, _ = run(capsys, "carleson")
    assert code == 0 and json.loads(out)["value"] == 2.0


def test_csv_output(capsys, grid3):
    code, out, _ = run(capsys, "carleson", "--input", grid3, "--format", "csv")
    header, row = out.strip().splitlines()
    assert code == 0 and "carleson" in header.split(",") and "4/2^0" in row


def test_out_directory(capsys, grid3, tmp_path):
    code, out, _ = run(capsys, "condense", "--input", grid3, "--depth", "2", "--out", str(tmp_path / "o"))
    data = json.loads((tmp_path / "o" / "condense.json").read_text())
    assert code == 0 and out == "" and data["density"] == "1/2^0"


def test_decompose(capsys, grid3):
    code, out, _ = run(capsys, "decompose", "--input", grid3)
    data = json.loads(out)
    assert code == 0 and data["M"] == 16 and data["violations"] == []


def test_gamlen_gaudet_verify(capsys, tmp_path):
    path = tmp_path / "g.txt"
    write_intervals(full_grid(6), path)
    code, out, _ = run(capsys, "gamlen-gaudet", "--input", str(path), "--root", "0,0", "--depth", "2", "--delta", "1/8", "--verify")
    data = json.loads(out)
    assert code == 0 and data["verification"]["joint_distribution"] == "passed"
    assert data["delta"] == "1/2^3"


def test_gamlen_gaudet_insufficient(capsys, tmp_path):
    path = tmp_path / "d.txt"
    path.write_text("0 0\n2 0\n2 3\n")
    code, _, err = run(capsys, "gamlen-gaudet", "--input", str(path), "--root", "0,0", "--depth", "1", "--delta", "1/4")
    assert code == 2 and "error" in err


def test_estimate_and_lemma1(capsys, grid3):
    code, out, _ = run(capsys, "estimate-constant", "--input", grid3, "--p", "1.5", "--space", "l1:4", "--restarts", "1")
    data = json.loads(out)
    assert code == 0 and 1 <= data["lower"] <= data["upper"] and data["space"] == "l1:4"
    code, out, _ = run(capsys, "verify-lemma1", "--input", grid3, "--p", "2", "--restarts", "1")
    assert code == 0 and json.loads(out)["passed"] is True


def test_check_transfer(capsys, tmp_path):
    path = tmp_path / "g.txt"
    write_intervals(full_grid(4), path)
    code, out, _ = run(capsys, "check-transfer", "--input", str(path), "--depth", "2", "--delta", "1/8", "--restarts", "1")
    assert code == 0 and json.loads(out)["passed"] is True


@pytest.mark.parametrize(
    "argv",
    [
        ["carleson", "--input", "/nonexistent/file.txt"],
        ["estimate-constant", "--input", "{grid}", "--p", "3"],
    ],
)
def test_usage_errors_exit_2(capsys, grid3, argv):
    argv = [a.replace("{grid}", grid3) for a in argv]
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("haarlab: error")


def test_argparse_errors_exit_2(capsys):
    for argv in (["carleson", "--format", "xml"], ["gamlen-gaudet", "--depth", "1", "--delta", "x"], []):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2
    capsys.readouterr()


def test_malformed_input_exit_2(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 0\nnot an interval\n")
    code, _, err = run(capsys, "carleson", "--input", str(path))
    assert code == 2 and "line 2" in err


def test_corpus_subcommand(capsys, tmp_path):
    code, out, _ = run(capsys, "corpus", "--count", "3", "--checks", "lemma1,decompose", "--p-values", "1.5", "--restarts", "1", "--out", str(tmp_path))
    data = json.loads((tmp_path / "report.json").read_text())
    assert code == 0 and data["passed"] and out.strip().endswith("report.json")
    code, _, _ = run(capsys, "corpus", "--count", "1", "--checks", "nonsense")
    assert code == 2


def test_corpus_failure_exit_1(capsys, monkeypatch, tmp_path):
    import haarlab.harness as harness
    from haarlab import CertificateViolation

    def broken(*args, **kwargs):
        raise CertificateViolation("injected", None, "lemma1")

    monkeypatch.setattr(harness, "check_lemma1", broken)
    code, _, _ = run(capsys, "corpus", "--count", "2", "--out", str(tmp_path))
    assert code == 1 and len(list((tmp_path / "failures").glob("*.txt"))) == 2
