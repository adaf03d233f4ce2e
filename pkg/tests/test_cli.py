import json

import pytest

from cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from conftest import flip_stored_byte


def _run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr().out


def test_bounds_json_with_crossing(capsys):
    code, out = _run(capsys, ["bounds", "--kind", "normal", "--crossing", "--n-max", "100", "--points", "5"])
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["crossing"] == 4218
    assert payload["kind"] == "normal" and payload["parameter"] == 0.25
    assert [row["n"] for row in payload["samples"]][0] == 1


def test_bounds_csv(capsys):
    code, out = _run(capsys, ["bounds", "--kind", "erasure_upper", "--n-max", "10", "--points", "3", "--format", "csv"])
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == "n,value,valid"
    n, value, valid = lines[1].split(",")
    assert n == "1" and float(value) == pytest.approx(1.0) and valid == "True"


def test_bounds_to_file(capsys, tmp_path):
    target = tmp_path / "curve.json"
    code, out = _run(capsys, ["bounds", "--kind", "berry_esseen", "--n-max", "50", "--points", "4", "--out", str(target)])
    assert code == EXIT_OK
    assert json.loads(out)["out"] == str(target)
    samples = json.loads(target.read_text())["samples"]
    assert samples[0] == {"n": 1, "value": None, "valid": False}


@pytest.mark.parametrize("argv", [
    ["bounds", "--kind", "ppt_upper", "--crossing"],
    ["bounds", "--kind", "erasure_upper", "--epsilon", "0.7", "--n-max", "5", "--points", "2"],
    ["bounds", "--kind", "bogus"],
    ["bounds", "--points", "0"],
    ["seesaw"],
    ["seesaw", "--n", "2", "--d", "3"],
    ["unknown"],
])
def test_usage_errors(capsys, argv):
    code, _ = _run(capsys, argv)
    assert code == EXIT_USAGE


def test_invalid_environment(capsys, monkeypatch):
    monkeypatch.setenv("SUPERACT_THREADS", "0")
    code, _ = _run(capsys, ["check", "--suite", "core"])
    assert code == EXIT_USAGE


def test_seesaw_then_verify(capsys, tmp_path):
    archive = tmp_path / "code1.zip"
    code, out = _run(capsys, ["seesaw", "--n", "1", "--restarts", "2", "--threads", "1", "--out", str(archive)])
    assert code == EXIT_OK
    summary = json.loads(out)
    assert summary["n"] == 1 and summary["archive"] == str(archive)
    assert summary["exceeds_two_extendible"] is False
    assert 0.5 < summary["fidelity"] < 0.75

    code, out = _run(capsys, ["verify", str(archive)])
    assert code == EXIT_OK
    assert json.loads(out)["passed"] is True

    archive.write_bytes(archive.read_bytes()[:100])
    code, out = _run(capsys, ["verify", str(archive)])
    assert code == EXIT_FAILED
    assert json.loads(out)["first_failure"] == "container"


def test_verify_reports_corrupted_entry(capsys, tmp_path):
    archive = tmp_path / "code1.zip"
    assert main(["seesaw", "--n", "1", "--restarts", "1", "--threads", "1", "--out", str(archive)]) == EXIT_OK
    capsys.readouterr()
    flip_stored_byte(archive, "dec/")
    code, out = _run(capsys, ["verify", str(archive)])
    assert code == EXIT_FAILED
    assert json.loads(out)["first_failure"] == "container"


def test_seesaw_archives_are_reproducible(capsys, tmp_path):
    paths = [tmp_path / "a.zip", tmp_path / "b.zip"]
    for path in paths:
        code, _ = _run(capsys, ["seesaw", "--n", "1", "--restarts", "2", "--seed", "5", "--threads", "1", "--out", str(path)])
        assert code == EXIT_OK
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_warm_start_flag(capsys, tmp_path):
    first = tmp_path / "n1.zip"
    assert main(["seesaw", "--n", "1", "--restarts", "1", "--threads", "1", "--out", str(first)]) == EXIT_OK
    capsys.readouterr()
    code, out = _run(capsys, [
        "seesaw", "--n", "2", "--restarts", "1", "--threads", "1",
        "--warm-start", str(first), "--out", str(tmp_path / "n2.zip"),
    ])
    assert code == EXIT_OK
    assert json.loads(out)["restart"] == 0


@pytest.mark.slow
def test_sweep(capsys, tmp_path):
    code, out = _run(capsys, ["seesaw", "--sweep", "3", "--restarts", "2", "--threads", "1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    payload = json.loads(out)
    assert [row["n"] for row in payload["curve"]] == [1, 2, 3]
    assert payload["two_extendible_bound"] == 0.75
    assert all((tmp_path / f"code_n{n}.zip").exists() for n in (1, 2, 3))


@pytest.mark.parametrize("suite", ["core", "effective"])
def test_check_suites(capsys, suite):
    code, out = _run(capsys, ["check", "--suite", suite])
    assert code == EXIT_OK
    assert json.loads(out)[suite]["passed"] is True


@pytest.mark.slow
def test_check_symmetry_suite(capsys):
    code, out = _run(capsys, ["check", "--suite", "symmetry"])
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["symmetry"]["passed"] is True
    assert [row["orbit_dimension"] for row in payload["dimension_table"]][0] == 136
