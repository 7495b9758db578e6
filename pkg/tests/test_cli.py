"""CLI subcommands run in-process: JSON shape, determinism, exit codes."""

import json
import math

import pytest

from sturmspec.cli import main


def run_cli(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


FIB_ARGS = ["--theta-cf-periodic", ":1"]


def test_words_command(capsys):
    rc, out, err = run_cli(
        capsys, ["words", *FIB_ARGS, "--level", "3", "--window=-5:12"]
    )
    assert rc == 0 and err == ""
    doc = json.loads(out)
    assert doc["word"] == "101"
    assert doc["word_length"] == 3
    assert doc["concat_identity"] is True
    assert doc["denominators"][:5] == [1, 1, 2, 3, 5]
    assert doc["validation"]["passed"] is True
    assert doc["validation"]["failures"] == []
    assert any(b["start"] <= 1 < b["stop"] and b["j"] == 0 for b in doc["blocks"])
    assert "version" in doc["config"]


def test_words_rational_theta(capsys):
    rc, out, _ = run_cli(
        capsys, ["words", "--theta-rational", "5/8", "--level", "2"]
    )
    assert rc == 0
    doc = json.loads(out)
    assert doc["word_length"] == 2
    assert doc["config"]["theta"] == {"rational": "5/8"}


def test_output_is_deterministic(capsys):
    argv = ["spectrum", *FIB_ARGS, "--lambda", "2.0", "--level", "3"]
    rc1, out1, _ = run_cli(capsys, argv)
    rc2, out2, _ = run_cli(capsys, argv)
    assert rc1 == rc2 == 0
    assert out1 == out2


def test_spectrum_command(capsys):
    rc, out, _ = run_cli(
        capsys,
        ["spectrum", *FIB_ARGS, "--lambda", "2.0", "--level", "3", "--energy", "0.1"],
    )
    assert rc == 0
    doc = json.loads(out)
    assert doc["band_count"] == 3
    assert doc["band_measure"] > 0.0
    assert len(doc["bands"]) == 3
    assert all(a < b for a, b in doc["bands"])
    assert len(doc["trace_orbit"]["y"]) >= 1
    assert doc["trace_bound_estimate"]["which"] in ("x", "y", "z")


def test_evolve_command(capsys):
    rc, out, _ = run_cli(
        capsys,
        [
            "evolve", *FIB_ARGS, "--lambda", "0.0", "--energy", "0.0",
            "--length", "10", "--phi", "0.0",
        ],
    )
    assert rc == 0
    doc = json.loads(out)
    # free E = 0 from (u0, u1) = (1, 0): u is 1, 0, -1, 0, 1, ... so
    # |u|_10^2 sums six ones
    assert doc["norm_u"] == pytest.approx(math.sqrt(6.0), rel=1e-12)
    assert doc["norm_U"] >= doc["norm_u"]


def test_gordon_command(capsys):
    rc, out, _ = run_cli(
        capsys,
        ["gordon", *FIB_ARGS, "--lambda", "1.0", "--level", "6", "--energy", "0.0"],
    )
    assert rc == 0
    doc = json.loads(out)
    assert doc["case"] == "3.2.2"
    assert doc["k"] == 34
    assert doc["reach"] == 71
    assert doc["max_reproduction_residual"] <= 1e-9
    assert doc["growth"]["ok"] is True
    assert doc["growth"]["min_ratio"] >= doc["growth"]["required"]


def test_mfunction_command(capsys):
    rc, out, _ = run_cli(
        capsys,
        [
            "mfunction", *FIB_ARGS, "--lambda", "0.0", "--energy", "0.0",
            "--eps", "1.0",
        ],
    )
    assert rc == 0
    doc = json.loads(out)
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    assert doc["m_plus"]["im"] == pytest.approx(golden, abs=1e-7)
    assert abs(doc["m_plus"]["re"]) < 1e-7
    assert doc["m_whole"]["im"] == pytest.approx(2.0 / math.sqrt(5.0), abs=1e-7)
    # mu = (1 - golden) / (1 + golden) gives sup = 1/golden
    assert doc["mobius_sup"] == pytest.approx(1.0 / golden, abs=1e-6)
    assert doc["capped"] == [False, False]


def test_alpha_command(capsys):
    rc, out, _ = run_cli(
        capsys,
        ["alpha", *FIB_ARGS, "--lambda", "0.0", "--energy", "0.0"],
    )
    assert rc == 0
    doc = json.loads(out)
    assert doc["gamma1"] == pytest.approx(0.5, abs=0.02)
    assert doc["gamma2"] == pytest.approx(0.5, abs=0.02)
    assert doc["alpha"] == pytest.approx(1.0, abs=0.05)


def test_out_file_writes_and_silences_stdout(capsys, tmp_path):
    path = tmp_path / "doc.json"
    rc, out, _ = run_cli(
        capsys,
        ["words", *FIB_ARGS, "--level", "2", "--out", str(path)],
    )
    assert rc == 0
    assert out == ""
    doc = json.loads(path.read_text())
    assert doc["word"] == "10"


def test_domain_error_exits_one_with_json(capsys):
    rc, out, err = run_cli(
        capsys,
        [
            "words", "--theta-cf", "1,1,1", "--theta-rational", "2/5",
            "--level", "2",
        ],
    )
    assert rc == 1
    assert out == ""
    diag = json.loads(err)
    assert diag["error"] == "ValueError"
    assert "exactly one" in diag["message"]


def test_domain_error_from_library(capsys):
    # level outside the stored coefficient range surfaces as a clean failure
    rc, _, err = run_cli(
        capsys, ["spectrum", "--theta-cf", "1,1,1,1", "--lambda", "1.0", "--level", "9"]
    )
    assert rc == 1
    assert json.loads(err)["error"] == "ValueError"


def test_usage_error_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["words", *FIB_ARGS])  # --level is required
    assert exc.value.code == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
