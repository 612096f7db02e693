import json
import subprocess
import sys

import pytest

from rcising.cli import COMMAND_HELP, build_parser, main
from rcising.config import COMMANDS


def _run(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def _header(path):
    return path.read_text().split("\n", 1)[0]


def test_golden_schemas(tmp_path):
    code, out = _run(tmp_path, "b", "bubbles", "--d", "2", "--table", "power:1", "--radius", "4")
    assert code == 0
    assert _header(out / "bubbles.csv") == "radius,B_partial,B_open_partial"
    code, out = _run(tmp_path, "c", "chi-scan", "--d", "1", "--size", "6", "--beta-c", "1.0",
                     "--betas", "0.2,0.4", "--chi-source", "exact")
    assert code == 0
    assert _header(out / "chi_scan.csv") == "beta,chi,chi_se,scaled"
    code, out = _run(tmp_path, "i", "iic-scan", "--graph", "torus", "--d", "1", "--size", "10", "--beta", "0.5",
                     "--xs", "3;5", "--sweeps", "300", "--burn-in", "10")
    assert code == 0
    assert _header(out / "iic.csv") == "x,prob,se,n_samples"


def test_outputs_are_deterministic(tmp_path):
    argv = ["iic-scan", "--graph", "torus", "--d", "1", "--size", "10", "--beta", "0.5", "--xs", "3;5",
            "--sweeps", "300", "--burn-in", "10", "--seed", "17"]
    _, a = _run(tmp_path, "a", *argv)
    _, b = _run(tmp_path, "b", *argv)
    for name in ("iic.csv", "iic_deltas.csv", "summary.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    raw = (a / "iic.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_manifest_rerun_reproduces(tmp_path):
    code, a = _run(tmp_path, "a", "sample-current", "--graph", "cycle", "--size", "5", "--beta", "0.4",
                   "--sources", "0;2", "--event", "all-odd", "--sweeps", "400", "--burn-in", "10", "--seed", "5")
    assert code == 0
    man = json.loads((a / "manifest.json").read_text())
    assert man["seed"] == 5 and man["command"] == "sample-current"
    code, b = _run(tmp_path, "b", "sample-current", "--config", str(a / "manifest.json"))
    assert code == 0
    for name, digest in man["outputs"].items():
        assert (b / name).read_bytes() == (a / name).read_bytes(), name
    assert json.loads((b / "manifest.json").read_text())["outputs"] == man["outputs"]


def test_missing_beta_c_exits_2(tmp_path, capsys):
    code, _ = _run(tmp_path, "x", "chi-scan", "--d", "3", "--size", "4", "--betas", "0.1")
    assert code == 2
    assert "beta_c" in capsys.readouterr().err


def test_bad_input_exits_2(tmp_path, capsys):
    code, _ = _run(tmp_path, "x", "sample-current", "--d", "2", "--size", "2", "--beta", "0.3",
                   "--sources", "0,0;9,9")
    assert code == 2
    code, _ = _run(tmp_path, "y", "sample-current", "--beta", "zero")
    assert code == 2


def test_oracle_size_exits_3(tmp_path, capsys):
    code, _ = _run(tmp_path, "x", "verify-switching", "--graph", "box", "--d", "2", "--size", "3")
    assert code == 3
    assert "oracle size" in capsys.readouterr().err


def test_verify_switching_small_corpus(tmp_path):
    code, out = _run(tmp_path, "s", "verify-switching", "--corpus", "small", "--max-edges", "5",
                     "--betas", "0.5")
    assert code == 0
    summary = (out / "summary.txt").read_text()
    assert "verify-switching" in summary
    assert len((out / "switching.csv").read_text().splitlines()) > 1


def test_help_lists_commands_and_columns(capsys):
    parser = build_parser()
    text = parser.format_help()
    for cmd in COMMANDS:
        assert cmd in text
        assert cmd in COMMAND_HELP
    with pytest.raises(SystemExit):
        parser.parse_args(["bubbles", "--help"])
    sub = capsys.readouterr().out
    assert "radius,B_partial,B_open_partial" in sub
    assert "--beta-c" in sub and "--seed" in sub


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "rcising.cli", "regular-scales", "--d", "2", "--table", "power:1",
                        "--radius", "8", "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "o" / "regular.csv").exists()
