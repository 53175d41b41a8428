import json
import subprocess
import sys

import pytest

from quasiou.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, main
from quasiou.io import read_long_csv


def write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


SIM = """
[experiment]
command = simulate
seed = 3
n_paths = 40

[noise]
kind = fbm
H = 0.3

[grid]
stop = 1.0
step = 0.05
"""

VERIFY = """
[experiment]
command = verify-asymptotics
seed = 1

[noise]
kind = fbm
H = 0.7
"""


def test_simulate_is_deterministic(tmp_path):
    cfg = write(tmp_path, SIM)
    assert main(["--config", str(cfg), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["--config", str(cfg), "--out", str(tmp_path / "b"), "--threads", "2"]) == EXIT_OK
    a = (tmp_path / "a" / "data.csv").read_bytes()
    assert a == (tmp_path / "b" / "data.csv").read_bytes()
    assert main(["--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "4"]) == EXIT_OK
    assert a != (tmp_path / "c" / "data.csv").read_bytes()
    series = read_long_csv(tmp_path / "a" / "data.csv")
    assert len(series) == 40 and "path39" in series


def test_resolved_config_reproduces_run(tmp_path):
    cfg = write(tmp_path, SIM)
    main(["--config", str(cfg), "--out", str(tmp_path / "a")])
    resolved = tmp_path / "a" / "config.resolved.ini"
    main(["--config", str(resolved), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "data.csv").read_bytes() == (tmp_path / "b" / "data.csv").read_bytes()
    assert resolved.read_text() == (tmp_path / "b" / "config.resolved.ini").read_text()


def test_verify_asymptotics_passes(tmp_path, capsys):
    status = main(["--config", str(write(tmp_path, VERIFY)), "--out", str(tmp_path / "o"), "--format", "json"])
    assert status == EXIT_OK
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["pass"] and {c["name"] for c in report["checks"]} >= {"tail_exponent", "tail_constant"}
    assert (tmp_path / "o" / "data.json").exists()
    assert "PASS tail_exponent" in capsys.readouterr().out


def test_failed_check_exit_code(tmp_path):
    text = VERIFY + "\n[tolerances]\nexponent = 1e-9\n"
    assert main(["--config", str(write(tmp_path, text)), "--out", str(tmp_path / "o")]) == EXIT_FAIL


@pytest.mark.parametrize("text, fragment", [
    (SIM.replace("seed = 3\n", ""), "missing required seed"),
    (SIM.replace("H = 0.3", "H = 1.2"), "[noise] H must lie in (0, 1), got 1.2"),
    (SIM + "typo = 1\n", "unknown key 'typo'"),
])
def test_config_errors_exit_1(tmp_path, capsys, text, fragment):
    assert main(["--config", str(write(tmp_path, text)), "--out", str(tmp_path / "o")]) == EXIT_ERROR
    assert fragment in capsys.readouterr().err


def test_missing_file_exit_1(tmp_path):
    assert main(["--config", str(tmp_path / "none.ini"), "--out", str(tmp_path / "o")]) == EXIT_ERROR


@pytest.mark.parametrize("body", [
    "command = kernel\nseed = 1\n\n[kernel]\nkind = trunc_power\nr0 = 2.0\ndelta = 0.5\nH = 0.7\n\n[grid]\nstop = 3\nstep = 0.5\n",
    "command = moments\nseed = 1\n\n[noise]\nkind = fbm\nH = 0.2\n",
    "command = stability\nseed = 1\n",
    "command = fubini-check\nseed = 1\nn_paths = 50\n\n[grid]\nstop = 1\nstep = 0.05\n",
    "command = acf\nseed = 2\nn_paths = 400\nlambda = 1.0\n\n[noise]\nkind = fbm\nH = 0.7\n\n[grid]\nstop = 2\nstep = 0.01\n",
])
def test_each_command_runs(tmp_path, body):
    assert main(["--config", str(write(tmp_path, "[experiment]\n" + body)), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert (tmp_path / "o" / "report.json").exists()


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "quasiou.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("quasiou ")
