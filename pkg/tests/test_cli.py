import csv
import subprocess
import sys

import numpy as np
import pytest

from flexohom.cli import main
from flexohom.output import read_effective, read_sweep, read_tecplot

TINY = """
[run]
bc = "PBC"

[materials.matrix]
preset = "table1"
l = 0.3

[rve]
side_length = 1.0
element_size = 0.25

[[rve.holes]]
shape = "circle"
size = 0.2
"""

SWEEP = """
[sweep]
variable = "intrinsicLength"
values = [0.1, -1.0, 0.5]
normalization = "matrix"
"""

MACRO = """
[macro]
width = 4.0
height = 2.0
nx = 2
ny = 1
dirichlet = [
  {edge = "left", field = "u1"},
  {edge = "bottom", field = "u2"},
  {edge = "bottom", field = "phi"},
  {edge = "top", field = "phi", value = 0.01},
]
loads = [{edge = "right", traction = [0.1, 0.0]}]
localize = [{element = 0, point = 0}, {element = 3, point = 2}]
"""


@pytest.fixture
def cfg(tmp_path):
    def write(extra=""):
        p = tmp_path / "run.toml"
        p.write_text(TINY + extra)
        return str(p)

    return write


def test_verify_passes(tmp_path, capsys):
    assert main(["verify", "--trials", "2", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5 and "FAIL" not in out
    rows = list(csv.DictReader(open(tmp_path / "verify.csv")))
    assert len(rows) == 5 and all(r["passed"] == "1" for r in rows)


def test_homogenize_writes_tables(cfg, tmp_path, capsys):
    out = tmp_path / "h"
    assert main(["homogenize", "--config", cfg(), "--out", str(out)]) == 0
    C = read_effective(out / "effective.csv")
    assert C.shape == (11, 11) and np.abs(C - C.T).max() < 1e-9 * np.abs(C).max()
    hm = list(csv.DictReader(open(out / "hill_mandel.csv")))
    assert len(hm) == 11 and max(float(r["gap"]) for r in hm) < 1e-8
    assert (out / "coefficients.csv").exists()
    assert "C11" in capsys.readouterr().out


def test_global_flags_after_the_subcommand_and_seed(cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", cfg(), "homogenize", "--out", str(a), "--seed", "3"]) == 0
    assert main(["homogenize", "--config", cfg(), "--out", str(b), "--seed", "3"]) == 0
    assert (a / "effective.csv").read_bytes() == (b / "effective.csv").read_bytes()


def test_sweep_reports_failed_rows(cfg, tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", "--config", cfg(SWEEP), "--out", str(out), "--threads", "2"]) == 1
    rows = read_sweep(out / "sweep.csv")
    assert [r["status"] for r in rows][0::2] == ["ok", "ok"]
    assert rows[1]["status"].startswith("failed")
    assert not (out / ".staging").exists()


def test_two_scale_outputs(cfg, tmp_path, capsys):
    out = tmp_path / "t"
    assert main(["two-scale", "--config", cfg(MACRO), "--out", str(out)]) == 0
    zones = read_tecplot(out / "fields.dat")
    assert [z.name for z in zones] == ["macro", "micro e0 q0", "micro e3 q2"]
    loc = list(csv.DictReader(open(out / "localization.csv")))
    assert len(loc) == 2 and max(float(r["consistency_error"]) for r in loc) < 1e-8
    for name in ("effective.csv", "fields.csv", "macro_qp.csv"):
        assert (out / name).exists()
    assert "computed 1x" in capsys.readouterr().out


def test_mesh_generate_and_inspect(cfg, tmp_path, capsys):
    out = tmp_path / "m"
    assert main(["mesh", "generate", "--config", cfg(), "--out", str(out)]) == 0
    assert main(["mesh", "inspect", str(out / "rve.mesh")]) == 0
    text = capsys.readouterr().out
    assert text.count("minimum angle") == 2 and "porosity" in text


@pytest.mark.parametrize(
    "argv, msg",
    [
        (["homogenize"], "needs --config"),
        (["homogenize", "--config", "/nonexistent/x.toml"], "no such file"),
        (["mesh", "inspect"], "mesh file path"),
        (["mesh", "inspect", "/nonexistent/rve.mesh"], "error"),
    ],
)
def test_user_errors_exit_with_code_2(argv, msg, capsys):
    assert main(argv) == 2
    assert msg in capsys.readouterr().err


def test_missing_sections(cfg, capsys):
    assert main(["sweep", "--config", cfg()]) == 2
    assert main(["two-scale", "--config", cfg()]) == 2
    err = capsys.readouterr().err
    assert "[sweep]" in err and "[macro]" in err


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "flexohom.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "two-scale" in r.stdout
