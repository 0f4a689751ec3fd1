import csv
import json

import pytest

from fracscat.cli import PLOT_TABLES, emit_plotdata, main

FREE = """
[grid]
n = 1
N = 64
L = 16

[potential]
family = zero

[run]
seed = 5
"""


@pytest.fixture
def free_cfg(tmp_path):
    p = tmp_path / "free.ini"
    p.write_text(FREE)
    return p


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_fracpow_free(free_cfg, tmp_path):
    out = tmp_path / "fp"
    assert main(["fracpow", "--config", str(free_cfg), "--out", str(out), "--quiet"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["sections"]["fracpow"]["max_defect"] <= 1e-7
    man = json.loads((out / "manifest.json").read_text())
    assert all(a["config_hash"] == rep["config_hash"] for a in man["artifacts"])
    assert {"numpy", "scipy", "python"} <= set(man["versions"])
    assert "timing" in man and "timing" not in rep


def test_scatter_free(free_cfg, tmp_path):
    out = tmp_path / "sc"
    assert main(["scatter", "--config", str(free_cfg), "--out", str(out), "--quiet",
                 "--tmax", "6", "--dt", "0.5", "--band", "1.5", "3.0"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["gates"]["scatter.unitarity"]["value"] <= 1e-10
    assert rep["config"]["scattering"]["T"] == 6.0
    rows = read_csv(out / "scatter_convergence.csv")
    assert rows[0] == ["T", "isometry_defect", "intertwine_defect", "fw_defect"]
    assert [float(r[0]) for r in rows[1:]] == [1.5, 3.0, 6.0]


def test_non_power_of_two_is_parse_error(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[grid]\nN = 100\n")
    assert main(["scatter", "--config", str(p), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "bad.ini:2" in err and "power of two" in err
    assert not (tmp_path / "o").exists()


def test_gate_failure_exit_code(tmp_path, capsys):
    p = tmp_path / "short.ini"
    p.write_text(FREE.replace("family = zero", "family = gaussian\na = 0.3\nw = 2.0")
                 + "\n[scattering]\nT = 4\nband = 1.5, 3.0\ncentres = 0.0\nwidth = 1.5\n")
    assert main(["scatter", "--config", str(p), "--out", str(tmp_path / "o"), "--quiet"]) == 2
    assert "gate failure" in capsys.readouterr().err
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["status"] == "gate-fail" and rep["failed_gates"]


def test_module_error_has_hint(tmp_path, capsys):
    p = tmp_path / "coarse.ini"
    p.write_text("[grid]\nN = 32\nL = 8\n[potential]\nw = 1.2\na = 0.3\n")
    assert main(["certify-potential", "--config", str(p), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "UnderResolved" in err and "hint" in err
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["error"]["type"] == "UnderResolved"


def test_lap_scan_csv(tmp_path):
    p = tmp_path / "lap.ini"
    p.write_text("[grid]\nN = 128\nL = 32\n[potential]\nfamily = zero\n")
    assert main(["lap-scan", "--config", str(p), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    rows = read_csv(tmp_path / "o" / "lap_epsilon.csv")
    assert rows[0] == ["epsilon", "weighted_norm", "unweighted_norm", "extrapolant"]
    assert len(rows) > 3
    fits = read_csv(tmp_path / "o" / "exponent_fit.csv")
    assert fits[0] == ["N", "N1", "exponent", "predicted"] and len(fits) == 4


def test_empty_report_gives_headers(tmp_path):
    paths = emit_plotdata({}, tmp_path)
    assert len(paths) == len(PLOT_TABLES)
    for p in paths:
        assert len(read_csv(p)) == 1


def test_tail_error_exit_code(tmp_path, capsys):
    p = tmp_path / "early.ini"
    p.write_text(FREE.replace("family = zero", "family = gaussian\na = 0.5\nw = 2.0")
                 + "\n[scattering]\nT = 2\nband = 1.5, 3.0\n")
    assert main(["scatter", "--config", str(p), "--out", str(tmp_path / "o"), "--quiet"]) == 1
    assert "increase L or reduce T" in capsys.readouterr().err
