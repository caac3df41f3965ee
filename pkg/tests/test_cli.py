import subprocess
import sys

import numpy as np

from mimocast.cli import main
from mimocast.harness import read_csv


def run(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def test_topology(tmp_path, capsys):
    code, out = run(["topology", "--set", "n_nodes=5", "--figures", str(tmp_path)], capsys)
    assert code == 0
    text = out.out
    assert "# nodes" in text and "# links" in text and "# icg" in text
    assert len(text.split("# links")[1].split("# icg")[0].strip().splitlines()) == 5
    assert (tmp_path / "topology.png").stat().st_size > 0


def test_schedule(capsys):
    code, out = run(["schedule", "--set", "n_nodes=6", "--M", "2", "--ns", "3",
                     "--mode", "GPCSI"], capsys)
    assert code == 0
    assert "color\tmembers" in out.out
    assert "link\tfinal_power\tsinr\tsuccess" in out.out


def test_schedule_infeasible(capsys):
    code, out = run(["schedule", "--set", "n_nodes=12", "--ns", "1"], capsys)
    assert code == 1
    assert "infeasible" in out.out


def test_sweep_with_figures(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n_nodes = 6\nantennas = 2\nn_slots = 2,3\ngammas = 0.04\n"
                   "modes = OCSI,GPCSI\nrealizations = 2\n")
    csv = tmp_path / "out.csv"
    code, _ = run(["sweep", "--config", str(cfg), "--out", str(csv),
                   "--figures", str(tmp_path / "fig")], capsys)
    assert code == 0
    rows = read_csv(str(csv))
    assert len(rows) == 4
    assert {r["mode"] for r in rows} == {"OCSI", "GPCSI"}
    pngs = sorted(p.name for p in (tmp_path / "fig").iterdir())
    assert pngs == ["connectivity_M2_g0.04.png", "power_M2_g0.04.png"]
    # nine significant digits
    first = csv.read_text().splitlines()
    data = [l for l in first if not l.startswith("#")][1].split(",")
    assert all(len(v.replace(".", "").replace("-", "").lstrip("0")) <= 9
               for v in data if v not in ("OCSI", "GPCSI") and "e" not in v)


def test_bounds_vs_ns(tmp_path, capsys):
    code, out = run(["bounds", "--set", "antennas=1,2,4", "--set", "n_slots=2,3",
                     "--figures", str(tmp_path)], capsys)
    assert code == 0
    lines = out.out.strip().splitlines()
    assert lines[0] == "M,N_s,sinr_t,U_B,R2,R4,P_B"
    assert len(lines) == 1 + 6
    ub = {(int(l.split(",")[0]), int(l.split(",")[1])): float(l.split(",")[3]) for l in lines[1:]}
    assert ub[(4, 3)] >= ub[(2, 3)] >= ub[(1, 3)]
    assert (tmp_path / "bounds_M4.png").exists()


def test_bounds_vs_lambda(tmp_path, capsys):
    code, out = run(["bounds", "--x", "lambda", "--set", "antennas=2,3", "--points", "5",
                     "--lambda-lo", "1", "--figures", str(tmp_path)], capsys)
    assert code == 0
    lines = out.out.strip().splitlines()
    assert lines[0] == "lambda,cdf_M2,cdf_M3,avg_power_M2"
    vals = np.array([[float(x) for x in l.split(",")] for l in lines[1:]])
    assert np.all(np.diff(vals[:, 1]) >= 0) and np.all(np.diff(vals[:, 3]) <= 0)
    assert (tmp_path / "bounds.png").exists()


def test_bad_config_key(tmp_path, capsys):
    code, out = run(["topology", "--set", "nodes=5"], capsys)
    assert code == 2
    assert "unknown key" in out.err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mimocast", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "sweep" in proc.stdout
