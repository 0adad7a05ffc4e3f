import json
import subprocess
import sys

import numpy as np
import pytest

from ttkinetic.cases import CYLINDER_RADIUS, cylinder_config, setup_shock_case
from ttkinetic.cli import EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_OK, main
from ttkinetic.mesh import write_starcd
from ttkinetic.meshgen import cylinder_arrays
from ttkinetic.output import read_summary, read_vtk_cell_data


@pytest.fixture(scope="module")
def cyl_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cylmesh")
    v, c, bf, bg, _ = cylinder_arrays(CYLINDER_RADIUS, 4 * CYLINDER_RADIUS, 2, 4, 0.3 * CYLINDER_RADIUS)
    write_starcd(d, v, c, bf, bg)
    return d


def test_shock_dense_converges(tmp_path, capsys):
    out = tmp_path / "o"
    h = setup_shock_case(2.0, n_cells=10, n_v=8).params["length"] / 10
    ray = [str(v) for v in (0.0, h / 2, h / 2, 1.0, 0.0, 0.0)]
    # 16^3 quadrature leaves a slow mass drift near 1e-5 residual, so stop at 1e-4
    code = main(["shock", "--mach", "2", "--nv", "16", "--dense", "--cells", "10", "--scheme", "lusgs",
                 "--cfl", "1000", "--tol", "1e-4", "--ray", *ray, "--out", str(out)])
    assert code == EXIT_OK
    assert "converged after" in capsys.readouterr().out
    s = read_summary(out / "summary.txt")
    assert s["converged"] is True and s["solver"] == "dense"
    assert s["ray_samples"] == 10
    _, n_cells, data = read_vtk_cell_data(out / "solution.vtk")
    assert n_cells == 10
    assert data["n"][-1] > 2 * data["n"][0]
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["solver"]["scheme"] == "lusgs" and cfg["grid"]["n_v"] == 16


def test_not_converged_exit(tmp_path):
    code = main(["shock", "--nv", "8", "--cells", "4", "--max-iters", "2", "--dense", "--out", str(tmp_path)])
    assert code == EXIT_NOT_CONVERGED
    assert read_summary(tmp_path / "summary.txt")["iterations"] == 2


def test_tt_solver_run(tmp_path):
    code = main(["shock", "--nv", "8", "--cells", "4", "--max-iters", "3", "--out", str(tmp_path)])
    assert code == EXIT_NOT_CONVERGED
    s = read_summary(tmp_path / "summary.txt")
    assert s["solver"] == "tt" and s["compression_ratio"] > 1


@pytest.mark.parametrize("argv", [
    ["shock", "--mach", "0.5", "--nv", "8"],
    ["shock", "--cfl", "-1"],
    ["shock", "--scheme", "implicit"],
    ["cylinder"],
    ["bogus"],
])
def test_bad_flags_exit_1(tmp_path, argv, capsys):
    try:
        code = main(argv + ["--out", str(tmp_path)])
    except SystemExit as exc:
        code = exc.code
    assert code == EXIT_INPUT
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("text, msg", [
    ("{not json", "cannot read config"),
    ("[1, 2]", "JSON object"),
    ('{"case": "shock", "solver": {"speed": 1}}', "unknown keys"),
    ('{"case": "cylinder"}', "mesh"),
    ('{"case": "shock", "shock": {"mach": 2}, "solver": {"cfl": 0}}', "cfl"),
])
def test_malformed_config_exit_1(tmp_path, text, msg, capsys):
    p = tmp_path / "c.json"
    p.write_text(text)
    assert main(["custom", str(p), "--out", str(tmp_path / "o")]) == EXIT_INPUT
    assert msg in capsys.readouterr().err


def test_missing_mesh_exit_1(tmp_path, capsys):
    assert main(["cylinder", "--mesh", str(tmp_path / "none"), "--out", str(tmp_path)]) == EXIT_INPUT
    assert "error" in capsys.readouterr().err


def test_custom_reproduces_cylinder(tmp_path, cyl_dir):
    common = ["--nv", "32", "--max-iters", "2", "--dense"]
    assert main(["cylinder", "--mesh", str(cyl_dir), "--out", str(tmp_path / "a")] + common) == EXIT_NOT_CONVERGED
    cfg = cylinder_config(cyl_dir, n_v=32)
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["custom", str(cfg_path), "--out", str(tmp_path / "b")] + common) == EXIT_NOT_CONVERGED
    _, _, a = read_vtk_cell_data(tmp_path / "a" / "solution.vtk")
    _, _, b = read_vtk_cell_data(tmp_path / "b" / "solution.vtk")
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])


def test_config_round_trip(tmp_path):
    assert main(["shock", "--nv", "8", "--cells", "4", "--max-iters", "2", "--out", str(tmp_path / "a")]) == 2
    resolved = tmp_path / "a" / "config.json"
    assert main(["custom", str(resolved), "--out", str(tmp_path / "b")]) == 2
    assert (tmp_path / "b" / "config.json").read_text() == resolved.read_text()
    _, _, a = read_vtk_cell_data(tmp_path / "a" / "solution.vtk")
    _, _, b = read_vtk_cell_data(tmp_path / "b" / "solution.vtk")
    np.testing.assert_array_equal(a["T"], b["T"])


def test_console_entry_point_help():
    r = subprocess.run([sys.executable, "-m", "ttkinetic.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "shock" in r.stdout and "cylinder" in r.stdout and "custom" in r.stdout
