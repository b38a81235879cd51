import json
import math

import numpy as np
import pytest

from lbspectra import cli
from lbspectra.config import ConfigError, dumps, from_dict, loads
from lbspectra.io import read_csv, read_matrix_binary, write_matrix_binary


def run(tmp_path, command, text, *extra):
    cfg = tmp_path / "run.toml"
    cfg.write_text(text)
    out = tmp_path / "out"
    code = cli.main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def column(path, name):
    header, rows = read_csv(path)
    i = header.index(name)
    return np.array([float(r[i]) for r in rows])


def test_config_round_trip():
    text = """
N = 64
V0 = 1e4
K = 5
[region]
label = "notch"
[region.tree]
op = "complement"
arg = { shape = "box", lo = [1.0, 1.0], hi = [2.0, 2.0] }
[geometry]
kind = "rectangle"
a1 = 2.0
a2 = 2.0
[options]
modes = 2
"""
    cfg = loads(text)
    again = loads(dumps(cfg))
    assert again.to_dict() == cfg.to_dict()
    assert again.domain().name == "notch"


@pytest.mark.parametrize("d,path", [
    ({}, "region"),
    ({"region": {"name": "nope"}}, "region.name"),
    ({"region": {"name": "l_shape"}, "N": 0}, "N"),
    ({"region": {"name": "l_shape"}, "N": 2.5}, "N"),
    ({"region": {"name": "l_shape"}, "V0": -1}, "V0"),
    ({"region": {"name": "l_shape"}, "resolution": [1, 4]}, "resolution"),
    ({"region": {"name": "l_shape"}, "seed": -3}, "seed"),
    ({"region": {"name": "l_shape"}, "colour": "red"}, "colour"),
    ({"region": {"name": "l_shape"}, "schema_version": 9}, "schema_version"),
    ({"region": {"tree": {"shape": "disk", "center": [0, 0], "radius": 1}}}, "geometry"),
    ({"region": {"tree": {"shape": "cap", "center": [0, 0, 1], "radius": 1}},
      "geometry": {"kind": "rectangle", "a1": 1, "a2": 1}}, "region"),
    ({"region": {"name": "l_shape"}, "truncation": "sphere"}, "truncation"),
])
def test_config_errors_name_the_field(d, path):
    with pytest.raises(ConfigError) as exc:
        from_dict(d)
    assert exc.value.path == path


def test_solve_writes_outputs(tmp_path):
    code, out = run(tmp_path, "solve", """
N = 100
K = 8
sample_resolution = [12, 10]
[region]
name = "l_shape"
[options]
modes = 3
dump_matrix = "binary"
""")
    assert code == 0
    lam = column(out / "spectrum.csv", "eigenvalue")
    assert len(lam) == 8 and np.all(np.diff(lam) >= 0)
    leak = column(out / "spectrum.csv", "leakage")
    assert np.all((leak >= 0) & (leak < 1e-3))
    assert sorted(p.name for p in (out / "modes").iterdir()) == [
        f"mode_{j:03d}.{e}" for j in range(3) for e in ("csv", "json")]
    block = json.loads((out / "modes" / "mode_000.json").read_text())
    assert block["shape"] == [12, 10] and len(block["values"]) == 12
    assert block["eigenvalue"] == pytest.approx(lam[0], rel=1e-15)
    H, V0, tag = read_matrix_binary(out / "hamiltonian.bin")
    assert H.shape == (100, 100) and V0 == 2.1e5 and tag == "rectangle"
    assert np.array_equal(H, H.T)
    meta = json.loads((out / "solve.json").read_text())
    assert meta["N"] == 100 and meta["region"] == "l_shape"


def test_csv_matrix_dump(tmp_path):
    code, out = run(tmp_path, "solve", 'N = 9\n[region]\nname = "l_shape"\n[options]\ndump_matrix = "csv"\nmodes = 0\n')
    assert code == 0
    header, rows = read_csv(out / "hamiltonian.csv")
    assert len(header) == 9 and len(rows) == 9


def test_binary_dump_round_trip(tmp_path, rng):
    A = rng.normal(size=(7, 7))
    write_matrix_binary(tmp_path / "m.bin", A, 123.5, "sphere")
    B, V0, tag = read_matrix_binary(tmp_path / "m.bin")
    assert np.array_equal(A, B) and V0 == 123.5 and tag == "sphere"
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + bytes(40))
    with pytest.raises(ValueError):
        read_matrix_binary(tmp_path / "bad.bin")


def test_solve_is_deterministic(tmp_path):
    text = 'N = 64\nK = 6\nsample_resolution = [8, 8]\n[region]\nname = "torus_asymmetric_holes"\n'
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    _, oa = run(a, "solve", text, "--deterministic")
    _, ob = run(b, "solve", text, "--deterministic")
    for name in ("spectrum.csv", "modes/mode_000.csv", "solve.json"):
        assert (oa / name).read_bytes() == (ob / name).read_bytes()


def test_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "solve", "N = 5\n")[0] == 2
    assert run(tmp_path, "solve", "not toml [[[")[0] == 2
    assert run(tmp_path, "solve", 'N = 4\n[region]\nname = "l_shape"\n[options]\ndump_matrix = "xml"\n')[0] == 2
    assert run(tmp_path, "solve", 'N = 4\n[region]\nname = "l_shape"\n', "--seed", str(2**64))[0] == 2
    assert cli.main(["solve", "--config", str(tmp_path / "missing.toml")]) == 2
    # V0 below pi^2 leaves no root to bracket
    code, _ = run(tmp_path, "convergence",
                  '[region]\nname = "l_shape"\n[options]\nmode = "interval"\nvalues = [5.0, 1e4]\n')
    assert code == 3
    with pytest.raises(SystemExit):
        cli.main(["frobnicate", "--config", "x"])
    assert "error" in capsys.readouterr().err


def test_fit_score_prefers_tight_host(tmp_path):
    code, out = run(tmp_path, "fit-score", """
N = 100
[region]
[region.tree]
shape = "disk"
center = [0.5, 0.5]
radius = 0.4
[geometry]
kind = "rectangle"
a1 = 1.0
a2 = 1.0
[options]
candidates = [{kind = "rectangle", a1 = 1.0, a2 = 1.0}, {kind = "rectangle", a1 = 2.0, a2 = 2.0}]
""")
    assert code == 0
    header, rows = read_csv(out / "fit_score.csv")
    assert header == ["geometry", "tau"]
    tight, loose = float(rows[0][1]), float(rows[1][1])
    assert rows[0][0] == "rectangle(1;1)"
    assert tight < loose


def test_interval_convergence(tmp_path):
    code, out = run(tmp_path, "convergence", '[region]\nname = "l_shape"\n[options]\nmode = "interval"\n')
    assert code == 0
    slope = json.loads((out / "convergence.json").read_text())["loglog_slope"]
    assert slope == pytest.approx(-0.5, abs=0.05)
    err = column(out / "convergence.csv", "abs_error")
    assert np.all(np.diff(err) < 0)


def test_full_domain_convergence_is_exact(tmp_path):
    code, out = run(tmp_path, "convergence", """
N = 36
[region]
[region.tree]
shape = "full"
[geometry]
kind = "rectangle"
a1 = 1.0
a2 = 2.0
[options]
parameter = "N"
values = [16, 36]
count = 5
""")
    assert code == 0
    assert np.all(column(out / "relative_error.csv", "mean") == 0.0)


def test_triangle_v0_sweep(tmp_path):
    code, out = run(tmp_path, "convergence", """
N = 400
[region]
name = "equilateral_triangle"
[options]
parameter = "V0"
values = [1e3, 1e4, 1e5]
count = 4
""")
    assert code == 0
    err = column(out / "relative_error.csv", "rel_err_1")
    # below the quadrature floor, a stiffer barrier moves lambda_1 towards the exact level
    assert err[0] > err[1] > err[2]
    lam = column(out / "convergence.csv", "lambda_1")
    assert np.all(np.diff(lam) > 0)


def test_stats_sources(tmp_path):
    code, out = run(tmp_path, "stats", '[region]\nname = "l_shape"\n[options]\nsource = "synthetic_poisson"\nn_gaps = 2000\n',
                    "--seed", "11")
    assert code == 0
    res = json.loads((out / "classification.json").read_text())
    assert res["label"] == "poisson_like" and res["n_gaps"] == 2000
    header, rows = read_csv(out / "histogram.csv")
    assert header[:3] == ["bin_left", "bin_right", "density"] and len(rows) == 20

    code, out = run(tmp_path, "stats", '[region]\nname = "l_shape"\n[options]\nsource = "synthetic_goe"\nn_gaps = 2000\n')
    assert json.loads((out / "classification.json").read_text())["label"] == "goe_like"

    with pytest.warns(UserWarning, match="splits"):
        code, out = run(tmp_path, "stats", 'N = 20\n[region]\nname = "hemisphere"\n[options]\nn_gaps = 10\n')
    assert code == 0
    assert "warning" in json.loads((out / "classification.json").read_text())

    assert run(tmp_path, "stats", '[region]\nname = "l_shape"\n[options]\nsource = "dice"\n')[0] == 2


def test_fd_compare_on_box(tmp_path):
    code, out = run(tmp_path, "fd-compare", """
N = 64
[region]
[region.tree]
shape = "full"
[geometry]
kind = "rectangle"
a1 = 1.0
a2 = 1.0
[options]
count = 4
fd_nodes = [40, 40]
""")
    assert code == 0
    fd = column(out / "fd_compare.csv", "fd")
    exact = column(out / "fd_compare.csv", "oracle")
    assert np.all(fd < exact) and np.all(np.abs(fd / exact - 1) < 0.01)
    np.testing.assert_allclose(column(out / "fd_compare.csv", "expansion"), exact, rtol=1e-14)
    info = json.loads((out / "fd_compare.json").read_text())
    assert abs(info["shift_error"]) < 1e-9

    assert run(tmp_path, "fd-compare", '[region]\nname = "hemisphere"\n')[0] == 2
