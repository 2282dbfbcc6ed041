import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bidisperse import cli, io
from bidisperse import hugoniot as hg
from bidisperse import model as mc


def run(tmp_path, *argv):
    return cli.main([*argv, "--out-dir", str(tmp_path)])


def manifest(tmp_path):
    return io.RunManifest.read(tmp_path / "manifest.json")


# ---------------------------------------------------------------- io

@given(x=st.floats(allow_nan=False, allow_infinity=False))
def test_csv_floats_round_trip(tmp_path_factory, x):
    path = tmp_path_factory.mktemp("csv") / "v.csv"
    io.write_csv(path, ["x", "flag", "n"], [(x, True, 3)])
    header, rows = io.read_csv(path)
    assert header == ["x", "flag", "n"]
    assert float(rows[0][0]) == x and rows[0][1:] == ["true", "3"]


def test_json_handles_numpy(tmp_path):
    path = io.write_json(tmp_path / "a.json", {"a": np.float64(0.1), "b": np.arange(3), "c": np.bool_(True),
                                               "d": (1, 2)})
    assert json.loads(path.read_text()) == {"a": 0.1, "b": [0, 1, 2], "c": True, "d": [1, 2]}


def test_svg_is_deterministic():
    def draw():
        plot = io.PhasePlot(title="t")
        plot.shock_segments([(0.1, 0.0), (0.2, 0.0), (0.3, 0.0)], ["Lax2", "Lax2", "OverCompressive"])
        plot.point((0.2, 0.2), label="s")
        return plot.render()
    first = draw()
    assert first == draw()
    assert first.startswith("<svg") and 'stroke-dasharray="8,3,2,3"' in first


def test_manifest_round_trip(tmp_path):
    m = io.RunManifest("eigen", mc.preset("example2"), {"state": [0.1, 0.2]}, ["eigen.json"], {"phi_star": 0.2})
    m.write(tmp_path / "manifest.json")
    back = io.RunManifest.read(tmp_path / "manifest.json")
    assert back.to_dict() == m.to_dict()


# ---------------------------------------------------------------- cli

def test_eigen_state(tmp_path, capsys):
    assert run(tmp_path, "eigen", "--state", "0,0") == 0
    data = json.loads((tmp_path / "eigen.json").read_text())
    assert data["lambda_1"] == pytest.approx(0.5) and data["lambda_2"] == pytest.approx(1.0)
    m = manifest(tmp_path)
    assert m.command == "eigen" and "eigen.json" in m.outputs
    assert m.derived["phi_star"] == pytest.approx(0.5)
    assert json.loads(capsys.readouterr().out.strip().splitlines()[-1]) == m.results


def test_eigen_grid(tmp_path):
    assert run(tmp_path, "eigen", "--grid", "5", "--preset", "example2") == 0
    header, rows = io.read_csv(tmp_path / "eigen.csv")
    assert header[:2] == ["phi1", "phi2"] and len(rows) > 0


def test_locus_origin(tmp_path):
    assert run(tmp_path, "locus", "--base", "0,0", "--resolution", "50") == 0
    header, rows = io.read_csv(tmp_path / "locus.csv")
    assert header == ["branch", "phi1", "phi2", "sigma", "class", "char_flags"]
    assert {r[0] for r in rows} == {"axis1", "axis2", "contact_star", "contact_max"}
    assert (tmp_path / "locus.svg").exists()


def test_classify(tmp_path, capsys):
    assert run(tmp_path, "classify", "--left", "0,0", "--right", "0.3,0") == 0
    data = json.loads((tmp_path / "classify.json").read_text())
    assert data["kind"] == hg.OVERCOMPRESSIVE
    assert data["sigma"] == pytest.approx(0.7 ** 4, abs=1e-14)
    capsys.readouterr()
    assert run(tmp_path, "classify", "--left", "0,0", "--right", "0.2,0.25") == cli.EXIT_STATE


def test_riemann_origin(tmp_path):
    assert run(tmp_path, "riemann", "--left", "0,0", "--right", "0.2,0.25", "--samples", "51") == 0
    sol = json.loads((tmp_path / "solution.json").read_text())
    assert sol["pattern"] == "S S"
    _, rows = io.read_csv(tmp_path / "profile.csv")
    assert len(rows) == 51


def test_riemann_to_max(tmp_path):
    assert run(tmp_path, "riemann", "--left", "0.2,0.2", "--to-max", "--preset", "example2", "--no-svg") == 0
    sol = json.loads((tmp_path / "solution.json").read_text())
    assert sol["pattern"] == "S| R |S| R" and sol["crossings"] == ["B"]
    assert not (tmp_path / "solution.svg").exists()


def test_riemann_unresolved_exit_code(tmp_path):
    code = run(tmp_path, "riemann", "--left", "0.054,0.612", "--to-max", "--preset", "example2")
    assert code == cli.EXIT_UNRESOLVED


def test_state_outside_phase_space(tmp_path):
    assert run(tmp_path, "eigen", "--state", "0.8,0.8") == cli.EXIT_STATE


def test_invalid_params_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"v_inf": [0.5, 1.0], "n": [4, 3]}))
    assert run(tmp_path, "report", "--params", str(bad)) == cli.EXIT_PARAMS
    bad.write_text("{not json")
    assert run(tmp_path, "report", "--params", str(bad)) == cli.EXIT_PARAMS


def test_simulate_with_snapshots(tmp_path):
    code = run(tmp_path, "simulate", "--right", "0.2,0.25", "--domain=-0.025,0.125", "--cells", "200",
               "--t-end", "0.2", "--snapshot", "0.1", "--compare")
    assert code == 0
    assert (tmp_path / "snapshot_t0.1.csv").exists()
    res = manifest(tmp_path).results
    assert all(e <= 0.05 for e in res["l1_error"])


def test_simulate_batch(tmp_path):
    code = run(tmp_path, "simulate", "--batch", "0.2,0.25", "--domain=-0.2,1.2", "--cells", "140",
               "--t-end", "0.1")
    assert code == 0


def test_report(tmp_path):
    assert run(tmp_path, "report", "--preset", "example2") == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["validation"]["valid"]
    assert data["derived"]["phi_star"] == pytest.approx(1 - 0.5 ** (1 / 3.1))


@pytest.mark.parametrize("kind", ["discriminant", "inflection", "classification"])
def test_map_kinds(tmp_path, kind):
    assert run(tmp_path, "map", "--kind", kind, "--resolution", "40", "--preset", "example2") == 0
    assert (tmp_path / f"{kind}.csv").exists()


def test_repeat_runs_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["locus", "--base", "0,0", "--resolution", "40", "--out-dir", str(d)]) == 0
    for name in ("locus.csv", "locus.svg", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert not math.isnan(manifest(a).derived["phi_sigma"])
