import json

import jsonschema
import pytest

from thinframe import cli
from thinframe import random_walk as rw


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_torus_distance_command(capsys):
    code, out, _ = run(capsys, "torus", "dist", "--tau1", "i", "--tau2", "2i")
    assert code == 0
    doc = json.loads(out)
    assert round(doc["result"]["distance"], 6) == 0.346574
    jsonschema.validate(doc, cli.SCHEMAS["torus"])


def test_global_flags_before_or_after_command(capsys):
    _, a, _ = run(capsys, "--seed", "7", "torus", "systole")
    _, b, _ = run(capsys, "torus", "systole", "--seed", "7")
    assert json.loads(a)["manifest"]["seed"] == json.loads(b)["manifest"]["seed"] == 7


def test_triangles_outputs_are_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        code, _, _ = run(capsys, "triangles", "--space", "euclidean", "--samples", "300",
                         "--bound", "sqrt2t", "--out", str(tmp_path / d))
        assert code == 0
    for name in ("triangles.json", "triangles_bins.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    doc = json.loads((tmp_path / "a" / "triangles.json").read_text())
    jsonschema.validate(doc, cli.SCHEMAS["triangles"])
    assert doc["report"]["violation_count"] == 0
    assert doc["manifest"]["outputs"] == ["triangles.json", "triangles_bins.csv"]


def test_sphere_family_reports_violations(capsys):
    code, out, _ = run(capsys, "triangles", "--space", "sphere", "--family", "theta", "--samples", "20")
    assert code == 0
    assert json.loads(out)["report"]["violation_count"] == 20


def test_surface_builtin_and_file(tmp_path, capsys):
    code, out, _ = run(capsys, "surface", "builtin:square_torus", "--saddles", "--length", "5",
                       "--intersect", "(1,2)", "(3,4)", "--epsilon", "0.5")
    doc = json.loads(out)
    assert code == 0
    assert doc["saddle_connections"]["count"] == 48
    assert doc["intersection"]["i"] == 2
    jsonschema.validate(doc, cli.SCHEMAS["surface"])
    f = tmp_path / "s.json"
    from thinframe import flat_surface as fs
    f.write_text(fs.l_shaped_surface().to_json())
    code, out, _ = run(capsys, "surface", str(f), "--systole")
    assert code == 0 and json.loads(out)["surface"]["genus"] == 2


def test_malformed_surface_is_a_domain_error(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text(json.dumps({"polygons": [[[0, 0], [1, 0], [1, 1], [0, 1]]],
                             "gluings": [[0, 0, 0, 2, "translation"]]}))
    code, out, err = run(capsys, "surface", str(f))
    assert code == 1
    assert "gluing incomplete" in err
    assert out == ""


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["triangles", "--space", "klein"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        cli.main(["frobnicate"])
    assert e.value.code == 2


def test_iet_commands(capsys):
    code, out, _ = run(capsys, "iet", "tall", "--H", "10", "--samples", "50")
    assert code == 0
    assert json.loads(out)["result"]["verified_min_height"] >= 10
    code, _, err = run(capsys, "iet", "tall", "--lengths", "1,1", "--perm", "2,1")
    assert code == 1 and "not minimal" in err
    code, out, _ = run(capsys, "iet", "keane", "--lengths", "1,2", "--perm", "2,1")
    assert json.loads(out)["result"]["status"] == "periodic"



def test_iet_inexact_lengths_with_rational_arguments(capsys):
    code, out, _ = run(capsys, "iet", "tall", "--lengths", "golden", "--H", "10",
                       "--heights", "1,2", "--samples", "50")
    assert code == 0
    assert json.loads(out)["result"]["verified_min_height"] >= 10
    code, out, _ = run(capsys, "iet", "return", "--lengths", "golden", "--section", "0.618")
    assert code == 0

def test_walk_run_writes_csv_and_summary(tmp_path, capsys):
    cfg = tmp_path / "walk.json"
    cfg.write_text(json.dumps(rw.uniform_walk(1500, seed=0, paths=3).to_dict()))
    out_dir = tmp_path / "out"
    code, out, err = run(capsys, "walk", "run", "--config", str(cfg), "--out", str(out_dir),
                         "--progress", "--max-pairs", "10")
    assert code == 0
    assert "[walk]" in err
    doc = json.loads(out)
    jsonschema.validate(doc, cli.SCHEMAS["walk"])
    summ = doc["summary"]
    assert summ["A_hat"] > 0
    assert 0 <= summ["record_density"] <= 1
    assert [w["lo"] for w in summ["tracking_medians"]][:3] == [1, 2, 4]
    header = (out_dir / "walk_path_0000.csv").read_text().splitlines()[0]
    assert header == "n,a_n,s_n,chi_K,record_flag"
    assert len((out_dir / "walk_path_0002.csv").read_text().splitlines()) == 1502


def test_walk_seed_override_changes_digest(tmp_path, capsys):
    cfg = tmp_path / "walk.json"
    cfg.write_text(json.dumps(rw.uniform_walk(200, seed=0, paths=2).to_dict()))
    _, a, _ = run(capsys, "walk", "drift", "--config", str(cfg))
    _, b, _ = run(capsys, "walk", "drift", "--config", str(cfg), "--seed", "5")
    da, db = json.loads(a), json.loads(b)
    assert da["manifest"]["config_digest"] != db["manifest"]["config_digest"]
    assert db["manifest"]["seed"] == 5
    assert da["summary"]["A_hat"] != db["summary"]["A_hat"]


def test_plot_requires_out(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["--plot", "torus", "systole"])
    assert e.value.code == 2


def test_plots_are_written(tmp_path, capsys):
    code, _, _ = run(capsys, "triangles", "--space", "hyperbolic", "--samples", "100",
                     "--out", str(tmp_path), "--plot")
    assert code == 0
    assert (tmp_path / "triangles.png").stat().st_size > 1000
