import json
import math
import subprocess
import sys

import numpy as np
import pytest

from mkcat import cli
from mkcat import fileformat as ff


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def gen(tmp_path, capsys):
    def make(kind, *opts):
        path = tmp_path / f"{kind}{len(opts)}.mkc"
        code, _, _ = run(capsys, "gen", kind, *opts, "--output", path)
        assert code == 0
        return path

    return make


def links_file(tmp_path, items):
    path = tmp_path / "links.mkc"
    ff.save(ff.from_links(items), path)
    return path


def test_gen_writes_a_valid_file(gen, capsys):
    code, out, _ = run(capsys, "validate", gen("cone", "--triangles", 6))
    assert code == 0
    assert "structure: pass" in out


def test_gen_to_stdout_parses(capsys):
    code, out, _ = run(capsys, "gen", "spiral-polygon")
    assert code == 0
    assert ff.parse(out).polygon is not None


@pytest.mark.parametrize("k, expect", [(7, 0), (5, 1)])
def test_link_check_exit_code(gen, capsys, k, expect):
    code, out, _ = run(capsys, "check", gen("cone", "--triangles", k), "--checks", "link", "--format", "machine")
    rep = json.loads(out)
    assert code == expect
    assert rep["results"][0]["status"] == ("pass" if expect == 0 else "fail")
    if expect:
        assert rep["results"][0]["witness"]


def test_cat_check_on_a_passing_cone(gen, capsys):
    code, out, _ = run(capsys, "check", gen("cone", "--triangles", 7), "--checks", "cat,slim",
                       "--samples", 40, "--triangles", 1, "--format", "machine")
    rep = json.loads(out)
    assert code == 0
    assert rep["results"][0]["magnitude"] <= cli.CAT_TOL
    assert rep["results"][1]["status"] == "info"


def test_machine_reports_are_byte_identical(gen, capsys):
    path = gen("cone", "--triangles", 7)
    args = ("check", path, "--checks", "link,cat", "--samples", 30, "--triangles", 1, "--seed", 4, "--format", "machine")
    a = run(capsys, *args)[1]
    b = run(capsys, *args)[1]
    assert a == b


def test_timing_is_outside_the_digest(gen, capsys):
    path = gen("torus")
    plain = json.loads(run(capsys, "gb-audit", path, "--format", "machine")[1])
    timed = json.loads(run(capsys, "gb-audit", path, "--format", "machine", "--timing")[1])
    assert "wall_time" not in plain and timed["wall_time"] >= 0.0
    assert plain["digest"] == timed["digest"]


def test_gb_audit_on_torus(gen, capsys):
    code, out, _ = run(capsys, "gb-audit", gen("torus"), "--format", "machine")
    r = json.loads(out)["results"][0]
    assert code == 0
    assert r["euler_characteristic"] == 0 and r["magnitude"] <= 1e-9


def test_geodesic_on_cone(gen, capsys):
    code, out, _ = run(capsys, "geodesic", gen("cone", "--triangles", 7), "--from", "t0:r0", "--to", "t0:r1",
                       "--format", "machine")
    assert code == 0
    assert json.loads(out)["results"][0]["length"] == pytest.approx(1.0, abs=1e-9)


def test_geodesic_between_polygon_vertices(gen, capsys):
    code, out, _ = run(capsys, "geodesic", gen("notched-polygon"), "--from", 2, "--to", 4, "--format", "machine")
    r = json.loads(out)["results"][0]
    assert code == 0 and r["chord_inside"] is False


def test_crescent_hull_trace(gen, capsys, tmp_path):
    fig = tmp_path / "hull.png"
    code, out, _ = run(capsys, "crescent-hull", gen("spiral-polygon"), "--format", "machine", "--figure", fig)
    rep = json.loads(out)
    assert code == 0
    assert [it["level"] for it in rep["trace"]] == [1, 0]
    assert rep["results"][0]["convex"] is True
    assert fig.stat().st_size > 0


def test_crescent_hull_rejects_mark_in_the_pocket(tmp_path, capsys):
    text = ff.emit(ff.parse(cli.cmd_gen(cli.build_parser().parse_args(["gen", "notched-polygon"]))))
    path = tmp_path / "m.mkc"
    path.write_text(text + "mark 0.0 0.4\n")
    code, out, _ = run(capsys, "crescent-hull", path, "--format", "machine")
    assert code == 1
    r = json.loads(out)["results"][0]
    assert r["status"] == "fail" and r["note"].startswith("mark-outside")


def test_classify_links(tmp_path, capsys):
    ring = np.array([[math.cos(t), math.sin(t), -0.5] for t in np.linspace(0, 2 * math.pi, 6, endpoint=False)])
    ring /= np.linalg.norm(ring, axis=1, keepdims=True)
    path = links_file(tmp_path, [("corner", ring, np.array([0.0, 0.0, 1.0]))])
    code, out, _ = run(capsys, "check", path, "--format", "machine")
    rep = json.loads(out)
    assert code == 0
    names = [r["name"] for r in rep["results"]]
    assert names == ["classify corner", "two-convex"]
    assert rep["results"][0]["vertex_class"] == "Convex"


def test_concave_link_fails_two_convexity(tmp_path, capsys):
    ring = np.array([[math.cos(t), math.sin(t), 0.5] for t in np.linspace(0, 2 * math.pi, 6, endpoint=False)])
    ring /= np.linalg.norm(ring, axis=1, keepdims=True)
    path = links_file(tmp_path, [("pit", ring, np.array([0.0, 0.0, 1.0]))])
    code, out, _ = run(capsys, "check", path, "--checks", "two-convex", "--format", "machine")
    assert code == 1
    assert json.loads(out)["results"][0]["failing_link"] == "pit"


@pytest.mark.parametrize("cmd, fig", [("gb-audit", "gb.svg"), ("check", "link.png")])
def test_figures_are_written(gen, capsys, tmp_path, cmd, fig):
    out = tmp_path / fig
    extra = ["--checks", "link"] if cmd == "check" else []
    code, _, _ = run(capsys, cmd, gen("cone", "--triangles", 7), *extra, "--figure", out)
    assert code == 0 and out.stat().st_size > 0


def test_usage_errors_exit_two(gen, capsys, tmp_path):
    assert run(capsys, "validate", tmp_path / "missing.mkc")[0] == 2
    bad = tmp_path / "bad.mkc"
    bad.write_text("mkcat 1\ncurvature -1\nbogus\n")
    code, _, err = run(capsys, "validate", bad)
    assert code == 2 and "line 3" in err
    assert run(capsys, "check", gen("torus"), "--checks", "nope")[0] == 2
    assert run(capsys, "gen", "notched-polygon", "--depth", 1.5)[0] == 2
    with pytest.raises(SystemExit) as ex:
        cli.main(["frobnicate"])
    assert ex.value.code == 2


def test_invalid_complex_is_reported_by_validate(tmp_path, capsys):
    path = tmp_path / "deg.mkc"
    path.write_text("mkcat 1\ncurvature -1\nsimplex t0 2 a b c | a-b=1 a-c=1 b-c=3\n")
    code, out, _ = run(capsys, "validate", path, "--format", "machine")
    rep = json.loads(out)
    assert code == 1
    assert rep["results"][0]["name"] == "line 3"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "mkcat.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("mkcat ")
