import json

import numpy as np
import pytest

from occtk.cli import main
from occtk.io import read_occ


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("scene")
    assert main(["synth", "--out", str(d), "--seed", "2", "--report", str(d / "synth_report.json")]) == 0
    return d


def test_synth_generate_eval_round(scene_dir, tmp_path, capsys):
    rep = report(capsys, "generate", "--manifest", scene_dir / "manifest.json", "--out", tmp_path / "g",
                 "--gen-config", scene_dir / "generation.json")
    assert len(rep["result"]["outputs"]) == 3
    assert (tmp_path / "g" / "generation_meta.json").exists()
    assert set(rep["versions"]) >= {"occtk", "numpy", "python"} and rep["seconds"] >= 0
    ev = report(capsys, "eval-occ", "--pred", tmp_path / "g", "--gt", scene_dir / "gt")
    assert ev["result"]["mask_policy"] == "visible_only"
    assert ev["result"]["metrics"]["miou"] == 1.0 and ev["result"]["metrics"]["iou_geo"] == 1.0
    assert set(ev["result"]["by_policy"]) == {"all", "visible_only"}
    ev_all = report(capsys, "eval-occ", "--pred", tmp_path / "g", "--gt", scene_dir / "gt", "--eval-all")
    assert ev_all["result"]["mask_policy"] == "all"


def test_self_comparison_is_perfect(scene_dir, capsys):
    gt = sorted((scene_dir / "gt").glob("*.occ"))[0]
    ev = report(capsys, "eval-occ", "--pred", gt, "--gt", gt)
    assert ev["result"]["metrics"]["miou"] == 1.0 and ev["result"]["metrics"]["iou_geo"] == 1.0


def test_generate_threads_byte_identical(scene_dir, tmp_path, capsys):
    for n in (1, 4):
        report(capsys, "generate", "--manifest", scene_dir / "manifest.json", "--out", tmp_path / str(n),
               "--gen-config", scene_dir / "generation.json", "--threads", n)
    for a in sorted((tmp_path / "1").glob("*.occ")):
        assert a.read_bytes() == (tmp_path / "4" / a.name).read_bytes()


def test_eval_seg_against_truth(scene_dir, capsys):
    rep = report(capsys, "eval-seg", "--manifest", scene_dir / "manifest.json", "--pred", scene_dir / "gt")
    assert rep["result"]["frames"] == 3 and rep["result"]["metrics"]["miou"] == 1.0


def test_stats_tables(scene_dir, capsys):
    rep = report(capsys, "stats", "--occ", scene_dir / "gt")["result"]
    fractions = [c["fraction_of_occupied"] for c in rep["per_class"].values()]
    assert abs(sum(fractions) - 1.0) < 1e-12
    assert len(rep["per_class"]) == 16
    moving = [c["moving_fraction"] for c in rep["per_class"].values() if c["voxels"]]
    assert all(m is not None and 0.0 <= m <= 1.0 for m in moving)


def test_plan_and_eval_plan(scene_dir, tmp_path, capsys):
    occ = sorted((scene_dir / "gt").glob("*.occ"))[0]
    rep = report(capsys, "plan", "--occ", occ, "--command", "forward", "--seed", 3, "--candidates", 32,
                 "--out", tmp_path / "plan.json")
    samples = rep["result"]["trajectory"]["samples"]
    assert samples[0]["t"] == 0.0 and len(samples) == 7
    assert rep["result"]["cost_report"]["command"] == "forward"
    again = report(capsys, "plan", "--occ", occ, "--seed", 3, "--candidates", 32)
    assert again["result"] == rep["result"]
    ev = report(capsys, "eval-plan", "--pred", tmp_path / "plan.json", "--gt", tmp_path / "plan.json",
                "--occ", occ)
    assert ev["result"]["l2"] == [0.0, 0.0, 0.0] and len(ev["result"]["collision_rate"]) == 3


def test_plan_from_boxes_and_raster(tmp_path, capsys, scene_dir):
    boxes = [{"center": [8, 0, 0], "size": [4, 2, 1.5], "yaw": 0, "class": "car", "track_id": "a"}]
    (tmp_path / "boxes.json").write_text(json.dumps(boxes))
    occ = sorted((scene_dir / "gt").glob("*.occ"))[0]
    rep = report(capsys, "plan", "--boxes", tmp_path / "boxes.json", "--like", occ)
    assert rep["result"]["cost_report"]["bev_source"] == "boxes"
    r = report(capsys, "raster", "--boxes", tmp_path / "boxes.json", "--like", occ, "--out", tmp_path / "b.npy")
    cells = np.load(tmp_path / "b.npy")
    assert cells.sum() == r["result"]["occupied_cells"] == 8 * 4
    assert tuple(r["result"]["dims"]) == read_occ(occ).spec.dims[:2]


def test_kernels_selftest_quick(capsys):
    code, out, err = run(capsys, "kernels-selftest", "--quick")
    assert code == 0 and json.loads(out)["result"]["passed"]
    assert err.count("[PASS]") == 5


def test_config_file_and_flag_precedence(tmp_path, capsys):
    (tmp_path / "cfg.json").write_text(json.dumps({"candidates": 8, "seed": 11, "w-progress": 2.0}))
    (tmp_path / "boxes.json").write_text("[]")
    rep = report(capsys, "plan", "--boxes", tmp_path / "boxes.json", "--config", tmp_path / "cfg.json",
                 "--seed", 5)
    assert rep["config"]["candidates"] == 8 and rep["config"]["seed"] == 5 and rep["config"]["w_progress"] == 2.0
    (tmp_path / "bad.json").write_text(json.dumps({"nonsense": 1}))
    code, _, err = run(capsys, "plan", "--boxes", tmp_path / "boxes.json", "--config", tmp_path / "bad.json")
    assert code == 1 and "nonsense" in json.loads(err)["message"]


def test_thread_count_from_environment(tmp_path, capsys, monkeypatch):
    (tmp_path / "boxes.json").write_text("[]")
    monkeypatch.setenv("OCCTK_THREADS", "3")
    assert report(capsys, "raster", "--boxes", tmp_path / "boxes.json", "--out", tmp_path / "x.npy")["config"][
        "threads"] == 3
    monkeypatch.setenv("OCCTK_THREADS", "zero")
    code, _, err = run(capsys, "raster", "--boxes", tmp_path / "boxes.json", "--out", tmp_path / "x.npy")
    assert code == 1 and json.loads(err)["error"] == "CliError"


def test_errors_are_structured(tmp_path, capsys):
    code, _, err = run(capsys, "eval-occ", "--pred", tmp_path / "missing.occ", "--gt", tmp_path / "missing.occ")
    assert code == 1
    e = json.loads(err)
    assert e["command"] == "eval-occ" and "missing.occ" in e["message"]
    (tmp_path / "bad.occ").write_bytes(b"garbage")
    code, _, err = run(capsys, "stats", "--occ", tmp_path / "bad.occ")
    assert code == 1 and json.loads(err)["error"] == "Occ1FormatError"


def test_unknown_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["stats", "--occ", "x", "--frobnicate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err
