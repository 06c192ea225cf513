"""Command-line flows: full pipeline, exit codes, determinism."""

import json

import pytest

from conftest import make_hover_scenario

from aquafix.cli import main
from aquafix.simulator import save_scenario


@pytest.fixture
def scenario_path(tmp_path):
    from aquafix import NoiseModel
    cfg = make_hover_scenario(
        seed=123, frames=30,
        robots=((0.0, 28.867513459481287), (25.0, 40.0)),
        labels=["east", "west"],
        noise=NoiseModel(gnss_sigma_m=0.5, pixel_sigma_px=1.0))
    path = tmp_path / "scenario.json"
    save_scenario(cfg, path)
    return path


def _run_pipeline(tmp_path, scenario_path, out_name):
    data = tmp_path / out_name / "data"
    est = tmp_path / out_name / "est"
    trk = tmp_path / out_name / "trk"
    ev = tmp_path / out_name / "ev"
    assert main(["simulate", "--scenario", str(scenario_path),
                 "--out", str(data)]) == 0
    assert main(["estimate", "--telemetry", str(data / "telemetry.csv"),
                 "--detections", str(data / "detections.csv"),
                 "--out", str(est)]) == 0
    assert main(["track", "--telemetry", str(data / "telemetry.csv"),
                 "--detections", str(data / "detections.csv"),
                 "--out", str(trk), "--gate-m", "15"]) == 0
    assert main(["evaluate", "--tracks", str(trk / "tracks.csv"),
                 "--truth", str(data / "truth.csv"),
                 "--fixes", str(est / "fixes.csv"),
                 "--out", str(ev)]) == 0
    return data, est, trk, ev


def test_full_pipeline_produces_all_outputs(tmp_path, scenario_path):
    data, est, trk, ev = _run_pipeline(tmp_path, scenario_path, "run")
    assert (data / "manifest.json").exists()
    assert (est / "fixes.csv").read_text(encoding="utf-8").count("\n") == 61
    assert (trk / "tracks.csv").exists()
    summary = json.loads((ev / "summary.json").read_text(encoding="utf-8"))
    assert summary["frames_evaluated"] == 60
    assert summary["overall"]["mean_m"] < 5.0
    assert set(summary["per_track"]) == {"0", "1"}


def test_pipeline_is_deterministic_across_runs(tmp_path, scenario_path):
    first = _run_pipeline(tmp_path, scenario_path, "a")
    second = _run_pipeline(tmp_path, scenario_path, "b")
    for dir_a, dir_b in zip(first, second):
        files_a = sorted(p for p in dir_a.rglob("*") if p.is_file())
        files_b = sorted(p for p in dir_b.rglob("*") if p.is_file())
        assert [p.name for p in files_a] == [p.name for p in files_b]
        for pa, pb in zip(files_a, files_b):
            assert pa.read_bytes() == pb.read_bytes(), pa.name


def test_estimate_with_empty_detections_writes_header_only(tmp_path, scenario_path):
    data = tmp_path / "data"
    assert main(["simulate", "--scenario", str(scenario_path),
                 "--out", str(data)]) == 0
    empty = tmp_path / "empty.csv"
    empty.write_text("frame_id,class_id,cx_px,cy_px,w_px,h_px,confidence\n",
                     encoding="utf-8")
    out = tmp_path / "est"
    assert main(["estimate", "--telemetry", str(data / "telemetry.csv"),
                 "--detections", str(empty), "--out", str(out)]) == 0
    text = (out / "fixes.csv").read_text(encoding="utf-8")
    assert text.splitlines() == [
        "frame_id,detection_index,lat_deg,lon_deg,theta_x_deg,theta_y_deg,"
        "d_forward_m,d_lateral_m,bearing_offset_deg,ground_range_m,dn_m,de_m,error"]


def test_missing_column_exits_2_and_names_it(tmp_path, scenario_path, capsys):
    data = tmp_path / "data"
    main(["simulate", "--scenario", str(scenario_path), "--out", str(data)])
    crippled = tmp_path / "bad.csv"
    lines = (data / "telemetry.csv").read_text(encoding="utf-8").splitlines()
    header = lines[0].replace("heading_deg,", "")
    rows = [",".join(line.split(",")[:5] + line.split(",")[6:]) for line in lines[1:]]
    crippled.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    code = main(["estimate", "--telemetry", str(crippled),
                 "--detections", str(data / "detections.csv"),
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert "heading_deg" in capsys.readouterr().err


def test_missing_input_file_exits_1(tmp_path):
    code = main(["estimate", "--telemetry", str(tmp_path / "absent.csv"),
                 "--detections", str(tmp_path / "absent2.csv"),
                 "--out", str(tmp_path / "o")])
    assert code == 1


def test_evaluate_without_overlapping_truth_exits_2(tmp_path, scenario_path, capsys):
    data, _, trk, _ = _run_pipeline(tmp_path, scenario_path, "run")
    far = tmp_path / "far_truth.csv"
    far.write_text("robot_label,lat_deg,lon_deg,valid_from_frame,valid_to_frame\n"
                   "ghost,13.30,-59.50,0,29\n", encoding="utf-8")
    code = main(["evaluate", "--tracks", str(trk / "tracks.csv"),
                 "--truth", str(far), "--out", str(tmp_path / "ev2")])
    assert code == 2
    assert "no overlapping truth" in capsys.readouterr().err


def test_evaluate_with_explicit_matching(tmp_path, scenario_path):
    data, _, trk, _ = _run_pipeline(tmp_path, scenario_path, "run")
    out = tmp_path / "ev_explicit"
    assert main(["evaluate", "--tracks", str(trk / "tracks.csv"),
                 "--truth", str(data / "truth.csv"),
                 "--match", "east=0", "--match", "west=1",
                 "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["frames_evaluated"] == 60


def test_estimate_accepts_yolo_labels(tmp_path, scenario_path):
    data = tmp_path / "data"
    assert main(["simulate", "--scenario", str(scenario_path), "--out", str(data),
                 "--labels-format", "yolo-normalized"]) == 0
    out = tmp_path / "est"
    assert main(["estimate", "--telemetry", str(data / "telemetry.csv"),
                 "--detections", str(data / "labels"),
                 "--detections-format", "yolo-normalized",
                 "--out", str(out)]) == 0
    assert (out / "fixes.csv").read_text(encoding="utf-8").count("\n") == 61


def test_estimate_threads_flag_keeps_order(tmp_path, scenario_path):
    data = tmp_path / "data"
    main(["simulate", "--scenario", str(scenario_path), "--out", str(data)])
    serial = tmp_path / "serial"
    threaded = tmp_path / "threaded"
    main(["estimate", "--telemetry", str(data / "telemetry.csv"),
          "--detections", str(data / "detections.csv"), "--out", str(serial)])
    main(["estimate", "--telemetry", str(data / "telemetry.csv"),
          "--detections", str(data / "detections.csv"), "--out", str(threaded),
          "--threads", "4"])
    assert ((serial / "fixes.csv").read_bytes()
            == (threaded / "fixes.csv").read_bytes())


def test_sweep_cli_writes_tables(tmp_path, scenario_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--scenario", str(scenario_path),
                 "--param", "noise.gnss_sigma_m=0.0,1.0",
                 "--replicates", "2", "--gate-m", "25",
                 "--out", str(out)]) == 0
    sweep_text = (out / "sweep.csv").read_text(encoding="utf-8")
    assert sweep_text.count("\n") == 5  # header + 2 cells x 2 replicates
    assert (out / "sweep_summary.csv").exists()


def test_bench_rejects_zero_frames(tmp_path, capsys):
    assert main(["bench", "--frames", "0", "--out", str(tmp_path / "b")]) == 2
    assert "at least one frame" in capsys.readouterr().err


def test_paper_verbatim_convention_flag_changes_fixes(tmp_path, scenario_path):
    data = tmp_path / "data"
    main(["simulate", "--scenario", str(scenario_path), "--out", str(data)])
    a = tmp_path / "corrected"
    b = tmp_path / "verbatim"
    main(["estimate", "--telemetry", str(data / "telemetry.csv"),
          "--detections", str(data / "detections.csv"), "--out", str(a)])
    main(["estimate", "--telemetry", str(data / "telemetry.csv"),
          "--detections", str(data / "detections.csv"), "--out", str(b),
          "--convention", "paper-verbatim"])
    assert (a / "fixes.csv").read_bytes() != (b / "fixes.csv").read_bytes()
