import csv
import json
from pathlib import Path

import pytest

from nccompare import __version__
from nccompare.cli import main
from nccompare.experiments import (ExperimentConfig, Report, emit_report, parse_n_range, report_payload,
                                   run_experiment)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def read_csv(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.reader(lines))


@pytest.mark.parametrize("name", ["example1", "example3", "example4", "appendixC"])
def test_fixture_experiments_pass(name, tmp_path):
    assert main(["--experiment", name, "--out", str(tmp_path), "--format", "json"]) == 0
    doc = json.loads((tmp_path / f"{name}.json").read_text())
    assert doc["ok"] and doc["checks"]
    assert doc["version"] == __version__ and doc["seed"] == 0


def test_delay_fixture_report_values(tmp_path):
    main(["--experiment", "example4", "--out", str(tmp_path), "--format", "json"])
    doc = json.loads((tmp_path / "example4.json").read_text())
    checks = {c["check"]: c["observed"] for c in doc["checks"]}
    assert checks["L_IDNC"] == "24/13" and checks["L_RLNC"] == "35/13"
    assert abs(doc["extra"]["L_IDNC"] - 24 / 13) < 1e-12


def test_replay_fixture_report_values():
    rep = run_experiment(ExperimentConfig("appendixC"))
    obs = {c["check"]: c["observed"] for c in rep.checks}
    assert obs["semi_online"] == 5 and obs["fully_online"] == 4


def test_mismatch_gives_nonzero_exit(tmp_path, monkeypatch, capsys):
    import nccompare.experiments as ex

    def broken(cfg):
        return ex._fixture_report("example1", [ex._check("U_IDNC", 3, 4)])

    monkeypatch.setitem(ex._RUNNERS, "example1", broken)
    assert main(["--experiment", "example1", "--out", str(tmp_path)]) == 1
    assert "fixture mismatch in U_IDNC" in capsys.readouterr().err


def test_bad_arguments(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["--experiment", "fig9"])
    assert e.value.code != 0
    assert main(["--experiment", "fig2", "--trials", "0", "--out", str(tmp_path)]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["--experiment", "example1", "--out", str(blocker / "sub")]) == 2
    assert main(["--experiment", "custom", "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_n_range_parsing():
    assert parse_n_range("1:45:2") == (1, 45, 2)
    assert parse_n_range("3:7") == (3, 7, 1)
    with pytest.raises(ValueError):
        parse_n_range("1:2:3:4")
    with pytest.raises(ValueError):
        ExperimentConfig("fig5", n_range=(5, 1, 1))
    assert ExperimentConfig("fig5").n_values() == list(range(1, 46, 2))
    assert ExperimentConfig("fig1").n_trials == 1000 and ExperimentConfig("fig2").n_trials == 10_000


def test_fig2_csv_rows(tmp_path):
    assert main(["--experiment", "fig2", "--n-range", "2:6:2", "--trials", "30", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "fig2.csv")
    assert rows[0][:3] == ["N", "mean_U_IDNC", "mean_U_RLNC"]
    assert [r[0] for r in rows[1:]] == ["2", "4", "6"]


def test_fig5_columns(tmp_path):
    assert main(["--experiment", "fig5", "--n-range", "3:5:2", "--trials", "20", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "fig5.csv")
    assert rows[0] == ["N", "E_L_idnc", "E_L_rlnc"]
    assert len(rows) == 3


def test_fig1_last_point_is_one():
    rep = run_experiment(ExperimentConfig("fig1", trials=5, m0_step=50))
    m0, upper, lower, _, mean = rep.rows[-1]
    assert m0 == 190 and upper == lower == mean == 1
    assert rep.rows[0][1:] == [20, 20, 20, 20.0]


def test_fig3_and_fig4_shapes():
    rep = run_experiment(ExperimentConfig("fig3", trials=200, seed=3))
    assert rep.columns[0] == "V"
    assert sum(r[1] for r in rep.rows) == pytest.approx(1)
    assert sum(r[2] for r in rep.rows) == pytest.approx(1)
    rep = run_experiment(ExperimentConfig("fig4", trials=20))
    assert sorted({r[0] for r in rep.rows}) == [5, 15, 20, 30]
    for n in (5, 15, 20, 30):
        assert sum(r[2] for r in rep.rows if r[0] == n) == pytest.approx(1)


def test_custom_with_schedule(tmp_path):
    code = main(["--experiment", "custom", "--sfm", str(FIXTURES / "three_receivers.sfm"),
                 "--schedule", str(FIXTURES / "three_receivers.schedule"), "--out", str(tmp_path),
                 "--format", "json"])
    assert code == 0
    doc = json.loads((tmp_path / "custom.json").read_text())
    metrics = dict(doc["rows"])
    assert metrics["slots_semi_online"] == 5 and metrics["slots_fully_online"] == 4


def test_short_schedule_is_an_error(tmp_path):
    sched = tmp_path / "short.schedule"
    sched.write_text("3 2\nXX\nXX\nXX\n")
    code = main(["--experiment", "custom", "--sfm", str(FIXTURES / "three_receivers.sfm"),
                 "--schedule", str(sched), "--out", str(tmp_path)])
    assert code == 2


def test_json_round_trip_and_byte_identical_reruns(tmp_path):
    cfg = ExperimentConfig("fig2", n_range=(3, 4, 1), trials=15, seed=9, out=str(tmp_path), format="json")
    rep = run_experiment(cfg)
    path = emit_report(rep, cfg)
    first = path.read_bytes()
    assert json.loads(first) == json.loads(json.dumps(report_payload(rep, cfg)))
    emit_report(run_experiment(cfg), cfg)
    assert path.read_bytes() == first
    csv_path = emit_report(rep, cfg, "csv")
    text = csv_path.read_text()
    emit_report(run_experiment(cfg), cfg, "csv")
    assert csv_path.read_text() == text
    assert text.startswith("# fig2 version=")


def test_workers_do_not_change_results():
    one = run_experiment(ExperimentConfig("fig5", n_range=(4, 6, 2), trials=40, workers=1))
    many = run_experiment(ExperimentConfig("fig5", n_range=(4, 6, 2), trials=40, workers=8))
    assert one.rows == many.rows


def test_empty_report_rejected(tmp_path):
    cfg = ExperimentConfig("fig2", out=str(tmp_path))
    with pytest.raises(ValueError):
        emit_report(Report("fig2", ["N"], []), cfg)
