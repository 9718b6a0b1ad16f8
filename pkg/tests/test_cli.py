import numpy as np

from dagmiqp.cli import main
from dagmiqp.io import read_edge_list, read_manifest


def test_gen_solve_eval(tmp_path, capsys):
    inst_dir = tmp_path / "inst"
    assert main(["gen", "--d", "5", "--n", "200", "--edge-factor", "1", "--seed", "2",
                 "--output-dir", str(inst_dir)]) == 0
    out = tmp_path / "out"
    assert main(["solve", "--input", str(inst_dir), "--output-dir", str(out), "--lambda", "1"]) == 0
    report = read_manifest(out / "report.txt")
    assert report["status"] in ("optimal", "gap-reached")
    assert float(report["shd"]) == 0
    for name in ("solution.csv", "solution_raw.csv", "trajectory.csv"):
        assert (out / name).exists()
    est = read_edge_list(out / "solution.csv", d=5)
    truth = read_edge_list(inst_dir / "truth.csv", d=5)
    assert np.array_equal(est != 0, truth != 0)
    capsys.readouterr()
    assert main(["eval", "--input", str(out / "solution.csv"), "--truth", str(inst_dir / "truth.csv"),
                 "--d", "5"]) == 0
    assert "shd=0" in capsys.readouterr().out


def test_solve_plain_csv_with_truth(tmp_path):
    inst_dir = tmp_path / "inst"
    main(["gen", "--d", "4", "--n", "100", "--edge-factor", "1", "--output-dir", str(inst_dir)])
    out = tmp_path / "out"
    code = main(["solve", "--input", str(inst_dir / "data.csv"), "--truth", str(inst_dir / "truth.csv"),
                 "--output-dir", str(out), "--mode", "ls", "--variant", "1"])
    assert code == 0
    assert "f1" in read_manifest(out / "report.txt")


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert main(["solve", "--input", str(bad), "--output-dir", str(tmp_path / "o")]) == 2
    assert "row 2" in capsys.readouterr().err


def test_no_incumbent_exit_code(tmp_path):
    inst_dir = tmp_path / "inst"
    main(["gen", "--d", "6", "--n", "100", "--output-dir", str(inst_dir), "--edge-factor", "1"])
    code = main(["solve", "--input", str(inst_dir), "--output-dir", str(tmp_path / "o"), "--time-limit", "1e-9"])
    assert code == 3


def test_tune_and_bench(tmp_path, capsys):
    inst_dir = tmp_path / "inst"
    main(["gen", "--d", "4", "--n", "100", "--edge-factor", "1", "--output-dir", str(inst_dir)])
    assert main(["tune", "--input", str(inst_dir / "data.csv"), "--output-dir", str(tmp_path / "t"),
                 "--lambda-grid", "1,0.1", "--time-limit", "2"]) == 0
    lines = (tmp_path / "t" / "tune.csv").read_text().splitlines()
    assert lines[0] == "rank,lambda,rate,gap,wall_time,status" and len(lines) == 3
    assert main(["bench", "--d", "4", "--n", "100", "--edge-factor", "1", "--reps", "2", "--lambda", "1",
                 "--output-dir", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "metrics.csv").exists() and (tmp_path / "b" / "aggregate.csv").exists()
    assert "mean shd" in capsys.readouterr().out
