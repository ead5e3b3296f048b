import hashlib
import io
import json

import pytest

from irfkit.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from irfkit.covariance import IntrinsicCovariance
from irfkit.kriging import KrigingProblem
from irfkit.process import read_paths_csv

SMALL_GRID = ["--nfreq", "256", "--eps", "1e-3", "--T", "100"]


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def model_file(tmp_path):
    return _write(tmp_path / "model.json", {"family": "brownian", "C": 2.0, "cutoff": 100.0})


@pytest.fixture
def problem_file(tmp_path):
    p = KrigingProblem([0.0, 1.0, 2.5, 4.0], [0.3, -0.1, 0.8, 0.2], 2, IntrinsicCovariance.brownian(1.0), 0.1)
    return _write(tmp_path / "problem.json", p.to_dict())


def test_simulate_writes_paths_and_sidecar(tmp_path, model_file):
    out = tmp_path / "paths.csv"
    code = main(["--seed", "5", "simulate", "--model", model_file, "--n", "20", "--reps", "3", "--out", str(out)]
                + SMALL_GRID)
    assert code == EXIT_OK
    paths = read_paths_csv(io.StringIO(out.read_text()))
    assert len(paths) == 3 and all(p.n == 20 for p in paths)
    cfg = json.loads((tmp_path / "paths.csv.json").read_text())
    assert cfg["seed"] == 5 and cfg["reps"] == 3 and cfg["nfreq"] == 256
    assert cfg["model_record"]["d"] == 1


def test_simulate_to_stdout(capsys, model_file):
    assert main(["simulate", "--model", model_file, "--n", "4"] + SMALL_GRID) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "replicate,t,value" and len(lines) == 5


def test_difference_then_structfn(tmp_path, model_file):
    paths = tmp_path / "paths.csv"
    main(["simulate", "--model", model_file, "--n", "60", "--reps", "4", "--out", str(paths)] + SMALL_GRID)
    diffed = tmp_path / "d.csv"
    assert main(["difference", "--input", str(paths), "--d", "1", "--out", str(diffed)]) == EXIT_OK
    assert all(p.n == 59 for p in read_paths_csv(io.StringIO(diffed.read_text())))
    sf = tmp_path / "sf.csv"
    code = main(["structfn", "--input", str(paths), "--model", model_file, "--lags", "0,1,2", "--out", str(sf)]
                + SMALL_GRID)
    assert code == EXIT_OK
    rows = sf.read_text().splitlines()
    assert rows[0] == "h,empirical,se,theoretical"
    h, emp, se, theo = rows[1].split(",")
    assert float(h) == 0.0 and float(emp) > 0 and float(se) > 0
    assert float(theo) == pytest.approx(2.0, rel=1e-2)


def test_structfn_theoretical_only_leaves_empty_cells(capsys, model_file):
    assert main(["structfn", "--model", model_file, "--lags", "0"] + SMALL_GRID) == EXIT_OK
    row = capsys.readouterr().out.splitlines()[1]
    assert row.split(",")[1:3] == ["", ""]


def test_krige_with_kkt_check(tmp_path, problem_file, capsys):
    out = tmp_path / "k.csv"
    code = main(["krige", "--problem", problem_file, "--targets", "0.5,2.5,6", "--check-kkt", "--out", str(out)])
    assert code == EXIT_OK
    rows = out.read_text().splitlines()
    assert rows[0] == "t0,prediction,kriging_variance" and len(rows) == 4
    # t0 = 2.5 is an observation; the nugget makes this a smoother, not an interpolator
    assert abs(float(rows[2].split(",")[1]) - 0.8) < 0.5
    assert "kkt check" in capsys.readouterr().err


def test_measure_actions(tmp_path, capsys):
    assert main(["measure", "fd", "--d", "2", "--iota", "0.5"]) == EXIT_OK
    fd = json.loads(capsys.readouterr().out)
    assert fd["order"] == 2 and sorted(w for _, w in fd["atoms"]) == [-2.0, 1.0, 1.0]
    mfile = _write(tmp_path / "m.json", fd)
    assert main(["measure", "check", "--file", mfile, "--order", "2"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["allowable"] is True
    assert main(["measure", "construct", "--points", "0,1,3", "--order", "2"]) == EXIT_OK
    built = json.loads(capsys.readouterr().out)
    assert abs(sum(w for _, w in built["atoms"])) < 1e-12


def test_verify_small_suite(tmp_path, model_file):
    out = tmp_path / "v.json"
    code = main(["--seed", "1", "verify", "--model", model_file, "--shift-reps", "200", "--window-reps", "100",
                 "--n", "400", "--out", str(out)] + SMALL_GRID)
    report = json.loads(out.read_text())
    assert code == EXIT_OK and report["ok"]
    assert [e["name"] for e in report["suite"]] == [
        "shift_invariance", "differenced_stationarity", "underdifferenced_control", "negative_control"]


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--reps", "0"],
        ["structfn", "--lags", ""],
        ["difference", "--input", "/nonexistent/paths.csv"],
        ["krige"],
        ["bogus"],
        ["measure", "fd"],
    ],
)
def test_usage_errors_exit_2(argv, tmp_path, model_file):
    if argv[0] == "simulate":
        argv = argv + ["--model", model_file]
    assert main(argv) == EXIT_USAGE


def test_corrupted_model_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"d": 1, "fam')
    assert main(["simulate", "--model", str(bad)]) == EXIT_USAGE
    assert main(["simulate", "--model", _write(tmp_path / "m.json", {"d": 1, "family": "nope"})]) == EXIT_USAGE


def test_singular_system_exits_3(tmp_path):
    K = IntrinsicCovariance.tabulated([0.0, 10.0], [0.0, 0.0])
    p = KrigingProblem([0.0, 1.0, 2.0], [1.0, 2.0, 3.0], 1, K)
    assert main(["krige", "--problem", _write(tmp_path / "p.json", p.to_dict()), "--targets", "0.5"]) == EXIT_NUMERIC


def test_nonintegrable_model_exits_3(tmp_path):
    m = _write(tmp_path / "m.json", {"d": 0, "family": "power-law", "params": {"level": 1.0, "exponent": -1.0}})
    assert main(["simulate", "--model", m, "--n", "4"] + SMALL_GRID) == EXIT_NUMERIC


def test_config_precedence(tmp_path, model_file):
    cfg = _write(tmp_path / "cfg.json", {"seed": 11, "simulate": {"n": 7, "reps": 2}})
    out = tmp_path / "p.csv"
    main(["--config", cfg, "simulate", "--model", model_file, "--reps", "3", "--out", str(out)] + SMALL_GRID)
    side = json.loads((tmp_path / "p.csv.json").read_text())
    assert (side["seed"], side["n"], side["reps"]) == (11, 7, 3)
    bad = _write(tmp_path / "bad.json", {"simulate": {"nn": 7}})
    assert main(["--config", bad, "simulate", "--model", model_file]) == EXIT_USAGE


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_outputs_are_byte_identical_across_runs(tmp_path, model_file, problem_file):
    runs = [
        ["--seed", "3", "--jobs", "2", "simulate", "--model", model_file, "--n", "50", "--reps", "5"] + SMALL_GRID,
        ["krige", "--problem", problem_file, "--targets", "0.5,3"],
        ["measure", "construct", "--points", "0,0.5,2,3", "--order", "3"],
    ]
    for i, argv in enumerate(runs):
        digests = []
        for k in range(2):
            out = tmp_path / f"r{i}_{k}.out"
            assert main(argv + ["--out", str(out)]) == EXIT_OK
            digests.append(_digest(out))
        assert digests[0] == digests[1]
