import json
import os

import numpy as np
import pytest
from randstop import cli
from randstop.config import RunConfig
from randstop.exceptions import EXIT_CONFIG_ERROR, EXIT_NUMERIC_FAULT, EXIT_OK, NumericFault
from randstop.oracle import european_reference
from randstop.readers import ResultReader, RunReader


@pytest.fixture
def config_file(tmpdir):
    config = {
        "model": {"dim": 2, "spot": 100.0, "maturity": 1.0, "num_dates": 3},
        "degree": 2,
        "train_paths": 2000,
        "eval_paths": 4000,
        "optimizer": {"max_iters": 30},
    }
    path = str(tmpdir / "small.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config, f)
    return path


def _read(path):
    with open(path, "rb") as f:
        return f.read()


def test_price_writes_artifacts(config_file, tmpdir):
    out = str(tmpdir / "run")
    assert cli.main(["--config", config_file, "--output", out, "--log-level", "WARNING"]) == EXIT_OK
    reader = RunReader.from_run_info(os.path.join(out, "run_info.json"))
    assert sorted(reader.info.file_list) == [
        "config.json", "fit_reports.json", "policy.json", "results.csv"
    ]
    (report,) = reader.results()
    assert report.num_paths == 4000 and report.train_paths == 2000
    assert report.run_id == reader.config().run_id
    assert report.wall_time is None
    assert len(reader.fit_reports()) == 3
    assert reader.policy().num_dates == 3


def test_results_are_byte_identical(config_file, tmpdir):
    first, second = str(tmpdir / "a"), str(tmpdir / "b")
    cli.main(["--config", config_file, "--output", first, "--threads", "1"])
    cli.main(["--config", config_file, "--output", second, "--threads", "3"])
    assert _read(os.path.join(first, "results.csv")) == _read(os.path.join(second, "results.csv"))


def test_resolved_config_reproduces_run(config_file, tmpdir):
    first, again = str(tmpdir / "a"), str(tmpdir / "again")
    cli.main(["--config", config_file, "--output", first])
    cli.main(["--config", os.path.join(first, "config.json"), "--output", again])
    assert _read(os.path.join(first, "results.csv")) == _read(os.path.join(again, "results.csv"))


def test_flags_override(config_file, tmpdir):
    out = str(tmpdir / "run")
    args = ["--config", config_file, "--output", out, "--method", "forward", "--link", "logistic"]
    args += ["--eval-mode", "hard", "--eval-paths", "1000", "--seed-eval", "77"]
    assert cli.main(args) == EXIT_OK
    (report,) = ResultReader(os.path.join(out, "results.csv"))
    assert report.link == "logistic"
    assert report.evaluation_mode.value == "hard_threshold"
    assert report.num_paths == 1000 and report.seed == 77
    assert RunConfig.from_json(os.path.join(out, "config.json")).method == "forward"


@pytest.mark.parametrize(
    "args,model",
    [
        (["--degree", "-1"], {}),
        (["--train-paths", "0"], {}),
        (["--sweep", "1000,1000"], {}),
        (["--reps", "0"], {}),
        ([], {"rate": "abc"}),
        ([], {"spot": "x"}),
        ([], {"vol": "high"}),
        ([], {"rate": float("nan")}),
    ],
)
def test_configuration_errors(config_file, tmpdir, capsys, args, model):
    with open(config_file, "r", encoding="utf-8") as f:
        config = json.load(f)
    config["model"].update(model)
    with open(config_file, "w", encoding="utf-8") as f:
        json.dump(config, f)
    code = cli.main(["--config", config_file, "--output", str(tmpdir / "x")] + args)
    assert code == EXIT_CONFIG_ERROR
    err = capsys.readouterr().err
    assert "configuration error" in err
    for name in model:
        assert f"model.{name}" in err


def test_missing_config_file(tmpdir):
    assert cli.main(["--config", str(tmpdir / "absent.json")]) == EXIT_CONFIG_ERROR


def test_numeric_fault_exit_code(config_file, tmpdir, monkeypatch):
    def _fault(config):
        raise NumericFault("non-finite gradient", 2)

    monkeypatch.setattr(cli, "run_price", _fault)
    assert cli.main(["--config", config_file, "--output", str(tmpdir / "x")]) == EXIT_NUMERIC_FAULT


def test_degenerate_sweep(config_file, tmpdir):
    out = str(tmpdir / "sweep")
    assert cli.main(["--config", config_file, "--output", out, "--sweep", "500", "--reps", "1"]) == 0
    with open(os.path.join(out, "sweep.csv"), encoding="utf-8") as f:
        lines = f.read().splitlines()
    assert lines[0] == ",".join(cli.SWEEP_COLUMNS)
    assert len(lines) == 2
    assert lines[1].startswith("rep,500,0,")


def test_sweep_summaries(config_file, tmpdir):
    config = RunConfig.from_json(
        config_file, {"output": str(tmpdir / "sweep"), "sweep": [200, 800], "reps": 2}
    )
    config.sweep_reference = 7.0
    points = cli.run_convergence_sweep(config)
    assert [p.train_paths for p in points] == [200, 800]
    for point in points:
        assert len(point.estimates) == 2
        assert point.mean_gap == pytest.approx(7.0 - np.mean(point.estimates))
    with open(os.path.join(str(tmpdir / "sweep"), "sweep.csv"), encoding="utf-8") as f:
        rows = [line.split(",")[0] for line in f.read().splitlines()[1:]]
    assert rows == ["rep", "rep", "summary", "rep", "rep", "summary"]


def test_single_interval_is_at_least_european(tmpdir):
    config = RunConfig.from_dict(
        {
            "model": {"dim": 2, "spot": 90.0, "maturity": 1.0, "num_dates": 1},
            "train_paths": 5000,
            "eval_paths": 20000,
            "output": str(tmpdir / "one"),
        }
    )
    report = cli.run_price(config)
    european = european_reference(config.market_model(), 20000, seed=5)
    assert report.estimate >= european.estimate - 3 * np.hypot(report.std_error, european.std_error)


def test_sweep_without_tree_reference(tmpdir):
    config = RunConfig.from_dict(
        {
            "model": {
                "dim": 1, "spot": 100.0, "maturity": 1.0, "num_dates": 3,
                "dates": [0.0, 0.2, 0.5, 1.0],
            },
            "degree": 1,
            "eval_paths": 1000,
            "optimizer": {"max_iters": 10},
            "sweep": [300],
            "reps": 2,
            "output": str(tmpdir / "sweep"),
        }
    )
    (point,) = cli.run_convergence_sweep(config)
    # the reference is the mean estimate at the only training size
    assert point.mean_gap == pytest.approx(0.0, abs=1e-12)


def test_summary_goes_to_stdout(config_file, tmpdir, capsys):
    out = str(tmpdir / "run")
    assert cli.main(["--config", config_file, "--output", out, "--log-level", "WARNING"]) == EXIT_OK
    run_id = RunConfig.from_json(os.path.join(out, "config.json")).run_id
    (line,) = capsys.readouterr().out.splitlines()
    assert line.startswith(f"{run_id} expectation: ")
