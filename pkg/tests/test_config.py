import json

import pytest
from randstop.config import RunConfig
from randstop.exceptions import ConfigurationError
from randstop.policy import PolicyMode


@pytest.fixture
def config():
    return RunConfig.from_dict({"model": {"spot": 100.0}, "train_paths": 1000, "eval_paths": 2000})


def test_defaults(config):
    assert config.model["spot"] == 100.0
    assert config.model["dim"] == 2
    assert config.policy_mode is PolicyMode.PER_DATE
    assert config.optimizer_config().max_iters == 300
    assert RunConfig(method="forward").optimizer_config().max_iters == 1000


@pytest.mark.parametrize(
    "overrides,field",
    [
        ({"degree": -1}, "degree"),
        ({"train_paths": 0}, "train_paths"),
        ({"method": "sideways"}, "method"),
        ({"link": "probit"}, "link"),
        ({"eval_mode": "median"}, "eval_mode"),
        ({"seed_eval": -3}, "seed_eval"),
        ({"sweep": [1000, 1000]}, "sweep"),
        ({"sweep": [5000, 1000]}, "sweep"),
        ({"reps": 0}, "reps"),
        ({"model": {"vol": -0.2}}, "model.vol"),
        ({"model": {"num_dates": 0}}, "model.num_dates"),
        ({"model": {"drift": 0.1}}, "model"),
        ({"optimizer": {"step_size": 0}}, "optimizer.step_size"),
        ({"colour": "red"}, "config"),
    ],
)
def test_field_errors(overrides, field):
    with pytest.raises(ConfigurationError) as e:
        RunConfig.from_dict(overrides)
    assert e.value.field == field
    assert str(e.value).startswith(f"{field}: ")


def test_hard_mode_alias(config):
    config.eval_mode = "hard"
    assert config.resolved().eval_mode == "hard_threshold"


def test_resolved_materializes_defaults(config):
    resolved = config.resolved()
    assert resolved.model["spot"] == [100.0, 100.0]
    assert len(resolved.model["dates"]) == 10
    assert resolved.optimizer["max_iters"] == 300
    assert resolved.optimizer["seed"] == config.seed_opt


def test_json_round_trip(config, tmpdir):
    resolved = config.resolved()
    resolved.write_to_json(tmpdir / "config.json", pretty_print=True)
    assert RunConfig.from_json(tmpdir / "config.json") == resolved


def test_flags_override_file(config, tmpdir):
    config.write_to_json(tmpdir / "config.json")
    loaded = RunConfig.from_json(tmpdir / "config.json", {"degree": 4, "model": {"strike": 90.0}})
    assert loaded.degree == 4
    assert loaded.model["strike"] == 90.0
    assert loaded.model["spot"] == 100.0


def test_unreadable_file(tmpdir):
    (tmpdir / "broken.json").write_text("{", encoding="utf-8")
    with pytest.raises(ConfigurationError) as e:
        RunConfig.from_json(tmpdir / "broken.json")
    assert e.value.field == "config"


def test_run_id(config):
    assert config.run_id == config.resolved().run_id
    moved = config.copy()
    moved.output = "elsewhere"
    moved.threads = 3
    assert moved.run_id == config.run_id
    changed = config.copy()
    changed.seed_eval = 99
    assert changed.run_id != config.run_id


def test_config_is_plain_json(config):
    assert json.loads(json.dumps(config.resolved().to_dict()))["model"]["dim"] == 2
