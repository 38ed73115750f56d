import numpy as np
import pytest

from tensegrity_hopper import (
    ArsConfig,
    ConfigError,
    EnvConfig,
    HopperParams,
    LinearPolicy,
    RunConfig,
    cmd_export_trajectory,
    cmd_long_horizon,
    cmd_sweep_frequency,
    cmd_sweep_height,
    cmd_train,
    config_hash,
    load_config,
    save_checkpoint,
    save_config,
)
from tensegrity_hopper.cli import main as cli_main
from tensegrity_hopper.policy import CheckpointError
from tests.test_env import ZERO_POLICY_FALL_STEPS

TINY = """
[model]
substeps = 2

[env]
horizon_steps = 200
drop_height = 0.4

[ars]
iterations = 2
num_directions = 3
top_directions = 2
seed = 11
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "config.ini"
    path.write_text(TINY)
    return load_config(path)


def write_zero_checkpoint(config, path):
    save_checkpoint(LinearPolicy(), path,
                    config_hash=config_hash(config.model, config.env))
    return str(path)


class TestConfigFile:
    def test_round_trip(self, tiny_config, tmp_path):
        out = tmp_path / "resolved.ini"
        save_config(tiny_config, out)
        again = load_config(out)
        assert again.model == tiny_config.model
        assert again.env == tiny_config.env
        assert again.ars == tiny_config.ars

    def test_defaults_when_sections_missing(self, tmp_path):
        path = tmp_path / "empty.ini"
        path.write_text("[env]\nhorizon_steps = 5\n")
        config = load_config(path)
        assert config.model == HopperParams()
        assert config.ars == ArsConfig()
        assert config.env.horizon_steps == 5

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[physics]\nx = 1\n")
        with pytest.raises(ConfigError, match="unknown config section"):
            load_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[env]\nhorizon = 5\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(path)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[env]\nhorizon_steps = soon\n")
        with pytest.raises(ConfigError, match="bad value"):
            load_config(path)

    def test_invalid_combination_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[model]\nleg_mass = 2.0\n")
        with pytest.raises(ConfigError, match=r"invalid \[model\]"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.ini")

    def test_tuple_and_bool_fields(self, tmp_path):
        path = tmp_path / "config.ini"
        path.write_text("[model]\ngravity = 0.0, 0.0, -1.62\n"
                        "[env]\nactuated_mask = true, true, true, true, "
                        "false, false, false, false\n"
                        "[ars]\nvectorized_rollouts = true\n")
        config = load_config(path)
        assert config.model.gravity == (0.0, 0.0, -1.62)
        assert config.env.actuated_mask == (True,) * 4 + (False,) * 4
        assert config.ars.vectorized_rollouts is True

    def test_float_precision_survives_round_trip(self, tmp_path):
        params = HopperParams(cable_stiffness=500.0000000001)
        config = RunConfig(params, EnvConfig(), ArsConfig())
        path = tmp_path / "precise.ini"
        save_config(config, path)
        assert load_config(path).model.cable_stiffness == 500.0000000001


class TestConfigHash:
    def test_stable(self):
        a = config_hash(HopperParams(), EnvConfig())
        b = config_hash(HopperParams(), EnvConfig())
        assert a == b and len(a) == 16

    def test_model_changes_hash(self):
        assert config_hash(HopperParams(), EnvConfig()) != \
            config_hash(HopperParams(leg_mass=0.2), EnvConfig())

    def test_sweepable_fields_excluded(self):
        base = config_hash(HopperParams(), EnvConfig())
        assert base == config_hash(HopperParams(), EnvConfig(drop_height=0.1))
        assert base == config_hash(HopperParams(), EnvConfig(decision_interval=5))
        assert base == config_hash(HopperParams(), EnvConfig(horizon_steps=100))
        assert base != config_hash(HopperParams(), EnvConfig(action_scale=0.02))


class TestCmdTrain:
    def test_zero_iterations_writes_loadable_checkpoint(self, tmp_path):
        config = RunConfig(HopperParams(), EnvConfig(),
                           ArsConfig(iterations=0))
        paths = cmd_train(config, tmp_path / "run")
        from tensegrity_hopper import load_checkpoint
        policy = load_checkpoint(paths["checkpoint"],
                                 expect_config_hash=config_hash(config.model, config.env))
        assert np.all(policy.weights == 0.0)
        header = open(paths["log"]).readline().strip()
        assert header == "iteration,episodes,mean_return,min_return,max_return," \
                         "eval_seconds,wall_clock_s"

    def test_rerun_binary_identical(self, tiny_config, tmp_path):
        p1 = cmd_train(tiny_config, tmp_path / "a")
        p2 = cmd_train(tiny_config, tmp_path / "b")
        assert open(p1["log"], "rb").read() == open(p2["log"], "rb").read()
        assert open(p1["checkpoint"], "rb").read() == open(p2["checkpoint"], "rb").read()

    def test_resolved_config_reproduces(self, tiny_config, tmp_path):
        p1 = cmd_train(tiny_config, tmp_path / "a")
        resolved = load_config(tmp_path / "a" / "config_resolved.ini")
        p2 = cmd_train(resolved, tmp_path / "b")
        assert open(p1["log"], "rb").read() == open(p2["log"], "rb").read()


class TestSweeps:
    def test_height_sweep_zero_policy(self, tiny_config, tmp_path):
        checkpoint = write_zero_checkpoint(tiny_config, tmp_path / "zero.json")
        paths = cmd_sweep_height(tiny_config, checkpoint, tmp_path / "sweep",
                                 heights=(0.2, 0.4), repeats=2)
        lines = open(paths["sweep"]).read().splitlines()
        assert lines[0] == "height_m,repeats,mean_seconds,min_seconds," \
                           "max_seconds,success_count"
        assert len(lines) == 3
        for line in lines[1:]:
            fields = line.split(",")
            mean, lo, hi = float(fields[2]), float(fields[3]), float(fields[4])
            assert lo <= mean <= hi
            assert int(fields[5]) <= int(fields[1])

    def test_frequency_sweep_labels(self, tiny_config, tmp_path):
        checkpoint = write_zero_checkpoint(tiny_config, tmp_path / "zero.json")
        paths = cmd_sweep_frequency(tiny_config, checkpoint, tmp_path / "sweep",
                                    decision_intervals=(1, 2), repeats=1)
        lines = open(paths["sweep"]).read().splitlines()
        assert lines[0].startswith("frequency_hz,")
        assert lines[1].split(",")[0] == "1000.0"
        assert lines[2].split(",")[0] == "500.0"

    def test_frequency_sweep_rejects_bad_interval(self, tiny_config, tmp_path):
        checkpoint = write_zero_checkpoint(tiny_config, tmp_path / "zero.json")
        with pytest.raises(ConfigError):
            cmd_sweep_frequency(tiny_config, checkpoint, tmp_path / "s",
                                decision_intervals=(0,), repeats=1)

    def test_hash_mismatch_rejected(self, tiny_config, tmp_path):
        path = tmp_path / "foreign.json"
        save_checkpoint(LinearPolicy(), path, config_hash="somethingelse")
        with pytest.raises(CheckpointError, match="config"):
            cmd_sweep_height(tiny_config, path, tmp_path / "sweep", heights=(0.2,))

    def test_full_default_config_zero_policy_height_point(self, tmp_path):
        """Default model at 1 m with the zero policy reproduces the recorded
        uncontrolled fall time."""
        config = RunConfig(HopperParams(), EnvConfig(), ArsConfig())
        checkpoint = write_zero_checkpoint(config, tmp_path / "zero.json")
        paths = cmd_sweep_height(config, checkpoint, tmp_path / "sweep",
                                 heights=(1.0,), repeats=2)
        line = open(paths["sweep"]).read().splitlines()[1]
        fields = line.split(",")
        assert float(fields[2]) == pytest.approx(ZERO_POLICY_FALL_STEPS / 1000.0)
        assert int(fields[5]) == 0


class TestLongHorizon:
    def test_zero_duration_trivially_successful(self, tiny_config, tmp_path):
        checkpoint = write_zero_checkpoint(tiny_config, tmp_path / "zero.json")
        paths = cmd_long_horizon(tiny_config, checkpoint, tmp_path / "lh",
                                 duration_s=0.0)
        line = open(paths["long_horizon"]).read().splitlines()[1]
        assert line == "0.0,0.0,1"

    def test_zero_policy_survival_matches_oracle(self, tmp_path):
        config = RunConfig(HopperParams(), EnvConfig(), ArsConfig())
        checkpoint = write_zero_checkpoint(config, tmp_path / "zero.json")
        paths = cmd_long_horizon(config, checkpoint, tmp_path / "lh", duration_s=3.0)
        line = open(paths["long_horizon"]).read().splitlines()[1]
        duration, survived, success = line.split(",")
        assert float(survived) == pytest.approx(ZERO_POLICY_FALL_STEPS / 1000.0)
        assert success == "0"


class TestExportTrajectory:
    def test_row_and_column_counts(self, tiny_config, tmp_path):
        checkpoint = write_zero_checkpoint(tiny_config, tmp_path / "zero.json")
        paths = cmd_export_trajectory(tiny_config, checkpoint, tmp_path / "traj",
                                      height=0.4)
        lines = open(paths["trajectory"]).read().splitlines()
        assert len(lines[0].split(",")) == 56

        from tensegrity_hopper import HopperEnv
        from dataclasses import replace
        env = HopperEnv(tiny_config.model, replace(tiny_config.env, drop_height=0.4))
        ep = env.rollout(LinearPolicy(), "eval")
        assert len(lines) - 1 == ep.episode_control_steps + 1

    def test_first_row_at_rest(self, tiny_config, tmp_path):
        checkpoint = write_zero_checkpoint(tiny_config, tmp_path / "zero.json")
        paths = cmd_export_trajectory(tiny_config, checkpoint, tmp_path / "traj")
        first = open(paths["trajectory"]).read().splitlines()[1].split(",")
        velocities = [float(v) for v in first[19:37]]
        assert all(v == 0.0 for v in velocities)
        assert float(first[0]) == 0.0


class TestCli:
    def test_train_eval_pipeline(self, tmp_path):
        config_path = tmp_path / "config.ini"
        config_path.write_text(TINY)
        out = tmp_path / "run"
        assert cli_main(["train", "--config", str(config_path),
                         "--out", str(out)]) == 0
        assert (out / "checkpoint.json").exists()
        assert (out / "training_log.csv").exists()
        assert (out / "config_resolved.ini").exists()
        assert cli_main(["eval", "--config", str(config_path),
                         "--checkpoint", str(out / "checkpoint.json"),
                         "--out", str(tmp_path / "eval"), "--repeats", "2"]) == 0
        assert (tmp_path / "eval" / "eval.csv").exists()

    def test_seed_override_changes_log(self, tmp_path):
        config_path = tmp_path / "config.ini"
        config_path.write_text(TINY)
        cli_main(["train", "--config", str(config_path),
                  "--out", str(tmp_path / "a"), "--seed", "1"])
        cli_main(["train", "--config", str(config_path),
                  "--out", str(tmp_path / "b"), "--seed", "2"])
        a = open(tmp_path / "a" / "training_log.csv").read()
        b = open(tmp_path / "b" / "training_log.csv").read()
        assert a != b

    def test_bad_config_exit_code(self, tmp_path):
        config_path = tmp_path / "bad.ini"
        config_path.write_text("[env]\nbogus = 1\n")
        assert cli_main(["train", "--config", str(config_path),
                         "--out", str(tmp_path / "x")]) == 2

    def test_sweep_and_trajectory_commands(self, tmp_path):
        config_path = tmp_path / "config.ini"
        config_path.write_text(TINY)
        config = load_config(config_path)
        checkpoint = write_zero_checkpoint(config, tmp_path / "zero.json")
        assert cli_main(["sweep-height", "--config", str(config_path),
                         "--checkpoint", checkpoint, "--out", str(tmp_path / "sh"),
                         "--heights", "0.2,0.3", "--repeats", "1"]) == 0
        assert cli_main(["sweep-frequency", "--config", str(config_path),
                         "--checkpoint", checkpoint, "--out", str(tmp_path / "sf"),
                         "--intervals", "1,2", "--repeats", "1"]) == 0
        assert cli_main(["long-horizon", "--config", str(config_path),
                         "--checkpoint", checkpoint, "--out", str(tmp_path / "lh"),
                         "--duration", "0.5"]) == 0
        assert cli_main(["export-trajectory", "--config", str(config_path),
                         "--checkpoint", checkpoint, "--out", str(tmp_path / "tr"),
                         "--height", "0.3"]) == 0
