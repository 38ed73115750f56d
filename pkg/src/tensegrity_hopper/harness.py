"""Experiment harness: config files, training runs, evaluation sweeps, and
trajectory export, with every artifact written as CSV plus a resolved config.

Config files are INI ([model], [env], [ars] sections mirroring HopperParams,
EnvConfig, ArsConfig). Unknown sections or keys are errors, so typos cannot
silently fall back to defaults. Every command writes the fully resolved
config next to its outputs; re-running from that file reproduces the outputs
byte for byte.
"""

import configparser
import hashlib
import json
import os
import time
import typing
from dataclasses import dataclass, fields, replace

import numpy as np

from . import ars as ars_mod
from . import model
from .dynamics import ConfigError
from .env import EnvConfig, HopperEnv
from .model import HopperParams
from .policy import load_checkpoint, save_checkpoint

DEFAULT_HEIGHTS = (0.0, 0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5)
DEFAULT_INTERVALS = (1, 2, 3, 4, 5, 10)

SWEEP_HEADER = ("repeats", "mean_seconds", "min_seconds", "max_seconds", "success_count")


@dataclass
class RunConfig:
    model: HopperParams
    env: EnvConfig
    ars: ars_mod.ArsConfig

    @classmethod
    def default(cls):
        return cls(HopperParams(), EnvConfig(), ars_mod.ArsConfig())


_SECTIONS = {"model": HopperParams, "env": EnvConfig, "ars": ars_mod.ArsConfig}


def _format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))   # shortest round-trip decimal
    if isinstance(value, (tuple, list)):
        return ", ".join(_format_value(v) for v in value)
    return str(value)


def _parse_value(text, typ):
    origin = typing.get_origin(typ)
    if origin in (tuple, list):
        args = typing.get_args(typ)
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if args and args[-1] is not Ellipsis and len(args) == len(parts):
            elems = [_parse_value(p, a) for p, a in zip(parts, args)]
        else:
            elem_type = args[0] if args else float
            elems = [_parse_value(p, elem_type) for p in parts]
        return tuple(elems)
    if typ is bool:
        lowered = text.strip().lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"expected a boolean, got {text!r}")
    if typ is int:
        return int(text)
    if typ is float:
        return float(text)
    if typ is str:
        return text.strip()
    raise ConfigError(f"unsupported config field type {typ}")


def load_config(path):
    """Parse an INI run config; unknown sections or keys raise ConfigError."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    resolved = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}] in {path}")
        cls = _SECTIONS[section]
        hints = typing.get_type_hints(cls)
        known = {f.name: hints[f.name] for f in fields(cls)}
        values = {}
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section [{section}] of {path}")
            try:
                values[key] = _parse_value(raw, known[key])
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}") from exc
        try:
            resolved[section] = cls(**values)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"invalid [{section}] config: {exc}") from exc
    return RunConfig(
        model=resolved.get("model", HopperParams()),
        env=resolved.get("env", EnvConfig()),
        ars=resolved.get("ars", ars_mod.ArsConfig()),
    )


def save_config(config, path):
    """Write the fully resolved config in the same INI dialect load_config reads."""
    parser = configparser.ConfigParser()
    for section, obj in (("model", config.model), ("env", config.env), ("ars", config.ars)):
        parser[section] = {f.name: _format_value(getattr(obj, f.name))
                           for f in fields(obj)}
    with open(path, "w", newline="\n") as f:
        parser.write(f)


def config_hash(params, env_config):
    """Fingerprint of the model plus the policy-facing environment settings.

    Excludes drop_height, decision_interval, and horizon_steps: sweeps and
    long-horizon runs vary those while reusing a trained checkpoint.
    """
    payload = {"model": {f.name: getattr(params, f.name) for f in fields(params)},
               "env": {f.name: getattr(env_config, f.name) for f in fields(env_config)
                       if f.name not in ("drop_height", "decision_interval",
                                         "horizon_steps")}}
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
    return digest[:16]


def _write_rows(path, header, rows):
    with open(path, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_format_value(v) for v in row) + "\n")


def _evaluate_point(policy, params, env_config, repeats):
    """Frozen-policy evaluation episodes; success = full-horizon survival.

    The environment is deterministic, so repeats reproduce one episode; the
    repeat count is kept for interface parity with stochastic setups.
    """
    seconds = []
    successes = 0
    env = HopperEnv(params, env_config)
    for _ in range(repeats):
        ep = env.rollout(policy, "eval")
        seconds.append(ep.episode_seconds)
        if ep.episode_control_steps >= env_config.horizon_steps:
            successes += 1
    return (repeats, float(np.mean(seconds)), float(np.min(seconds)),
            float(np.max(seconds)), successes)


def _load_for(config, checkpoint_path):
    return load_checkpoint(checkpoint_path,
                           expect_config_hash=config_hash(config.model, config.env))


def _prepare_out(config, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    save_config(config, os.path.join(out_dir, "config_resolved.ini"))


def cmd_train(config, out_dir):
    """Train a policy; writes checkpoint.json, training_log.csv, and the
    resolved config. Returns the artifact paths."""
    _prepare_out(config, out_dir)
    checkpoint_path = os.path.join(out_dir, "checkpoint.json")
    log_path = os.path.join(out_dir, "training_log.csv")
    digest = config_hash(config.model, config.env)
    t0 = time.monotonic()
    policy, log = ars_mod.train(None, config.model, config.env, config.ars,
                                log_path=log_path, checkpoint_path=checkpoint_path,
                                checkpoint_hash=digest)
    elapsed = time.monotonic() - t0
    save_checkpoint(policy, checkpoint_path, config_hash=digest)
    if log.records:
        last = log.records[-1]
        print(f"trained {last.iteration} iterations, {last.episodes} episodes, "
              f"last eval {last.eval_seconds:.3f} s, wall {elapsed:.0f} s")
    else:
        print("trained 0 iterations (zero policy checkpoint)")
    return {"checkpoint": checkpoint_path, "log": log_path}


def cmd_eval(config, checkpoint_path, out_dir, repeats=10):
    """Evaluate a checkpoint at the configured drop height and decision
    interval; writes eval.csv with the sweep schema keyed by height."""
    _prepare_out(config, out_dir)
    policy = _load_for(config, checkpoint_path)
    row = _evaluate_point(policy, config.model, config.env, repeats)
    path = os.path.join(out_dir, "eval.csv")
    _write_rows(path, ("height_m",) + SWEEP_HEADER, [(config.env.drop_height,) + row])
    print(f"height {config.env.drop_height} m: mean {row[1]:.3f} s, "
          f"success {row[4]}/{row[0]}")
    return {"eval": path}


def cmd_sweep_height(config, checkpoint_path, out_dir, heights=DEFAULT_HEIGHTS,
                     repeats=10):
    """Evaluate a checkpoint over a grid of initial drop heights."""
    _prepare_out(config, out_dir)
    policy = _load_for(config, checkpoint_path)
    rows = []
    for height in heights:
        env_cfg = _replace(config.env, drop_height=float(height))
        rows.append((float(height),) + _evaluate_point(policy, config.model, env_cfg,
                                                       repeats))
        print(f"height {height} m: mean {rows[-1][2]:.3f} s, success {rows[-1][5]}/{repeats}")
    path = os.path.join(out_dir, "sweep_height.csv")
    _write_rows(path, ("height_m",) + SWEEP_HEADER, rows)
    return {"sweep": path}


def cmd_sweep_frequency(config, checkpoint_path, out_dir,
                        decision_intervals=DEFAULT_INTERVALS, repeats=10):
    """Evaluate a checkpoint while holding each action for k control steps,
    i.e. at decision frequency control_rate / k."""
    _prepare_out(config, out_dir)
    policy = _load_for(config, checkpoint_path)
    rows = []
    for k in decision_intervals:
        if k < 1:
            raise ConfigError(f"decision interval must be >= 1, got {k}")
        env_cfg = _replace(config.env, decision_interval=int(k))
        freq = config.env.control_rate / k
        rows.append((freq,) + _evaluate_point(policy, config.model, env_cfg, repeats))
        print(f"{freq:.0f} Hz (k={k}): mean {rows[-1][2]:.3f} s, "
              f"success {rows[-1][5]}/{repeats}")
    path = os.path.join(out_dir, "sweep_frequency.csv")
    _write_rows(path, ("frequency_hz",) + SWEEP_HEADER, rows)
    return {"sweep": path}


def cmd_long_horizon(config, checkpoint_path, out_dir, duration_s=600.0):
    """One evaluation episode with the horizon stretched to ``duration_s``."""
    _prepare_out(config, out_dir)
    if duration_s < 0:
        raise ConfigError("duration must be >= 0")
    policy = _load_for(config, checkpoint_path)
    if duration_s == 0:
        survived = 0.0
        success = 1
    else:
        horizon = int(round(duration_s * config.env.control_rate))
        env_cfg = _replace(config.env, horizon_steps=horizon)
        env = HopperEnv(config.model, env_cfg)
        ep = env.rollout(policy, "eval")
        survived = ep.episode_seconds
        success = int(ep.episode_control_steps >= horizon)
    path = os.path.join(out_dir, "long_horizon.csv")
    _write_rows(path, ("duration_s", "survived_s", "success"),
                [(float(duration_s), survived, success)])
    print(f"long horizon: survived {survived:.3f} of {duration_s:.0f} s")
    return {"long_horizon": path}


def cmd_export_trajectory(config, checkpoint_path, out_dir, height=None):
    """Dump one evaluation episode as per-control-step rows.

    Columns: time, 6 node positions, 6 node velocities, 8 cable lengths,
    8 rest-length targets, both tilts, and the reward flag (56 total). The
    initial state is row one; each surviving control step appends a row, so
    the file has episode_control_steps + 1 rows after the header.

    Action repeat is reproduced by acting every decision_interval-th control
    step and holding the targets in between, which is exactly the held-action
    semantics of the configured interval.
    """
    _prepare_out(config, out_dir)
    policy = _load_for(config, checkpoint_path)
    env_cfg = _replace(config.env, decision_interval=1)
    if height is not None:
        env_cfg = _replace(env_cfg, drop_height=float(height))
    env = HopperEnv(config.model, env_cfg)
    k = config.env.decision_interval

    header = (["time_s"]
              + [f"node{i}_p{a}" for i in range(model.N_NODES) for a in "xyz"]
              + [f"node{i}_v{a}" for i in range(model.N_NODES) for a in "xyz"]
              + [f"cable{i}_len" for i in range(model.N_CABLES)]
              + [f"cable{i}_target" for i in range(model.N_CABLES)]
              + ["leg_tilt_deg", "frame_tilt_deg", "reward"])

    def state_row(obs, reward_flag):
        world = env.world
        return ([world.time]
                + list(obs[model.N_CABLES:model.N_CABLES + 18])
                + list(obs[model.N_CABLES + 18:])
                + list(obs[:model.N_CABLES])
                + list(world.rest_target)
                + [model.leg_tilt(world), model.frame_tilt(world), reward_flag])

    obs = env.reset()
    initial_ok = 1.0 if (model.leg_tilt(env.world) <= env_cfg.leg_threshold
                         and model.frame_tilt(env.world) <= env_cfg.frame_threshold) else 0.0
    rows = [state_row(obs, initial_ok)]
    zero = np.zeros(model.ACTION_DIM)
    step_index = 0
    while True:
        action = policy.act(obs) if step_index % k == 0 else zero
        result = env.step(action)
        step_index += 1
        obs = result.observation
        if result.terminated:
            break
        rows.append(state_row(obs, result.reward))
        if result.truncated:
            break
    path = os.path.join(out_dir, "trajectory.csv")
    _write_rows(path, header, rows)
    print(f"trajectory: {len(rows)} rows ({len(header)} columns) -> {path}")
    return {"trajectory": path}


def _replace(cfg, **changes):
    return replace(cfg, **changes)
