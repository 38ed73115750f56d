"""Finite-horizon balance MDP around the hopper.

One environment step applies an action (a clipped, scaled change of every
cable's rest-length target), advances the physics ``decision_interval``
control steps at the control rate, and accrues +1 reward per control step the
tilt criteria hold. Crossing a tilt threshold terminates the episode at that
control step; reaching the horizon truncates it. Return therefore equals the
number of surviving control steps.

There is no randomness anywhere: resets are exact, so identical
(config, policy) pairs reproduce episodes bitwise.
"""

import numpy as np
from dataclasses import dataclass

from . import dynamics, model
from .dynamics import ConfigError
from .policy import RunningStats


@dataclass(frozen=True)
class EnvConfig:
    horizon_steps: int = 20000
    control_rate: float = 1000.0
    decision_interval: int = 1          # action held for k control steps
    drop_height: float = 1.0
    leg_threshold: float = 20.0         # degrees
    frame_threshold: float = 40.0       # degrees
    action_scale: float = 0.01          # meters of target change per unit action
    action_clip: float = 1.0
    actuated_mask: tuple[bool, ...] = (True,) * model.ACTION_DIM
    symmetry_break: float = 1e-3        # fixed frame x-offset at reset (m); 0 = exact pose

    def __post_init__(self):
        if self.horizon_steps < 1:
            raise ConfigError("horizon_steps must be >= 1")
        if self.control_rate <= 0.0:
            raise ConfigError("control_rate must be > 0")
        if self.decision_interval < 1:
            raise ConfigError("decision_interval must be >= 1")
        if self.leg_threshold <= 0.0 or self.frame_threshold <= 0.0:
            raise ConfigError("tilt thresholds must be > 0")
        if self.action_scale <= 0.0:
            raise ConfigError("action_scale must be > 0")
        if len(self.actuated_mask) != model.ACTION_DIM:
            raise ConfigError(f"actuated_mask must have {model.ACTION_DIM} entries")


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    info: dict


@dataclass
class EpisodeResult:
    total_reward: float
    episode_control_steps: int
    episode_seconds: float
    norm_batch: object = None    # per-episode observation statistics (train mode)


class HopperEnv:
    """Reset/step interface over the hopper world."""

    def __init__(self, params=None, config=None):
        self.params = params if params is not None else model.HopperParams()
        self.config = config if config is not None else EnvConfig()
        self._template = model.build_hopper(self.params)
        self._scaled_mask = self.config.action_scale * np.array(self.config.actuated_mask,
                                                                dtype=float)
        self.world = None
        self._steps = 0
        self._terminated = False
        self._truncated = False

    @property
    def observation_dim(self):
        return model.OBS_DIM

    @property
    def action_dim(self):
        return model.ACTION_DIM

    @property
    def episode_control_steps(self):
        return self._steps

    def _criteria_ok(self):
        return (model.leg_tilt(self.world) <= self.config.leg_threshold
                and model.frame_tilt(self.world) <= self.config.frame_threshold)

    def reset(self):
        """Place the hopper at the configured drop height, at rest, and return
        the initial observation. Deterministic: no reset randomization (the
        symmetry-break offset is a fixed constant, identical every reset)."""
        self.world = model.set_initial_drop(self._template, self.config.drop_height,
                                            frame_offset=self.config.symmetry_break)
        self._steps = 0
        self._terminated = False
        self._truncated = False
        return model.observation(self.world)

    def step(self, action):
        """Apply one action and advance ``decision_interval`` control steps.

        The action is clipped to [-action_clip, action_clip], masked, scaled,
        and added once to the cable rest-length targets (clamped to bounds);
        the targets then hold while physics runs. Reward is +1 per control
        step in which both tilt criteria hold; the first violating step ends
        the episode with no reward for that step.
        """
        if self.world is None:
            raise RuntimeError("reset() must be called before step()")
        if self._terminated or self._truncated:
            raise RuntimeError("episode has finished; call reset()")
        action = np.asarray(action, dtype=float)
        if action.shape != (model.ACTION_DIM,):
            raise ValueError(f"action must have shape ({model.ACTION_DIM},), got {action.shape}")

        cfg = self.config
        delta = np.clip(action, -cfg.action_clip, cfg.action_clip) * self._scaled_mask
        self.world.add_rest_target_delta(delta)

        control_dt = 1.0 / cfg.control_rate
        reward = 0.0
        for _ in range(cfg.decision_interval):
            dynamics.step_physics(self.world, control_dt, self.params.substeps)
            if self._criteria_ok():
                reward += 1.0
                self._steps += 1
                if self._steps >= cfg.horizon_steps:
                    self._truncated = True
                    break
            else:
                self._terminated = True
                break

        info = {
            "leg_tilt": model.leg_tilt(self.world),
            "frame_tilt": model.frame_tilt(self.world),
            "time": self.world.time,
        }
        return StepResult(model.observation(self.world), reward,
                          self._terminated, self._truncated, info)

    def rollout(self, policy, mode="eval"):
        """Run one reset-to-end episode under ``policy``.

        In train mode every visited observation updates the policy's
        normalization statistics (and a per-episode batch accumulator returned
        for later merging); in eval mode the statistics are frozen.
        """
        if mode not in ("train", "eval"):
            raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
        train = mode == "train"
        obs = self.reset()
        batch = RunningStats(len(obs)) if train else None
        total = 0.0
        while True:
            if train:
                policy.normalizer_update(obs)
                batch.update(obs)
            result = self.step(policy.act(obs))
            total += result.reward
            obs = result.observation
            if result.terminated or result.truncated:
                break
        return EpisodeResult(total, self._steps, self._steps / self.config.control_rate,
                             norm_batch=batch)


def rollout(policy, env, mode="eval"):
    """Episode runner dispatched through the environment (any object with a
    ``rollout(policy, mode)`` method qualifies, e.g. synthetic objectives)."""
    return env.rollout(policy, mode)
