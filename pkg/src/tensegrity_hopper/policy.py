"""Static linear policy with online observation normalization, plus
checkpoint serialization.

The action is a single matrix-vector product of the (action_dim x obs_dim)
weight matrix with the normalized observation. Normalization is per-coordinate
(x - mean) / sqrt(var + floor) from streaming statistics; with no recorded
observations it is the identity.
"""

import json

import numpy as np

from . import model

CHECKPOINT_FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Malformed checkpoint file, version mismatch, or incompatible shapes."""


class RunningStats:
    """Streaming per-coordinate mean and population variance.

    ``update`` is Welford's single-observation recurrence; ``merge`` is the
    exact pairwise combination, so statistics accumulated in parallel chunks
    reduce to the same values regardless of chunk boundaries (up to float
    rounding, which is why merge order is kept fixed by callers).
    """

    def __init__(self, dim):
        self.count = 0
        self.mean = np.zeros(dim)
        self.var = np.zeros(dim)

    def update(self, x):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.var += (delta * (x - self.mean) - self.var) / self.count

    def merge(self, other):
        if other.count == 0:
            return
        if self.count == 0:
            self.count = other.count
            self.mean = other.mean.copy()
            self.var = other.var.copy()
            return
        n = self.count + other.count
        delta = other.mean - self.mean
        m2 = (self.var * self.count + other.var * other.count
              + delta * delta * (self.count * other.count / n))
        self.mean = self.mean + delta * (other.count / n)
        self.var = m2 / n
        self.count = n

    def copy(self):
        out = RunningStats(len(self.mean))
        out.count = self.count
        out.mean = self.mean.copy()
        out.var = self.var.copy()
        return out


class LinearPolicy:
    """u = W ((x - mean) / sqrt(var + floor)); identity normalization until
    the first statistics update."""

    def __init__(self, weights=None, obs_dim=model.OBS_DIM, action_dim=model.ACTION_DIM,
                 variance_floor=1e-8):
        if weights is None:
            weights = np.zeros((action_dim, obs_dim))
        else:
            weights = np.array(weights, dtype=float)
            if weights.shape != (action_dim, obs_dim):
                raise ValueError(f"weights must have shape ({action_dim}, {obs_dim}), "
                                 f"got {weights.shape}")
        self.weights = weights
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.variance_floor = float(variance_floor)
        self.norm = RunningStats(obs_dim)

    def act(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.obs_dim,):
            raise ValueError(f"observation must have shape ({self.obs_dim},), got {x.shape}")
        if self.norm.count > 0:
            x = (x - self.norm.mean) / np.sqrt(self.norm.var + self.variance_floor)
        return self.weights @ x

    def normalizer_update(self, x):
        """Fold one observation into the normalization statistics (train mode)."""
        self.norm.update(np.asarray(x, dtype=float))
        return self

    def copy(self):
        out = LinearPolicy(self.weights.copy(), self.obs_dim, self.action_dim,
                           self.variance_floor)
        out.norm = self.norm.copy()
        return out


def save_checkpoint(policy, path, config_hash=""):
    """Write a versioned JSON checkpoint. Floats serialize via repr, so the
    round trip is bit-exact."""
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config_hash": config_hash,
        "action_dim": policy.action_dim,
        "obs_dim": policy.obs_dim,
        "variance_floor": policy.variance_floor,
        "weights": [[float(v) for v in row] for row in policy.weights],
        "norm_mean": [float(v) for v in policy.norm.mean],
        "norm_var": [float(v) for v in policy.norm.var],
        "norm_count": policy.norm.count,
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=1)
        f.write("\n")


def read_checkpoint(path):
    """Parse and validate a checkpoint file without constructing a policy."""
    try:
        with open(path) as f:
            payload = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"malformed checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise CheckpointError(f"malformed checkpoint {path}: missing format_version")
    version = payload["format_version"]
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format_version {version} "
                              f"(this build reads {CHECKPOINT_FORMAT_VERSION})")
    required = ("weights", "norm_mean", "norm_var", "norm_count",
                "action_dim", "obs_dim", "config_hash")
    missing = [k for k in required if k not in payload]
    if missing:
        raise CheckpointError(f"malformed checkpoint {path}: missing {missing}")
    return payload


def load_checkpoint(path, expect_config_hash=None, obs_dim=model.OBS_DIM,
                    action_dim=model.ACTION_DIM):
    """Reconstruct a LinearPolicy; numeric fields match the saved ones bitwise.

    Raises CheckpointError on malformed files, unknown format versions,
    weight-shape mismatches against the expected model dimensions, or (when
    ``expect_config_hash`` is given) a config-hash mismatch.
    """
    payload = read_checkpoint(path)
    if expect_config_hash is not None and payload["config_hash"] != expect_config_hash:
        raise CheckpointError(
            f"checkpoint {path} was trained against config {payload['config_hash']!r}, "
            f"current config is {expect_config_hash!r}")
    weights = np.array(payload["weights"], dtype=float)
    if weights.shape != (action_dim, obs_dim):
        raise CheckpointError(f"checkpoint weights have shape {weights.shape}, "
                              f"expected ({action_dim}, {obs_dim})")
    mean = np.array(payload["norm_mean"], dtype=float)
    var = np.array(payload["norm_var"], dtype=float)
    if mean.shape != (obs_dim,) or var.shape != (obs_dim,):
        raise CheckpointError("checkpoint normalization vectors have wrong length")
    policy = LinearPolicy(weights, obs_dim, action_dim,
                          variance_floor=payload.get("variance_floor", 1e-8))
    policy.norm.count = int(payload["norm_count"])
    policy.norm.mean = mean
    policy.norm.var = var
    return policy
