"""Augmented Random Search over linear policy weights.

Each iteration samples N Gaussian direction matrices, evaluates one rollout at
theta + nu*delta and one at theta - nu*delta per direction, ranks directions
by max(r+, r-), and steps along the reward-weighted sum of the top b
directions scaled by alpha / (b * sigma_R), where sigma_R is the population
standard deviation of the selected rewards.

Determinism contract: directions are drawn from a single seeded generator in
a fixed order, rollout work is partitioned by direction index, and all
reductions (update sum, reward statistics, normalizer merges) happen in
direction-index order. The training log is therefore bitwise reproducible for
a given seed and config, independent of the worker count.
"""

import multiprocessing
import time
from dataclasses import dataclass

import numpy as np

from . import model
from .dynamics import SimulationFault
from .env import HopperEnv
from .policy import LinearPolicy, RunningStats, save_checkpoint

VARIANTS = ("V1", "V2", "V1-t", "V2-t")

SIGMA_FLOOR = 1e-12


class TrainingAborted(RuntimeError):
    """Raised when the simulation fault rate exceeds the configured ceiling."""


@dataclass(frozen=True)
class ArsConfig:
    step_size: float = 0.02            # alpha
    num_directions: int = 16           # N
    perturbation_std: float = 0.03     # nu
    top_directions: int = 8            # b (used by the -t variants)
    iterations: int = 100
    seed: int = 0
    variant: str = "V2-t"
    eval_every: int = 1                # frozen-stats evaluation cadence; 0 disables
    workers: int = 1
    fault_rate_limit: float = 0.5      # abort when faulted rollouts exceed this fraction
    max_seconds: float = 0.0           # wall-clock budget, checked between iterations; 0 = none
    vectorized_rollouts: bool = False  # evaluate all rollouts of an iteration in one
                                       # lockstep numpy batch (hopper envs only; ~30x
                                       # faster on one core, same semantics, fp-equal
                                       # to the per-env path only up to roundoff)

    def __post_init__(self):
        if self.step_size <= 0.0:
            raise ValueError("step_size must be > 0")
        if self.perturbation_std <= 0.0:
            raise ValueError("perturbation_std must be > 0")
        if not (1 <= self.top_directions <= self.num_directions):
            raise ValueError("need 1 <= top_directions <= num_directions")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def normalize(self):
        return self.variant in ("V2", "V2-t")

    @property
    def effective_top(self):
        """V1/V2 use every direction; the -t variants keep the configured b."""
        return self.top_directions if self.variant.endswith("-t") else self.num_directions


@dataclass
class DirectionResult:
    """Evaluation of one perturbation direction: rewards of the +nu and -nu rollouts."""
    index: int
    delta: np.ndarray
    reward_pos: float
    reward_neg: float


@dataclass
class IterationRecord:
    iteration: int
    episodes: int                 # cumulative rollouts, update + evaluation
    mean_return: float
    min_return: float
    max_return: float
    eval_seconds: float           # NaN for iterations without an evaluation
    wall_clock_s: float           # cumulative simulated seconds (deterministic proxy)
    faults: int = 0
    real_elapsed_s: float = 0.0   # actual wall time; kept out of the CSV on purpose


class TrainingLog:
    """Per-iteration training records; CSV schema is fixed and LF-terminated."""

    CSV_HEADER = ("iteration", "episodes", "mean_return", "min_return",
                  "max_return", "eval_seconds", "wall_clock_s")

    def __init__(self):
        self.records = []

    @property
    def total_faults(self):
        return sum(r.faults for r in self.records)

    @staticmethod
    def format_row(r):
        eval_field = "" if np.isnan(r.eval_seconds) else repr(r.eval_seconds)
        return (f"{r.iteration},{r.episodes},{r.mean_return!r},{r.min_return!r},"
                f"{r.max_return!r},{eval_field},{r.wall_clock_s!r}\n")

    def write_csv(self, path):
        with open(path, "w", newline="\n") as f:
            f.write(",".join(self.CSV_HEADER) + "\n")
            for r in self.records:
                f.write(self.format_row(r))


def sample_directions(rng, num_directions, shape=(model.ACTION_DIM, model.OBS_DIM)):
    """N standard-normal direction matrices. Entries are drawn direction-index
    major, row-major within each matrix, so a fixed seed fixes the set."""
    if num_directions < 1:
        raise ValueError("num_directions must be >= 1")
    return rng.standard_normal((num_directions,) + tuple(shape))


def ars_update(theta, direction_results, config):
    """One ARS parameter update; pure function of its inputs.

    Directions are ranked by max(r+, r-) descending with ties broken by
    direction index ascending, so the result is invariant under permutation of
    the input list. If the selected rewards are all (numerically) equal the
    update is skipped.
    """
    if not direction_results:
        raise ValueError("direction_results must not be empty")
    b = min(config.effective_top, len(direction_results))
    ranked = sorted(direction_results,
                    key=lambda r: (-max(r.reward_pos, r.reward_neg), r.index))
    selected = ranked[:b]
    rewards = np.array([[r.reward_pos, r.reward_neg] for r in selected]).ravel()
    sigma = float(rewards.std())
    if sigma < SIGMA_FLOOR:
        return theta.copy()
    acc = np.zeros_like(theta)
    for r in selected:
        acc += (r.reward_pos - r.reward_neg) * r.delta
    return theta + (config.step_size / (b * sigma)) * acc


class QuadraticOracleEnv:
    """Synthetic objective for optimizer checks: an episode's return is
    -||W - target||^2 of the policy's weight matrix. No observations are
    generated, so normalization statistics stay at their identity state."""

    def __init__(self, target):
        self.target = np.array(target, dtype=float)

    def rollout(self, policy, mode="eval"):
        from .env import EpisodeResult
        err = policy.weights - self.target
        return EpisodeResult(float(-(err * err).sum()), 1, 0.0)


def _default_env_factory(params, env_config):
    return HopperEnv(params, env_config)


# Worker-process state: one environment per process, built once.
_worker_env = None


def _worker_init(env_factory, params, env_config):
    global _worker_env
    _worker_env = env_factory(params, env_config)


def _eval_chunk_in_worker(task):
    indices, deltas, theta, nu, stats, mode = task
    return _evaluate_directions(_worker_env, indices, deltas, theta, nu, stats, mode)


def _evaluate_directions(env, indices, deltas, theta, nu, stats, mode):
    """Rollouts for a chunk of directions: (index, sign, reward, seconds,
    batch stats or None, faulted) per rollout, + before - per direction."""
    out = []
    for idx, delta in zip(indices, deltas):
        for sign in (1.0, -1.0):
            policy = LinearPolicy(theta + (sign * nu) * delta)
            if stats is not None:
                policy.norm.count = stats[0]
                policy.norm.mean = stats[1].copy()
                policy.norm.var = stats[2].copy()
            try:
                ep = env.rollout(policy, mode)
                batch = ep.norm_batch
                packed = None
                if batch is not None and batch.count > 0:
                    packed = (batch.count, batch.mean, batch.var)
                out.append((idx, sign, ep.total_reward, ep.episode_seconds, packed, False))
            except SimulationFault:
                out.append((idx, sign, 0.0, 0.0, None, True))
    return out


def train(env_factory, params, env_config, ars_config, log_path=None,
          checkpoint_path=None, checkpoint_hash=""):
    """Run ARS from zero weights; returns (policy, TrainingLog).

    ``env_factory(params, env_config)`` must build an independent environment
    exposing ``rollout(policy, mode)``; with ``workers > 1`` it must be
    picklable (a module-level callable). Faulted rollouts score 0 and are
    counted; training aborts if their cumulative fraction exceeds
    ``fault_rate_limit``. With ``log_path`` set, the log streams to that CSV
    one row per iteration as training runs; with ``checkpoint_path`` set, the
    current policy is rewritten there every iteration, so an interrupted run
    still leaves a usable checkpoint.
    """
    vectorized = ars_config.vectorized_rollouts
    if vectorized and env_factory is not None:
        raise ValueError("vectorized_rollouts only supports the built-in hopper "
                         "environment (env_factory must be None)")
    if env_factory is None:
        env_factory = _default_env_factory
    rng = np.random.default_rng(ars_config.seed)
    policy = LinearPolicy()
    log = TrainingLog()
    stream = None
    if log_path is not None:
        stream = open(log_path, "w", newline="\n")
        stream.write(",".join(TrainingLog.CSV_HEADER) + "\n")
        stream.flush()
    if ars_config.iterations == 0:
        if stream is not None:
            stream.close()
        return policy, log

    n = ars_config.num_directions
    nu = ars_config.perturbation_std
    mode = "train" if ars_config.normalize else "eval"
    engine = None
    eval_env = None
    if vectorized:
        from ._batched import BatchedHopperRollouts
        if params is None:
            params = model.HopperParams()
        if env_config is None:
            from .env import EnvConfig
            env_config = EnvConfig()
        engine = BatchedHopperRollouts(params, env_config)
    else:
        eval_env = env_factory(params, env_config)

    pool = None
    if ars_config.workers > 1 and not vectorized:
        pool = multiprocessing.Pool(ars_config.workers, initializer=_worker_init,
                                    initargs=(env_factory, params, env_config))
        chunks = np.array_split(np.arange(n), min(ars_config.workers, n))
    t_start = time.monotonic()
    episodes = 0
    sim_seconds = 0.0
    rollouts_total = 0
    faults_total = 0
    try:
        for iteration in range(1, ars_config.iterations + 1):
            deltas = sample_directions(rng, n)
            stats = None
            if ars_config.normalize:
                stats = (policy.norm.count, policy.norm.mean, policy.norm.var)
            theta = policy.weights

            if vectorized:
                rows = np.empty((2 * n,) + theta.shape)
                rows[0::2] = theta + nu * deltas
                rows[1::2] = theta - nu * deltas
                evals = engine.evaluate(rows, stats, mode,
                                        variance_floor=policy.variance_floor)
                raw = []
                for idx in range(n):
                    for offset, sign in ((0, 1.0), (1, -1.0)):
                        e = evals[2 * idx + offset]
                        packed = None
                        if e["batch"] is not None:
                            packed = (e["batch"].count, e["batch"].mean, e["batch"].var)
                        raw.append((idx, sign, e["reward"], e["seconds"], packed,
                                    e["faulted"]))
            elif pool is not None:
                tasks = [(chunk, deltas[chunk], theta, nu, stats, mode)
                         for chunk in chunks]
                raw = [r for part in pool.map(_eval_chunk_in_worker, tasks) for r in part]
            else:
                raw = _evaluate_directions(eval_env, np.arange(n), deltas, theta, nu,
                                           stats, mode)

            by_key = {(r[0], r[1]): r for r in raw}
            results = []
            batches = []
            faults = 0
            for idx in range(n):
                per_sign = {}
                for sign in (1.0, -1.0):
                    _, _, reward, seconds, packed, faulted = by_key[(idx, sign)]
                    per_sign[sign] = reward
                    sim_seconds += seconds
                    batches.append(packed)
                    faults += int(faulted)
                results.append(DirectionResult(idx, deltas[idx], per_sign[1.0],
                                               per_sign[-1.0]))

            policy.weights = ars_update(theta, results, ars_config)

            if ars_config.normalize:
                for packed in batches:   # fixed direction-index order, + then -
                    if packed is not None:
                        other = RunningStats(policy.obs_dim)
                        other.count, other.mean, other.var = packed
                        policy.norm.merge(other)

            episodes += 2 * n
            rollouts_total += 2 * n

            eval_seconds = float("nan")
            if ars_config.eval_every and iteration % ars_config.eval_every == 0:
                if vectorized:
                    frozen = None
                    if policy.norm.count > 0:
                        frozen = (policy.norm.count, policy.norm.mean, policy.norm.var)
                    ev = engine.evaluate(policy.weights[None], frozen, "eval",
                                         variance_floor=policy.variance_floor)[0]
                    eval_seconds = ev["seconds"]
                    if ev["faulted"]:
                        faults += 1
                else:
                    try:
                        ep = eval_env.rollout(policy, "eval")
                        eval_seconds = ep.episode_seconds
                    except SimulationFault:
                        eval_seconds = 0.0
                        faults += 1
                episodes += 1
                rollouts_total += 1
                sim_seconds += eval_seconds
            faults_total += faults

            rewards = np.array([[r.reward_pos, r.reward_neg] for r in results]).ravel()
            record = IterationRecord(
                iteration=iteration,
                episodes=episodes,
                mean_return=float(rewards.mean()),
                min_return=float(rewards.min()),
                max_return=float(rewards.max()),
                eval_seconds=eval_seconds,
                wall_clock_s=sim_seconds,
                faults=faults,
                real_elapsed_s=time.monotonic() - t_start,
            )
            log.records.append(record)
            if stream is not None:
                stream.write(TrainingLog.format_row(record))
                stream.flush()
            if checkpoint_path is not None:
                save_checkpoint(policy, checkpoint_path, config_hash=checkpoint_hash)

            if faults_total > ars_config.fault_rate_limit * rollouts_total:
                raise TrainingAborted(
                    f"{faults_total}/{rollouts_total} rollouts faulted, exceeding the "
                    f"fault-rate limit {ars_config.fault_rate_limit}")
            if ars_config.max_seconds and time.monotonic() - t_start > ars_config.max_seconds:
                break
    finally:
        if pool is not None:
            pool.close()
            pool.join()
        if stream is not None:
            stream.close()
    return policy, log
