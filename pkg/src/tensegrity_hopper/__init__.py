"""Two-link, eight-cable tensegrity hopper: physics, balance MDP, linear
policies, and Augmented Random Search training."""

from .dynamics import (
    CableSpec,
    CableState,
    ConfigError,
    ContactParams,
    RigidBodySpec,
    RigidBodyState,
    SimulationFault,
    WorldSpecs,
    WorldState,
    accumulate_wrenches,
    attachment_kinematics,
    cable_tension,
    contact_force,
    integrate,
    node_kinematics,
    step_physics,
)
from .model import (
    ACTION_DIM,
    N_CABLES,
    N_NODES,
    OBS_DIM,
    HopperParams,
    build_hopper,
    frame_tilt,
    leg_tilt,
    observation,
    set_initial_drop,
)
from .env import EnvConfig, EpisodeResult, HopperEnv, StepResult, rollout
from .policy import (
    CheckpointError,
    LinearPolicy,
    RunningStats,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from .ars import (
    ArsConfig,
    DirectionResult,
    QuadraticOracleEnv,
    TrainingAborted,
    TrainingLog,
    ars_update,
    sample_directions,
    train,
)
from .harness import (
    RunConfig,
    cmd_eval,
    cmd_export_trajectory,
    cmd_long_horizon,
    cmd_sweep_frequency,
    cmd_sweep_height,
    cmd_train,
    config_hash,
    load_config,
    save_config,
)

__version__ = "0.1.0"
