"""The two-link, eight-cable hopper: geometry, observation vector, tilt metrics.

The structure is a light vertical leg threaded through a heavier horizontal
cross frame. The frame has four cable anchors in its plane, the leg two (one
per end), and every (frame anchor, leg end) pair carries one cable: 4 x 2 = 8
cables, 6 nodes. The observation is the 44-vector
[8 cable lengths, 18 node positions, 18 node velocities].

None of the physical constants below are published for the original robot;
they are package defaults, chosen so the nominal pose is pretensioned and
stable to simulate, and all of them are configurable.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics
from .dynamics import ConfigError

FRAME = 0
LEG = 1
N_FRAME_ATTACHMENTS = 4
N_LEG_ENDPOINTS = 2
N_NODES = 6
N_CABLES = 8
OBS_DIM = N_CABLES + N_NODES * 6   # 8 + 36 = 44
ACTION_DIM = N_CABLES


@dataclass(frozen=True)
class HopperParams:
    """Configurable physical constants of the default hopper."""

    frame_mass: float = 1.0
    leg_mass: float = 0.1
    leg_length: float = 0.8
    frame_radius: float = 0.3
    cable_stiffness: float = 500.0
    cable_damping: float = 5.0
    rest_length_init: float = 0.45
    rest_length_bounds: tuple[float, float] = (0.05, 2.0)
    actuation_rate_limit: float = 1.0
    gravity: tuple[float, float, float] = (0.0, 0.0, -9.81)
    ground_stiffness: float = 1e4
    ground_damping: float = 100.0
    friction_coefficient: float = 0.8
    friction_regularization_velocity: float = 0.01
    substeps: int = 10

    def __post_init__(self):
        if self.leg_mass <= 0.0 or self.frame_mass <= 0.0:
            raise ConfigError("masses must be > 0")
        if self.leg_mass >= self.frame_mass:
            raise ConfigError("leg_mass must be smaller than frame_mass")
        if self.leg_length <= 0.0 or self.frame_radius <= 0.0:
            raise ConfigError("leg_length and frame_radius must be > 0")
        if self.substeps < 1:
            raise ConfigError("substeps must be >= 1")


def build_hopper(params=None):
    """Construct the hopper in its nominal standing pose.

    Nominal pose: leg vertical with its lower end touching z = 0, frame
    horizontal and centered on the leg axis at the leg midpoint, so all eight
    cables have equal length sqrt(frame_radius^2 + (leg_length/2)^2) by
    symmetry. Returns a fresh WorldState (specs inside).
    """
    p = params if params is not None else HopperParams()

    r = p.frame_radius
    half = p.leg_length / 2.0

    # Cross frame: two perpendicular rods of length 2r, half the mass each.
    i_arm = (p.frame_mass / 2.0) * (2.0 * r) ** 2 / 12.0
    frame_inertia = np.diag([i_arm, i_arm, 2.0 * i_arm])
    frame_attachments = np.array([
        [r, 0.0, 0.0],
        [-r, 0.0, 0.0],
        [0.0, r, 0.0],
        [0.0, -r, 0.0],
    ])

    # Leg: thin rod along its local z axis, endpoints at +-half.
    leg_radius = 0.01
    i_perp = p.leg_mass * p.leg_length ** 2 / 12.0
    i_axial = 0.5 * p.leg_mass * leg_radius ** 2
    leg_inertia = np.diag([i_perp, i_perp, i_axial])
    leg_attachments = np.array([
        [0.0, 0.0, -half],   # node 4: lower end, the stance node
        [0.0, 0.0, half],    # node 5: upper end
    ])

    body_specs = [
        dynamics.RigidBodySpec(p.frame_mass, frame_inertia, frame_attachments),
        dynamics.RigidBodySpec(p.leg_mass, leg_inertia, leg_attachments),
    ]

    cable_specs = []
    for f in range(N_FRAME_ATTACHMENTS):
        for l in range(N_LEG_ENDPOINTS):
            cable_specs.append(dynamics.CableSpec(
                endpoint_a=(FRAME, f),
                endpoint_b=(LEG, l),
                stiffness=p.cable_stiffness,
                damping=p.cable_damping,
                rest_length_init=p.rest_length_init,
                rest_length_bounds=tuple(p.rest_length_bounds),
                actuation_rate_limit=p.actuation_rate_limit,
            ))
    assert len(cable_specs) == N_CABLES
    assert N_NODES * 6 + N_CABLES == OBS_DIM

    contact = dynamics.ContactParams(
        ground_stiffness=p.ground_stiffness,
        ground_damping=p.ground_damping,
        friction_coefficient=p.friction_coefficient,
        friction_regularization_velocity=p.friction_regularization_velocity,
    )

    specs = dynamics.WorldSpecs(
        body_specs, cable_specs, contact, p.gravity,
        substeps=p.substeps,
        home_positions=[[0.0, 0.0, half], [0.0, 0.0, half]],
    )
    return dynamics.WorldState(specs)


def observation(world):
    """The 44-vector [l_1..l_8, node positions, node velocities].

    Cable lengths come first in cable order, then the 6 nodes' (x, y, z)
    positions (frame anchors 0-3, then leg ends 4-5), then the matching
    velocities. Lengths are recomputed from current kinematics, not read from
    the (one substep stale) cable state.
    """
    s = world.specs
    pos, vel, _ = dynamics.node_kinematics(world)
    d = pos[s.cable_b] - pos[s.cable_a]
    lengths = np.sqrt((d * d).sum(axis=1))
    return np.concatenate([lengths, pos.ravel(), vel.ravel()])


def leg_tilt(world):
    """Acute angle in degrees between the leg axis and world vertical.

    The leg axis is the lower-to-upper endpoint direction, i.e. the leg's
    local z axis in world frame; its vertical component for a unit quaternion
    (w, x, y, z) is 1 - 2 (x^2 + y^2). Folded to [0, 90]."""
    q = world.quat[LEG]
    c = abs(1.0 - 2.0 * (q[1] * q[1] + q[2] * q[2]))
    return math.degrees(math.acos(min(1.0, c)))


def frame_tilt(world):
    """Acute angle in degrees between the frame plane normal and world
    vertical, folded to [0, 90]. Zero when the frame is horizontal."""
    q = world.quat[FRAME]
    c = abs(1.0 - 2.0 * (q[1] * q[1] + q[2] * q[2]))
    return math.degrees(math.acos(min(1.0, c)))


def set_initial_drop(world, height, frame_offset=0.0):
    """Fresh copy of the nominal standing pose with the lowest node ``height``
    above the ground, zero velocities, cables at initial rest lengths, t = 0.

    Idempotent for a given height: the result depends only on the specs.

    ``frame_offset`` shifts the frame link along +x by a fixed amount. The
    exactly symmetric pose is a floating-point fixed point of the dynamics
    (all lateral forces cancel bitwise), so without a deterministic
    perturbation the uncontrolled structure would balance forever instead of
    exhibiting the unstable equilibrium the task is built around. Real
    engines break this symmetry through solver noise; here it is explicit,
    fixed, and configurable."""
    if height < 0.0:
        raise ConfigError(f"drop height must be >= 0, got {height}")
    fresh = dynamics.WorldState(world.specs)
    node_pos, _, _ = dynamics.node_kinematics(fresh)
    fresh.pos[:, 2] += height - node_pos[:, 2].min()
    fresh.pos[FRAME, 0] += frame_offset
    return fresh
