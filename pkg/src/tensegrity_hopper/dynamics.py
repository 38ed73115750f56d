"""Minimal fixed-step rigid-body engine: tension-only cables, penalty ground
contact at cable attachment nodes, and uniform gravity.

The integrator is semi-implicit Euler: velocities first (angular velocity via
the body-frame Euler equations with the gyroscopic term), then positions and
orientations from the new velocities. Orientations advance by an exponential-
map quaternion increment and are renormalized every step.

Everything is float64 and stepping is a deterministic function of
(state, specs, dt): repeated runs from the same state are bitwise identical.
"""

import numpy as np
from dataclasses import dataclass

from . import quaternions as quat

DEGENERATE_LENGTH = 1e-12


class SimulationFault(RuntimeError):
    """Integration produced a non-finite state (distinct from episode end)."""


class ConfigError(ValueError):
    """Invalid model, environment, or run configuration."""


@dataclass(frozen=True)
class RigidBodySpec:
    """Mass properties and body-frame cable attachment points of one link."""

    mass: float
    inertia: np.ndarray        # 3x3 symmetric positive-definite, body frame
    attachments: np.ndarray    # (n, 3) body-frame anchor points

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ConfigError(f"body mass must be > 0, got {self.mass}")
        inertia = np.array(self.inertia, dtype=float)
        if inertia.shape != (3, 3):
            raise ConfigError("inertia must be a 3x3 tensor")
        if not np.allclose(inertia, inertia.T, atol=1e-12):
            raise ConfigError("inertia tensor must be symmetric")
        if np.linalg.eigvalsh(inertia).min() <= 0.0:
            raise ConfigError("inertia tensor must be positive definite")
        attachments = np.array(self.attachments, dtype=float)
        if attachments.ndim != 2 or attachments.shape[1] != 3:
            raise ConfigError("attachments must be an (n, 3) array")
        inertia.setflags(write=False)
        attachments.setflags(write=False)
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "attachments", attachments)


@dataclass(frozen=True)
class CableSpec:
    """Tension-only spring-damper between two attachment points.

    Endpoints are (body index, attachment index) pairs. The rest length is the
    actuated quantity: it tracks ``rest_length_target`` at most
    ``actuation_rate_limit`` per second and stays inside
    ``rest_length_bounds``.
    """

    endpoint_a: tuple
    endpoint_b: tuple
    stiffness: float
    damping: float
    rest_length_init: float
    rest_length_bounds: tuple
    actuation_rate_limit: float

    def __post_init__(self):
        if tuple(self.endpoint_a) == tuple(self.endpoint_b):
            raise ConfigError("cable endpoints must differ")
        if self.stiffness < 0.0 or self.damping < 0.0:
            raise ConfigError("cable stiffness and damping must be >= 0")
        lo, hi = self.rest_length_bounds
        if not (0.0 < lo <= hi):
            raise ConfigError(f"invalid rest length bounds [{lo}, {hi}]")
        if not (lo <= self.rest_length_init <= hi):
            raise ConfigError("rest_length_init outside rest_length_bounds")
        if self.actuation_rate_limit <= 0.0:
            raise ConfigError("actuation_rate_limit must be > 0")


@dataclass(frozen=True)
class ContactParams:
    """Penalty ground model: compliant normal plus regularized Coulomb friction."""

    ground_stiffness: float = 1e4
    ground_damping: float = 100.0
    friction_coefficient: float = 0.8
    friction_regularization_velocity: float = 0.01

    def __post_init__(self):
        if min(self.ground_stiffness, self.ground_damping, self.friction_coefficient) < 0.0:
            raise ConfigError("contact parameters must be >= 0")
        if self.friction_regularization_velocity <= 0.0:
            raise ConfigError("friction_regularization_velocity must be > 0")


class WorldSpecs:
    """Immutable world description with the flattened arrays the stepper uses.

    Nodes are all attachment points of all bodies, flattened in body order.
    ``incidence`` maps per-cable force vectors to per-node sums (+1 at the
    a-end, -1 at the b-end); ``body_agg`` sums node quantities per body.
    """

    def __init__(self, body_specs, cable_specs, contact, gravity,
                 substeps=10, home_positions=None, home_orientations=None):
        self.body_specs = tuple(body_specs)
        self.cable_specs = tuple(cable_specs)
        self.contact = contact
        self.gravity = np.array(gravity, dtype=float).reshape(3)
        if substeps < 1:
            raise ConfigError("substeps must be >= 1")
        self.substeps = int(substeps)

        nb = len(self.body_specs)
        self.body_mass = np.array([b.mass for b in self.body_specs])
        self.inv_mass = 1.0 / self.body_mass
        self.inertia = np.stack([b.inertia for b in self.body_specs])
        self.inv_inertia = np.stack([np.linalg.inv(b.inertia) for b in self.body_specs])

        # Flatten attachments into the global node table.
        offsets = np.cumsum([0] + [len(b.attachments) for b in self.body_specs])
        self.node_offsets = offsets
        self.n_nodes = int(offsets[-1])
        self.node_body = np.concatenate(
            [np.full(len(b.attachments), i, dtype=int) for i, b in enumerate(self.body_specs)])
        self.node_local = np.concatenate([b.attachments for b in self.body_specs])

        def node_index(endpoint):
            body, att = endpoint
            if not (0 <= body < nb):
                raise ConfigError(f"cable endpoint references body {body} of {nb}")
            n_att = len(self.body_specs[body].attachments)
            if not (0 <= att < n_att):
                raise ConfigError(f"cable endpoint references attachment {att} of {n_att}")
            return offsets[body] + att

        nc = len(self.cable_specs)
        self.n_cables = nc
        self.cable_a = np.array([node_index(c.endpoint_a) for c in self.cable_specs], dtype=int)
        self.cable_b = np.array([node_index(c.endpoint_b) for c in self.cable_specs], dtype=int)
        self.cable_k = np.array([c.stiffness for c in self.cable_specs])
        self.cable_c = np.array([c.damping for c in self.cable_specs])
        self.rest_init = np.array([c.rest_length_init for c in self.cable_specs])
        self.rest_lo = np.array([c.rest_length_bounds[0] for c in self.cable_specs])
        self.rest_hi = np.array([c.rest_length_bounds[1] for c in self.cable_specs])
        self.rate_limit = np.array([c.actuation_rate_limit for c in self.cable_specs])

        self.incidence = np.zeros((self.n_nodes, nc))
        self.incidence[self.cable_a, np.arange(nc)] += 1.0
        self.incidence[self.cable_b, np.arange(nc)] -= 1.0
        # d = cable_diff @ node_positions gives the a-to-b separation per cable.
        self.cable_diff = -self.incidence.T.copy()
        self.body_agg = np.zeros((nb, self.n_nodes))
        self.body_agg[self.node_body, np.arange(self.n_nodes)] = 1.0
        self.body_slices = [slice(int(offsets[i]), int(offsets[i + 1])) for i in range(nb)]
        self.gravity_force = self.body_mass[:, None] * self.gravity

        if home_positions is None:
            home_positions = np.zeros((nb, 3))
        if home_orientations is None:
            home_orientations = np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (nb, 1))
        self.home_positions = np.array(home_positions, dtype=float).reshape(nb, 3)
        self.home_orientations = np.array(home_orientations, dtype=float).reshape(nb, 4)

        for arr in (self.gravity, self.body_mass, self.inv_mass, self.inertia,
                    self.inv_inertia, self.node_body, self.node_local, self.cable_a,
                    self.cable_b, self.cable_k, self.cable_c, self.rest_init,
                    self.rest_lo, self.rest_hi, self.rate_limit, self.incidence,
                    self.cable_diff, self.body_agg, self.gravity_force,
                    self.home_positions, self.home_orientations):
            arr.setflags(write=False)

    @property
    def n_bodies(self):
        return len(self.body_specs)


@dataclass
class RigidBodyState:
    """View bundle over one body's slice of the world arrays (mutations stick)."""

    position: np.ndarray
    orientation: np.ndarray
    linear_velocity: np.ndarray
    angular_velocity: np.ndarray   # world frame


@dataclass
class CableState:
    """Read snapshot of one cable. ``length``/``length_rate`` are refreshed
    during wrench accumulation, so they lag the body state by one substep."""

    rest_length: float
    rest_length_target: float
    length: float
    length_rate: float


class WorldState:
    """Mutable dynamic state of every body and cable, plus simulation time.

    Constructed at the specs' home pose with zero velocities and cables at
    their initial rest lengths. Stepping mutates in place; ``copy()`` first if
    the old state is needed.
    """

    __slots__ = ("specs", "pos", "quat", "lin_vel", "ang_vel", "rest_length",
                 "rest_target", "cable_length", "cable_rate", "time",
                 "degenerate_cable_events")

    def __init__(self, specs):
        self.specs = specs
        self.pos = specs.home_positions.copy()
        self.quat = specs.home_orientations.copy()
        self.lin_vel = np.zeros((specs.n_bodies, 3))
        self.ang_vel = np.zeros((specs.n_bodies, 3))
        self.rest_length = specs.rest_init.copy()
        self.rest_target = specs.rest_init.copy()
        self.time = 0.0
        self.degenerate_cable_events = 0
        node_pos, node_vel, _ = node_kinematics(self)
        d = node_pos[specs.cable_b] - node_pos[specs.cable_a]
        self.cable_length = np.sqrt((d * d).sum(axis=1))
        self.cable_rate = np.zeros(specs.n_cables)

    def copy(self):
        out = WorldState.__new__(WorldState)
        out.specs = self.specs
        out.pos = self.pos.copy()
        out.quat = self.quat.copy()
        out.lin_vel = self.lin_vel.copy()
        out.ang_vel = self.ang_vel.copy()
        out.rest_length = self.rest_length.copy()
        out.rest_target = self.rest_target.copy()
        out.cable_length = self.cable_length.copy()
        out.cable_rate = self.cable_rate.copy()
        out.time = self.time
        out.degenerate_cable_events = self.degenerate_cable_events
        return out

    @property
    def bodies(self):
        return [RigidBodyState(self.pos[i], self.quat[i], self.lin_vel[i], self.ang_vel[i])
                for i in range(self.specs.n_bodies)]

    @property
    def cables(self):
        return [CableState(float(self.rest_length[i]), float(self.rest_target[i]),
                           float(self.cable_length[i]), float(self.cable_rate[i]))
                for i in range(self.specs.n_cables)]

    def set_rest_targets(self, targets):
        """Set absolute rest-length targets, clamped to the per-cable bounds."""
        np.clip(targets, self.specs.rest_lo, self.specs.rest_hi, out=self.rest_target)

    def add_rest_target_delta(self, delta):
        """Shift rest-length targets by ``delta``, clamped to bounds."""
        self.set_rest_targets(self.rest_target + delta)


def cable_tension(length, length_rate, rest_length, stiffness, damping):
    """Tension-only constitutive law, vectorizing over any common shape.

    A taut cable (length > rest length) pulls with
    max(0, stiffness * stretch + damping * length_rate); a slack cable exerts
    nothing, including its damping term. Never negative: cables cannot push.
    """
    force = stiffness * (length - rest_length) + damping * length_rate
    out = np.where(length > rest_length, np.maximum(force, 0.0), 0.0)
    if np.ndim(out) == 0:
        return float(out)
    return out


def attachment_kinematics(body, spec, attachment_index):
    """World position and velocity of one attachment point.

    position = body.position + R * local
    velocity = linear_velocity + angular_velocity x (R * local)
    """
    local = spec.attachments[attachment_index]
    offset = quat.rotate(body.orientation, local)
    position = body.position + offset
    velocity = body.linear_velocity + np.cross(body.angular_velocity, offset)
    return position, velocity


def node_kinematics(world):
    """World positions, velocities, and COM offsets of every node, batched.

    Attachment rows are grouped by body, so each body's offsets come from one
    small matmul against its rotation matrix instead of per-node quaternion
    rotations (the cross-product formulation costs ~3x more here).
    """
    s = world.specs
    rot = quat.to_matrix(world.quat)
    offsets = np.empty((s.n_nodes, 3))
    for i, sl in enumerate(s.body_slices):
        np.matmul(s.node_local[sl], rot[i].T, out=offsets[sl])
    pos = world.pos[s.node_body] + offsets
    vel = world.lin_vel[s.node_body] + quat.cross3(world.ang_vel[s.node_body], offsets)
    return pos, vel, offsets


def contact_force(node_position, node_velocity, params):
    """Penalty ground force on a point; ground plane is z = 0.

    Zero above the plane. Below it, the normal force is the non-adhesive
    spring-damper max(0, -k z - c v_z), and tangential Coulomb friction of
    magnitude at most mu * N opposes the tangential velocity, ramping
    linearly below the regularization velocity. Vectorizes over (..., 3).
    """
    p = np.asarray(node_position, dtype=float)
    v = np.asarray(node_velocity, dtype=float)
    z = p[..., 2]
    below = z < 0.0
    normal = np.where(below, np.maximum(0.0, -params.ground_stiffness * z
                                        - params.ground_damping * v[..., 2]), 0.0)
    vt = v[..., :2]
    speed = np.sqrt((vt * vt).sum(axis=-1))
    scale = np.minimum(1.0, speed / params.friction_regularization_velocity)
    friction = params.friction_coefficient * normal * scale
    direction = vt / np.maximum(speed, DEGENERATE_LENGTH)[..., None]
    out = np.zeros(p.shape)
    out[..., :2] = -friction[..., None] * direction
    out[..., 2] = normal
    return out


def accumulate_wrenches(world):
    """Sum gravity, cable, and contact forces into per-body (force, torque).

    Torques are about each body's center of mass. As a side effect this
    refreshes every cable's length and length rate from current kinematics; a
    cable at (numerically) zero length gets a zero force direction and bumps
    ``world.degenerate_cable_events``.
    """
    s = world.specs
    pos, vel, offsets = node_kinematics(world)

    d = s.cable_diff @ pos
    length = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2])
    unit = d / np.maximum(length, DEGENERATE_LENGTH)[:, None]
    dv = s.cable_diff @ vel
    rate = dv[:, 0] * unit[:, 0] + dv[:, 1] * unit[:, 1] + dv[:, 2] * unit[:, 2]
    degenerate = length < DEGENERATE_LENGTH
    if degenerate.any():
        world.degenerate_cable_events += int(degenerate.sum())
        rate = np.where(degenerate, 0.0, rate)
    tension = cable_tension(length, rate, world.rest_length, s.cable_k, s.cable_c)
    world.cable_length[:] = length
    world.cable_rate[:] = rate

    # +tension * unit pulls the a-end toward the b-end; the b-end gets the
    # exact negation, so internal forces cancel pairwise. A degenerate cable
    # has zero length, hence zero tension (rest lengths are bounded above 0),
    # so its undefined direction contributes nothing.
    node_force = s.incidence @ (tension[:, None] * unit)

    if (pos[:, 2] < 0.0).any():
        node_force += contact_force(pos, vel, s.contact)

    forces = s.body_agg @ node_force + s.gravity_force
    torques = s.body_agg @ quat.cross3(offsets, node_force)
    return forces, torques


def integrate(world, wrenches, dt):
    """One semi-implicit Euler step; mutates and returns ``world``.

    Velocities update from the wrenches (angular velocity via body-frame Euler
    equations with the gyroscopic term), then positions and orientations
    update from the new velocities. Rest lengths track their targets at most
    ``actuation_rate_limit * dt`` and are clamped to bounds.
    """
    s = world.specs
    forces, torques = wrenches

    world.lin_vel += forces * (dt * s.inv_mass)[:, None]

    rot = quat.to_matrix(world.quat)
    rot_t = rot.transpose(0, 2, 1)
    omega_b = (rot_t @ world.ang_vel[:, :, None])[:, :, 0]
    torque_b = (rot_t @ torques[:, :, None])[:, :, 0]
    gyro = quat.cross3(omega_b, (s.inertia @ omega_b[:, :, None])[:, :, 0])
    omega_b += dt * (s.inv_inertia @ (torque_b - gyro)[:, :, None])[:, :, 0]
    world.ang_vel[:] = (rot @ omega_b[:, :, None])[:, :, 0]

    world.pos += world.lin_vel * dt
    dq = quat.from_scaled_axis(world.ang_vel * dt)
    world.quat[:] = quat.normalize(quat.multiply(dq, world.quat))

    step = s.rate_limit * dt
    delta = world.rest_target - world.rest_length
    world.rest_length += np.minimum(np.maximum(delta, -step), step)
    world.rest_length[:] = np.minimum(np.maximum(world.rest_length, s.rest_lo), s.rest_hi)

    world.time += dt

    # NaN/Inf propagate through sums, so one scalar check covers the state.
    probe = (world.pos.sum() + world.lin_vel.sum() + world.quat.sum()
             + world.ang_vel.sum() + world.rest_length.sum())
    if not np.isfinite(probe):
        raise SimulationFault(f"non-finite state at t={world.time:.6f} s")
    return world


def step_physics(world, control_dt, substeps):
    """Advance one control step as ``substeps`` wrench+integrate substeps."""
    if substeps < 1:
        raise ConfigError("substeps must be >= 1")
    dt = control_dt / substeps
    for _ in range(substeps):
        integrate(world, accumulate_wrenches(world), dt)
    return world
