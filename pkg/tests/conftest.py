import numpy as np
import pytest

from tensegrity_hopper import HopperParams, build_hopper
from tensegrity_hopper import quaternions as quat


@pytest.fixture
def world():
    return build_hopper()


@pytest.fixture
def conservative_params():
    """No gravity, no contact, no cable damping: energy should be conserved."""
    return HopperParams(cable_damping=0.0, gravity=(0.0, 0.0, 0.0),
                        ground_stiffness=0.0, ground_damping=0.0,
                        friction_coefficient=0.0)


@pytest.fixture
def floppy_params():
    """Zero-stiffness cables and no gravity: bodies keep their pose exactly,
    which makes injected tilts hold through a physics step."""
    return HopperParams(cable_stiffness=0.0, cable_damping=0.0,
                        gravity=(0.0, 0.0, 0.0))


def rotate_body(world, body_index, axis, angle_deg):
    """Rotate one body of a world in place about its own center of mass."""
    q = quat.from_axis_angle(np.asarray(axis, dtype=float), np.radians(angle_deg))
    world.quat[body_index] = quat.multiply(q, world.quat[body_index])
    return world


def rotate_world(world, axis, angle_deg):
    """Rigidly rotate every body (orientations and positions) about the origin."""
    q = quat.from_axis_angle(np.asarray(axis, dtype=float), np.radians(angle_deg))
    for i in range(world.specs.n_bodies):
        world.quat[i] = quat.multiply(q, world.quat[i])
        world.pos[i] = quat.rotate(q, world.pos[i])
    return world
