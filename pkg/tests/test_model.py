import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensegrity_hopper import (
    ACTION_DIM,
    OBS_DIM,
    ConfigError,
    HopperParams,
    build_hopper,
    frame_tilt,
    leg_tilt,
    observation,
    set_initial_drop,
    step_physics,
)
from tensegrity_hopper import dynamics
from tests.conftest import rotate_body, rotate_world


class TestBuild:
    def test_observation_dimension(self, world):
        assert observation(world).shape == (44,)
        assert OBS_DIM == 44 and ACTION_DIM == 8

    def test_eight_unique_cable_routings(self, world):
        pairs = {(int(a), int(b)) for a, b in
                 zip(world.specs.cable_a, world.specs.cable_b)}
        assert len(pairs) == 8
        # every (frame attachment, leg endpoint) pair appears exactly once
        assert pairs == {(f, l) for f in range(4) for l in (4, 5)}

    def test_nominal_cable_lengths_equal(self, world):
        expected = np.hypot(0.3, 0.4)
        assert np.allclose(world.cable_length, expected, atol=1e-15)
        assert np.ptp(world.cable_length) == 0.0

    def test_mass_asymmetry_enforced(self):
        with pytest.raises(ConfigError):
            HopperParams(leg_mass=1.0, frame_mass=1.0)

    def test_node_and_cable_counts_give_44(self, world):
        s = world.specs
        assert s.n_nodes * 3 * 2 + s.n_cables == 44

    def test_nominal_pose_grounded(self, world):
        node_pos, _, _ = dynamics.node_kinematics(world)
        assert node_pos[:, 2].min() == pytest.approx(0.0, abs=1e-15)


class TestObservation:
    def test_at_rest_velocities_zero(self, world):
        obs = observation(world)
        assert np.all(obs[26:] == 0.0)

    def test_translation_shifts_positions_only(self, world):
        before = observation(world)
        world.pos[:, 2] += 1.0
        after = observation(world)
        assert np.allclose(after[:8], before[:8], atol=1e-15)        # lengths
        pos_delta = (after[8:26] - before[8:26]).reshape(6, 3)
        assert np.allclose(pos_delta, [0.0, 0.0, 1.0], atol=1e-15)
        assert np.array_equal(after[26:], before[26:])               # velocities

    def test_free_fall_velocities(self):
        params = HopperParams(rest_length_init=1.9)   # slack cables: pure ballistics
        world = set_initial_drop(build_hopper(params), 1.0)
        for _ in range(100):
            step_physics(world, 0.001, 10)
        obs = observation(world)
        vz = obs[26:].reshape(6, 3)[:, 2]
        assert np.allclose(vz, -0.981, atol=1e-9)

    def test_lengths_match_node_distances(self, world):
        world.pos[0] += [0.02, -0.01, 0.05]
        rotate_body(world, 0, [0.3, 1.0, 0.2], 17.0)
        obs = observation(world)
        nodes = obs[8:26].reshape(6, 3)
        s = world.specs
        for c in range(8):
            d = np.linalg.norm(nodes[s.cable_b[c]] - nodes[s.cable_a[c]])
            assert abs(obs[c] - d) <= 1e-12


class TestTilts:
    def test_nominal_zero(self, world):
        assert leg_tilt(world) == 0.0
        assert frame_tilt(world) == 0.0

    def test_rotate_and_measure_round_trip(self, world):
        rotate_body(world, 1, [0.0, 1.0, 0.0], 20.0)
        assert leg_tilt(world) == pytest.approx(20.0, abs=1e-9)

    def test_whole_robot_rotation_hits_both(self, world):
        rotate_world(world, [0.0, 1.0, 0.0], 25.0)
        assert leg_tilt(world) == pytest.approx(25.0, abs=1e-9)
        assert frame_tilt(world) == pytest.approx(25.0, abs=1e-9)

    def test_folding_to_acute(self, world):
        rotate_body(world, 1, [1.0, 0.0, 0.0], 150.0)
        assert leg_tilt(world) == pytest.approx(30.0, abs=1e-9)

    @given(yaw=st.floats(-180.0, 180.0), tilt=st.floats(0.0, 89.0))
    def test_yaw_invariance(self, yaw, tilt):
        world = build_hopper()
        rotate_body(world, 1, [0.0, 1.0, 0.0], tilt)
        rotate_body(world, 0, [0.0, 1.0, 0.0], tilt)
        leg0, frame0 = leg_tilt(world), frame_tilt(world)
        rotate_world(world, [0.0, 0.0, 1.0], yaw)
        assert leg_tilt(world) == pytest.approx(leg0, abs=1e-9)
        assert frame_tilt(world) == pytest.approx(frame0, abs=1e-9)


class TestInitialDrop:
    def test_training_height(self, world):
        dropped = set_initial_drop(world, 1.0)
        node_pos, _, _ = dynamics.node_kinematics(dropped)
        assert node_pos[:, 2].min() == pytest.approx(1.0, abs=1e-12)
        assert np.all(dropped.lin_vel == 0.0) and np.all(dropped.ang_vel == 0.0)
        assert dropped.time == 0.0

    def test_zero_height_boundary(self, world):
        dropped = set_initial_drop(world, 0.0)
        node_pos, node_vel, _ = dynamics.node_kinematics(dropped)
        assert node_pos[:, 2].min() == pytest.approx(0.0, abs=1e-15)
        lowest = node_pos[:, 2].argmin()
        force = dynamics.contact_force(node_pos[lowest], node_vel[lowest],
                                       dropped.specs.contact)
        assert np.all(force == 0.0)

    def test_safe_lower_bound_height(self, world):
        dropped = set_initial_drop(world, 0.1)
        node_pos, _, _ = dynamics.node_kinematics(dropped)
        assert node_pos[:, 2].min() == pytest.approx(0.1, abs=1e-12)

    def test_idempotent(self, world):
        a = set_initial_drop(world, 0.7)
        step_physics(a, 0.001, 10)
        b = set_initial_drop(a, 0.7)
        c = set_initial_drop(b, 0.7)
        assert np.array_equal(b.pos, c.pos)
        assert np.array_equal(b.quat, c.quat)
        assert np.array_equal(b.rest_length, c.rest_length)

    def test_negative_height_rejected(self, world):
        with pytest.raises(ConfigError):
            set_initial_drop(world, -0.1)

    def test_frame_offset_applied_to_frame_only(self, world):
        dropped = set_initial_drop(world, 1.0, frame_offset=1e-3)
        assert dropped.pos[0, 0] == pytest.approx(1e-3)
        assert dropped.pos[1, 0] == 0.0
        assert leg_tilt(dropped) == 0.0 and frame_tilt(dropped) == 0.0

    def test_cables_reset_to_initial(self, world):
        world.rest_target[:] = 1.5
        for _ in range(100):
            step_physics(world, 0.001, 10)
        dropped = set_initial_drop(world, 0.5)
        assert np.allclose(dropped.rest_length, world.specs.rest_init, atol=0)
        assert np.allclose(dropped.rest_target, world.specs.rest_init, atol=0)
