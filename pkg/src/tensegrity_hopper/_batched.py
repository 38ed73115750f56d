"""Lockstep evaluation of many hopper rollouts in one batched numpy world.

Internal optimization used by the trainer: the same force laws, integrator,
reward rule, and termination rule as stepping a HopperEnv per rollout, but
computed for B independent hoppers at once so per-call numpy overhead
amortizes over the batch. Floating-point grouping differs from the
single-world path at the last ulp (batched matmuls associate differently),
so trajectories agree with HopperEnv to roundoff, not bitwise; within this
path results are fully deterministic.

Row lifecycle: a row that violates a tilt criterion is marked done and frozen
in place (its velocities are zeroed after every substep, so its state stops
moving while the rest of the batch finishes). A row whose state goes
non-finite is sanitized back to the reset pose, frozen, scored zero, and
flagged faulted; NaN/Inf cannot cross rows because every operation is
row-local.
"""

import math

import numpy as np

from . import dynamics, model
from . import quaternions as quat
from .policy import RunningStats


class BatchedHopperRollouts:
    """Evaluates a batch of linear policies, one rollout per weight matrix."""

    def __init__(self, params, env_config):
        self.params = params
        self.config = env_config
        template = model.build_hopper(params)
        self.specs = template.specs
        node_pos, _, _ = dynamics.node_kinematics(template)
        self._drop_shift = env_config.drop_height - node_pos[:, 2].min()
        self._cos_leg = math.cos(math.radians(env_config.leg_threshold))
        self._cos_frame = math.cos(math.radians(env_config.frame_threshold))
        self._scaled_mask = env_config.action_scale * np.array(env_config.actuated_mask,
                                                               dtype=float)

    def _reset_rows(self, pos, quat_arr, lin_vel, ang_vel, rest, target, rows):
        s = self.specs
        pos[rows] = s.home_positions
        pos[rows, :, 2] += self._drop_shift
        pos[rows, model.FRAME, 0] += self.config.symmetry_break
        quat_arr[rows] = s.home_orientations
        lin_vel[rows] = 0.0
        ang_vel[rows] = 0.0
        rest[rows] = s.rest_init
        target[rows] = s.rest_init

    def evaluate(self, weights, base_stats=None, mode="eval", variance_floor=1e-8):
        """Run one rollout per row of ``weights`` (B, action_dim, obs_dim).

        ``base_stats`` is (count, mean, var) of the policy normalizer at the
        start of the iteration, or None to disable normalization. In train
        mode each row continues those statistics with its own observations
        (update first, then act, matching HopperEnv.rollout) and accumulates a
        per-row observation batch for later merging. Returns a list of
        per-row dicts: reward, steps, seconds, batch stats, faulted flag.
        """
        s = self.specs
        cfg = self.config
        p = self.params
        weights = np.asarray(weights, dtype=float)
        B = weights.shape[0]
        nb, nc = s.n_bodies, s.n_cables
        train = mode == "train"
        normalize = base_stats is not None

        pos = np.empty((B, nb, 3))
        quat_arr = np.empty((B, nb, 4))
        lin_vel = np.empty((B, nb, 3))
        ang_vel = np.empty((B, nb, 3))
        rest = np.empty((B, nc))
        target = np.empty((B, nc))
        self._reset_rows(pos, quat_arr, lin_vel, ang_vel, rest, target, slice(None))

        active = np.ones(B, dtype=bool)
        faulted = np.zeros(B, dtype=bool)
        steps = np.zeros(B, dtype=np.int64)

        if normalize:
            count0, mean0, var0 = base_stats
            cnt_c = np.full(B, int(count0), dtype=np.int64)
            mean_c = np.tile(np.asarray(mean0, dtype=float), (B, 1))
            var_c = np.tile(np.asarray(var0, dtype=float), (B, 1))
        if train:
            cnt_b = np.zeros(B, dtype=np.int64)
            mean_b = np.zeros((B, model.OBS_DIM))
            var_b = np.zeros((B, model.OBS_DIM))

        control_dt = 1.0 / cfg.control_rate
        dt = control_dt / p.substeps
        k = cfg.decision_interval
        node_body = s.node_body
        locals_by_body = [s.node_local[sl] for sl in s.body_slices]
        contact = s.contact
        dt_inv_mass = (dt * s.inv_mass)[:, None]
        rate_step = s.rate_limit * dt

        for step_index in range(cfg.horizon_steps):
            if step_index % k == 0:
                obs = self._observations(pos, quat_arr, lin_vel, ang_vel,
                                         locals_by_body, node_body)
                act_col = active.astype(float)[:, None]
                if train and normalize:
                    # Masked Welford: inactive rows multiply their increments
                    # by 0.0, reproducing RunningStats.update bitwise for the
                    # active ones.
                    cnt_new = cnt_c + active
                    delta = obs - mean_c
                    mean_c = mean_c + (delta / cnt_new[:, None]) * act_col
                    var_c = var_c + (((delta * (obs - mean_c)) - var_c)
                                     / cnt_new[:, None]) * act_col
                    cnt_c = cnt_new
                    cntb_new = cnt_b + active
                    delta_b = obs - mean_b
                    mean_b = mean_b + (delta_b / cntb_new[:, None]) * act_col
                    var_b = var_b + (((delta_b * (obs - mean_b)) - var_b)
                                     / cntb_new[:, None]) * act_col
                    cnt_b = cntb_new
                if normalize and (train or count0 > 0):
                    x = (obs - mean_c) / np.sqrt(var_c + variance_floor)
                else:
                    x = obs
                actions = np.einsum("bij,bj->bi", weights, x)
                delta_t = (np.minimum(np.maximum(actions, -cfg.action_clip),
                                      cfg.action_clip) * self._scaled_mask) * act_col
                target[:] = np.minimum(np.maximum(target + delta_t, s.rest_lo), s.rest_hi)

            active_col = active.astype(float)[:, None, None]
            for _ in range(p.substeps):
                self._substep(pos, quat_arr, lin_vel, ang_vel, rest, target,
                              dt, dt_inv_mass, rate_step, locals_by_body, node_body,
                              contact)
                lin_vel *= active_col
                ang_vel *= active_col

            # Per-row health check; sanitize any non-finite row in place.
            probe = (pos.sum(axis=(1, 2)) + lin_vel.sum(axis=(1, 2))
                     + quat_arr.sum(axis=(1, 2)) + ang_vel.sum(axis=(1, 2)))
            bad = ~np.isfinite(probe)
            if bad.any():
                rows = np.flatnonzero(bad)
                self._reset_rows(pos, quat_arr, lin_vel, ang_vel, rest, target, rows)
                faulted[rows] = True
                steps[rows] = 0
                active[rows] = False

            # Tilt criteria from the quaternions: the vertical component of a
            # body's local z axis is 1 - 2 (qx^2 + qy^2).
            qx = quat_arr[:, :, 1]
            qy = quat_arr[:, :, 2]
            up = np.abs(1.0 - 2.0 * (qx * qx + qy * qy))
            ok = (up[:, model.LEG] >= self._cos_leg) & (up[:, model.FRAME] >= self._cos_frame)
            survived = active & ok
            steps += survived
            active = survived
            if not active.any():
                break

        out = []
        for i in range(B):
            n = int(steps[i])
            batch = None
            if train and normalize and not faulted[i] and cnt_b[i] > 0:
                rs = RunningStats(model.OBS_DIM)
                rs.count = int(cnt_b[i])
                rs.mean = mean_b[i].copy()
                rs.var = var_b[i].copy()
                batch = rs
            if faulted[i]:
                out.append({"reward": 0.0, "steps": 0, "seconds": 0.0,
                            "batch": None, "faulted": True})
            else:
                out.append({"reward": float(n), "steps": n,
                            "seconds": n / cfg.control_rate,
                            "batch": batch, "faulted": False})
        return out

    def _observations(self, pos, quat_arr, lin_vel, ang_vel, locals_by_body, node_body):
        s = self.specs
        B = pos.shape[0]
        rot = quat.to_matrix(quat_arr)
        offsets = np.concatenate(
            [np.matmul(loc, rot[:, i].transpose(0, 2, 1))
             for i, loc in enumerate(locals_by_body)], axis=1)
        node_pos = pos[:, node_body] + offsets
        node_vel = lin_vel[:, node_body] + quat.cross3(ang_vel[:, node_body], offsets)
        d = np.matmul(s.cable_diff, node_pos)
        lengths = np.sqrt((d * d).sum(axis=2))
        return np.concatenate([lengths, node_pos.reshape(B, -1),
                               node_vel.reshape(B, -1)], axis=1)

    def _substep(self, pos, quat_arr, lin_vel, ang_vel, rest, target,
                 dt, dt_inv_mass, rate_step, locals_by_body, node_body, contact):
        s = self.specs
        rot = quat.to_matrix(quat_arr)
        offsets = np.concatenate(
            [np.matmul(loc, rot[:, i].transpose(0, 2, 1))
             for i, loc in enumerate(locals_by_body)], axis=1)
        node_pos = pos[:, node_body] + offsets
        node_vel = lin_vel[:, node_body] + quat.cross3(ang_vel[:, node_body], offsets)

        d = np.matmul(s.cable_diff, node_pos)
        length = np.sqrt((d * d).sum(axis=2))
        unit = d / np.maximum(length, dynamics.DEGENERATE_LENGTH)[:, :, None]
        rate = (np.matmul(s.cable_diff, node_vel) * unit).sum(axis=2)
        force = s.cable_k * (length - rest) + s.cable_c * rate
        tension = np.maximum(force, 0.0) * (length > rest)
        node_force = np.matmul(s.incidence, tension[:, :, None] * unit)

        z = node_pos[:, :, 2]
        if (z < 0.0).any():
            below = z < 0.0
            normal = np.maximum(0.0, -contact.ground_stiffness * z
                                - contact.ground_damping * node_vel[:, :, 2]) * below
            vt = node_vel[:, :, :2]
            speed = np.sqrt((vt * vt).sum(axis=2))
            scale = np.minimum(1.0, speed / contact.friction_regularization_velocity)
            friction = (contact.friction_coefficient * normal * scale)[:, :, None]
            node_force[:, :, :2] -= friction * (vt / np.maximum(
                speed, dynamics.DEGENERATE_LENGTH)[:, :, None])
            node_force[:, :, 2] += normal

        forces = np.matmul(s.body_agg, node_force) + s.gravity_force
        torques = np.matmul(s.body_agg, quat.cross3(offsets, node_force))

        lin_vel += forces * dt_inv_mass
        rot_t = rot.transpose(0, 1, 3, 2)
        omega_b = (rot_t @ ang_vel[:, :, :, None])[:, :, :, 0]
        torque_b = (rot_t @ torques[:, :, :, None])[:, :, :, 0]
        gyro = quat.cross3(omega_b, (s.inertia @ omega_b[:, :, :, None])[:, :, :, 0])
        omega_b += dt * (s.inv_inertia @ (torque_b - gyro)[:, :, :, None])[:, :, :, 0]
        ang_vel[:] = (rot @ omega_b[:, :, :, None])[:, :, :, 0]

        pos += lin_vel * dt
        dq = quat.from_scaled_axis(ang_vel * dt)
        quat_arr[:] = quat.normalize(quat.multiply(dq, quat_arr))

        delta = target - rest
        rest += np.minimum(np.maximum(delta, -rate_step), rate_step)
        rest[:] = np.minimum(np.maximum(rest, s.rest_lo), s.rest_hi)
