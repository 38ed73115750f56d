"""Unit-quaternion helpers, (w, x, y, z) convention, batch-friendly.

All functions broadcast over leading dimensions: quaternions are (..., 4)
arrays, vectors are (..., 3).
"""

import numpy as np


def cross3(a, b):
    """Cross product over (..., 3) arrays. np.cross's axis handling costs more
    than the whole arithmetic at this problem size, so spell it out."""
    out = np.empty(np.broadcast(a, b).shape)
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    out[..., 0] = a1 * b2 - a2 * b1
    out[..., 1] = a2 * b0 - a0 * b2
    out[..., 2] = a0 * b1 - a1 * b0
    return out


def normalize(q):
    n = np.sqrt((q * q).sum(axis=-1, keepdims=True))
    return q / n


def conjugate(q):
    out = np.array(q, dtype=float, copy=True)
    out[..., 1:] = -out[..., 1:]
    return out


def multiply(q1, q2):
    """Hamilton product q1 * q2."""
    w1, x1, y1, z1 = q1[..., 0], q1[..., 1], q1[..., 2], q1[..., 3]
    w2, x2, y2, z2 = q2[..., 0], q2[..., 1], q2[..., 2], q2[..., 3]
    out = np.empty(np.broadcast(q1, q2).shape, dtype=float)
    out[..., 0] = w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2
    out[..., 1] = w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2
    out[..., 2] = w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2
    out[..., 3] = w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2
    return out


def rotate(q, v):
    """Rotate vectors by unit quaternions: v + 2 q_v x (q_v x v + w v)."""
    qv = q[..., 1:]
    w = q[..., :1]
    t = cross3(qv, v) + w * v
    return v + 2.0 * cross3(qv, t)


def rotate_inverse(q, v):
    """Rotate by the inverse (conjugate) of unit quaternions."""
    qv = -q[..., 1:]
    w = q[..., :1]
    t = cross3(qv, v) + w * v
    return v + 2.0 * cross3(qv, t)


def from_scaled_axis(phi):
    """Exponential map: rotation vector phi (rad) -> unit quaternion.

    The sin(a/2)/a factor is evaluated with the angle floored at 1e-12 rad;
    below that the factor multiplies a vector of magnitude < 1e-12, so the
    resulting quaternion error is below double precision anyway.
    """
    angle = np.sqrt((phi * phi).sum(axis=-1, keepdims=True))
    half = 0.5 * angle
    k = np.sin(half) / np.maximum(angle, 1e-12)
    return np.concatenate([np.cos(half), k * phi], axis=-1)


def from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * float(angle)
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def to_matrix(q):
    """Rotation matrix (body -> world) of a unit quaternion."""
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(q.shape[:-1] + (3, 3), dtype=float)
    out[..., 0, 0] = 1 - 2 * (y * y + z * z)
    out[..., 0, 1] = 2 * (x * y - w * z)
    out[..., 0, 2] = 2 * (x * z + w * y)
    out[..., 1, 0] = 2 * (x * y + w * z)
    out[..., 1, 1] = 1 - 2 * (x * x + z * z)
    out[..., 1, 2] = 2 * (y * z - w * x)
    out[..., 2, 0] = 2 * (x * z - w * y)
    out[..., 2, 1] = 2 * (y * z + w * x)
    out[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return out
