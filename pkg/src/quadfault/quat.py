"""Unit quaternion helpers.

Convention used throughout the package: scalar-first storage [w, x, y, z],
and q represents the rotation from body axes to world axes, so
rotate(q, v_body) gives the world-frame vector.  All functions take and
return plain numpy arrays.
"""

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def multiply(q1, q2):
    """Hamilton product q1 * q2 (composes rotations, q1 applied last)."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def conjugate(q):
    """Conjugate, which for a unit quaternion is also the inverse."""
    return np.array([q[0], -q[1], -q[2], -q[3]])


def normalize(q):
    n = np.sqrt(q @ q)
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero quaternion")
    return q / n


def rotate(q, v):
    """Rotate vector v by q (body -> world for an attitude quaternion).

    Uses the 2-cross-product form, cheaper than building the full matrix.
    """
    qv = q[1:]
    t = 2.0 * np.cross(qv, v)
    return v + q[0] * t + np.cross(qv, t)


def rotate_inv(q, v):
    """Rotate v by the inverse of q (world -> body)."""
    qv = -q[1:]
    t = 2.0 * np.cross(qv, v)
    return v + q[0] * t + np.cross(qv, t)


def to_matrix(q):
    """3x3 rotation matrix R with R @ v_body = world-frame vector."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def body_z(q):
    """Third column of the rotation matrix (thrust axis in world frame)."""
    w, x, y, z = q
    return np.array([2 * (x * z + w * y), 2 * (y * z - w * x), 1 - 2 * (x * x + y * y)])


def from_yaw(psi):
    """Pure rotation about the world/body z axis by angle psi [rad]."""
    return np.array([np.cos(psi / 2.0), 0.0, 0.0, np.sin(psi / 2.0)])


def tilt_from_axis(b3):
    """Minimal-rotation quaternion taking e3 to the unit vector b3.

    Singular when b3 is antiparallel to e3 (b3[2] -> -1); raises ValueError
    there since a 180 degree tilt has no unique minimal rotation.
    """
    bz = b3[2]
    if bz < -1.0 + 1e-8:
        raise ValueError("tilt_from_axis singular: axis antiparallel to e3")
    s = 1.0 / np.sqrt(2.0 * (1.0 + bz))
    return np.array([s * (1.0 + bz), -s * b3[1], s * b3[0], 0.0])


def yaw_of(q):
    """Yaw angle from the tilt/yaw decomposition q = q_tilt * q_yaw.

    The residual q_tilt^-1 * q is a pure z rotation; returns its angle
    wrapped to (-pi, pi].
    """
    qt = tilt_from_axis(body_z(q))
    qz = multiply(conjugate(qt), q)
    return 2.0 * np.arctan2(qz[3], qz[0])


def derivative(q, omega):
    """Kinematic derivative qdot = 0.5 * q * [0, omega], omega in body frame."""
    w, x, y, z = q
    ox, oy, oz = omega
    return 0.5 * np.array([
        -x * ox - y * oy - z * oz,
        w * ox + y * oz - z * oy,
        w * oy - x * oz + z * ox,
        w * oz + x * oy - y * ox,
    ])
