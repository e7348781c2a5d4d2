"""SO(3) helpers: Rodrigues exponential, principal log map, small utilities.

All rotation matrices are 3x3 proper rotations acting on base-frame column
vectors. Rotation vectors are axis*angle with angle in [0, pi] (principal
branch).
"""

import numpy as np


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(v) @ w == cross(v, w)."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def exp_rotvec(phi: np.ndarray) -> np.ndarray:
    """Matrix exponential of a rotation vector (Rodrigues formula)."""
    phi = np.asarray(phi, dtype=float)
    angle = float(np.linalg.norm(phi))
    if angle < 1e-12:
        # second-order series keeps the result orthonormal to machine precision
        k = hat(phi)
        return np.eye(3) + k + 0.5 * (k @ k)
    axis = phi / angle
    k = hat(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def axis_angle_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation by `angle` about the unit vector `axis`."""
    k = hat(np.asarray(axis, dtype=float))
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def log_rotmat(rot: np.ndarray) -> np.ndarray:
    """Principal-branch rotation vector of a proper rotation matrix.

    Returns axis*angle with angle in [0, pi]. Near angle = pi the axis is
    recovered from the dominant diagonal entry, which keeps the result stable
    where the antisymmetric part vanishes.
    """
    trace = float(np.trace(rot))
    cos_angle = max(-1.0, min(1.0, 0.5 * (trace - 1.0)))
    angle = float(np.arccos(cos_angle))
    vee = 0.5 * np.array(
        [rot[2, 1] - rot[1, 2], rot[0, 2] - rot[2, 0], rot[1, 0] - rot[0, 1]]
    )
    if angle < 1e-8:
        # rot ~ I + hat(phi): vee already equals phi to second order
        return vee
    if angle < np.pi - 1e-4:
        return vee * (angle / np.sin(angle))
    # angle ~ pi: the antisymmetric part degenerates. Use the exact identity
    # (R + R^T)/2 - cos(angle) I = (1 - cos(angle)) axis axis^T, which stays
    # well-scaled (1 - cos ~ 2) where sin(angle) vanishes.
    outer = 0.5 * (rot + rot.T) - cos_angle * np.eye(3)
    i = int(np.argmax(np.diag(outer)))
    axis = outer[:, i] / np.linalg.norm(outer[:, i])
    # fix the sign using the antisymmetric remnant (zero exactly at pi, where
    # either sign is a valid principal log)
    if np.dot(axis, vee) < 0.0:
        axis = -axis
    return axis * angle


def orientation_error(rot_desired: np.ndarray, rot_measured: np.ndarray) -> np.ndarray:
    """Base-frame rotation vector taking the measured orientation to the desired one."""
    return log_rotmat(rot_desired @ rot_measured.T)


def is_rotation(rot: np.ndarray, tol: float = 1e-10) -> bool:
    """True if rot is orthonormal with determinant +1 within tol."""
    if rot.shape != (3, 3):
        return False
    if not np.all(np.isfinite(rot)):
        return False
    err = np.abs(rot.T @ rot - np.eye(3)).max()
    return err < tol and abs(float(np.linalg.det(rot)) - 1.0) < tol
