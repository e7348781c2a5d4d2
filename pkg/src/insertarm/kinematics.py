"""Serial-chain model: forward kinematics, geometric Jacobian, Jacobian time
derivative, and task-space state extraction.

Frame conventions (documented once, used everywhere): all task-space
quantities live in the fixed base frame. A twist is [linear velocity;
angular velocity]. Joint i carries a fixed offset transform from its parent
link frame, followed by a rotation of q_i about its (unit) axis; link i's
inertial parameters are expressed in the frame after that rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _native
from .errors import ConfigurationError
from .rotations import exp_rotvec, is_rotation, log_rotmat

_JDOT_STEP = 1e-6


@dataclass(frozen=True)
class JointSpec:
    """One revolute joint: fixed parent-frame offset plus a rotation axis."""

    axis: np.ndarray
    offset_translation: np.ndarray
    offset_rotation: np.ndarray
    limits: tuple[float, float] = (-np.pi, np.pi)
    viscous_friction: float = 0.0
    name: str = ""

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ConfigurationError(f"joint axis must be a unit 3-vector, got {self.axis}")
        if not is_rotation(np.asarray(self.offset_rotation, dtype=float)):
            raise ConfigurationError("joint offset rotation is not a proper rotation")
        if self.limits[0] > self.limits[1]:
            raise ConfigurationError(f"joint limits reversed: {self.limits}")
        if self.viscous_friction < 0.0:
            raise ConfigurationError("viscous friction must be >= 0")


@dataclass(frozen=True)
class LinkParams:
    """Mass (kg), COM offset (m) and rotational inertia about the COM (kg m^2)."""

    mass: float
    com: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ConfigurationError(f"link mass must be > 0, got {self.mass}")
        inertia = np.asarray(self.inertia, dtype=float)
        if inertia.shape != (3, 3):
            raise ConfigurationError("link inertia must be 3x3")
        if np.abs(inertia - inertia.T).max() > 1e-12:
            raise ConfigurationError("link inertia must be symmetric")
        if np.linalg.eigvalsh(inertia).min() <= 0.0:
            raise ConfigurationError("link inertia must be positive definite")


class KinematicChain:
    """Serial chain of revolute joints with per-link inertial parameters."""

    def __init__(
        self,
        joints: list[JointSpec],
        links: list[LinkParams],
        ee_translation: np.ndarray | None = None,
        ee_rotation: np.ndarray | None = None,
        gravity: np.ndarray | None = None,
        name: str = "",
    ):
        if len(joints) < 1:
            raise ConfigurationError("chain needs at least one joint")
        if len(links) != len(joints):
            raise ConfigurationError(
                f"need one link per joint: {len(joints)} joints, {len(links)} links"
            )
        self.joints = tuple(joints)
        self.links = tuple(links)
        self.name = name
        self.gravity = (
            np.array([0.0, 0.0, -9.81]) if gravity is None else np.asarray(gravity, dtype=float)
        )

        # stacked arrays consumed by the jitted sweeps
        n = len(joints)
        self._r_off = np.stack([np.asarray(j.offset_rotation, dtype=float) for j in joints])
        self._p_off = np.stack([np.asarray(j.offset_translation, dtype=float) for j in joints])
        self._axes = np.stack([np.asarray(j.axis, dtype=float) for j in joints])
        self._mass = np.array([l.mass for l in links], dtype=float)
        self._com = np.stack([np.asarray(l.com, dtype=float) for l in links])
        self._inertia = np.stack([np.asarray(l.inertia, dtype=float) for l in links])
        self._r_ee = np.eye(3) if ee_rotation is None else np.asarray(ee_rotation, dtype=float)
        self._p_ee = (
            np.zeros(3) if ee_translation is None else np.asarray(ee_translation, dtype=float)
        )
        if not is_rotation(self._r_ee):
            raise ConfigurationError("end-effector offset rotation is not a proper rotation")
        self._limits_lo = np.array([j.limits[0] for j in joints])
        self._limits_hi = np.array([j.limits[1] for j in joints])
        self.viscous_friction = np.array([j.viscous_friction for j in joints])
        self.dof = n

    def check_q(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dof,):
            raise ConfigurationError(f"expected {self.dof} joint positions, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ConfigurationError("joint positions must be finite")
        return q

    def joint_state(self, q: np.ndarray, dq: np.ndarray) -> "JointState":
        """Validated JointState; enforces finiteness and the configured joint limits."""
        q = self.check_q(q)
        dq = np.asarray(dq, dtype=float)
        if dq.shape != (self.dof,) or not np.all(np.isfinite(dq)):
            raise ConfigurationError("joint velocities must be finite with one entry per joint")
        if np.any(q < self._limits_lo - 1e-12) or np.any(q > self._limits_hi + 1e-12):
            raise ConfigurationError(f"joint positions {q} outside configured limits")
        return JointState(q=q, dq=dq)


@dataclass
class JointState:
    """Joint positions (rad) and velocities (rad/s)."""

    q: np.ndarray
    dq: np.ndarray


@dataclass
class Pose:
    """Base-frame position (m) and orientation (proper rotation matrix)."""

    position: np.ndarray
    rotation: np.ndarray

    @classmethod
    def identity(cls) -> "Pose":
        return cls(position=np.zeros(3), rotation=np.eye(3))

    def copy(self) -> "Pose":
        return Pose(position=self.position.copy(), rotation=self.rotation.copy())

    def rotvec(self) -> np.ndarray:
        """Principal-branch rotation vector of the orientation."""
        return log_rotmat(self.rotation)

    def translated(self, delta: np.ndarray) -> "Pose":
        return Pose(position=self.position + np.asarray(delta, dtype=float), rotation=self.rotation.copy())

    def rotated_by(self, phi: np.ndarray) -> "Pose":
        """Pose with orientation pre-rotated by the base-frame rotation vector phi."""
        return Pose(position=self.position.copy(), rotation=exp_rotvec(phi) @ self.rotation)

    def assert_valid(self, tol: float = 1e-10):
        if not is_rotation(self.rotation, tol):
            raise ConfigurationError("pose orientation violates rotation invariants")


@dataclass
class TaskState:
    """End-effector pose plus base-frame twist [v; w]."""

    pose: Pose
    twist: np.ndarray = field(default_factory=lambda: np.zeros(6))


def forward_kinematics(chain: KinematicChain, q: np.ndarray) -> Pose:
    """Base-frame pose of the end-effector mount frame."""
    q = chain.check_q(q)
    rot, pos = _native.fk(chain._r_off, chain._p_off, chain._axes, q, chain._r_ee, chain._p_ee)
    return Pose(position=pos, rotation=rot)


def geometric_jacobian(chain: KinematicChain, q: np.ndarray) -> np.ndarray:
    """6 x dof matrix mapping joint velocities to the base-frame twist [v; w]."""
    q = chain.check_q(q)
    jac, _, _ = _native.jacobian_and_pose(
        chain._r_off, chain._p_off, chain._axes, q, chain._r_ee, chain._p_ee
    )
    return jac


def jacobian_time_derivative(chain: KinematicChain, state: JointState) -> np.ndarray:
    """dJ/dt at (q, dq), by directional central difference along dq (h = 1e-6)."""
    q = chain.check_q(state.q)
    dq = np.asarray(state.dq, dtype=float)
    if dq.shape != (chain.dof,):
        raise ConfigurationError("dq dimension mismatch")
    if not np.any(dq):
        return np.zeros((6, chain.dof))
    h = _JDOT_STEP
    step = dq * (0.5 * h)
    j_plus, _, _ = _native.jacobian_and_pose(
        chain._r_off, chain._p_off, chain._axes, q + step, chain._r_ee, chain._p_ee
    )
    j_minus, _, _ = _native.jacobian_and_pose(
        chain._r_off, chain._p_off, chain._axes, q - step, chain._r_ee, chain._p_ee
    )
    return (j_plus - j_minus) / h


def link_com_positions(chain: KinematicChain, q: np.ndarray) -> np.ndarray:
    """Base-frame center-of-mass position of every link, shape (dof, 3)."""
    q = chain.check_q(q)
    r_w, p_w = _native.chain_frames(chain._r_off, chain._p_off, chain._axes, q)
    return p_w + np.einsum("nij,nj->ni", r_w, chain._com)


def task_state(chain: KinematicChain, state: JointState) -> TaskState:
    """Pose from forward kinematics plus twist J(q) dq."""
    q = chain.check_q(state.q)
    jac, rot, pos = _native.jacobian_and_pose(
        chain._r_off, chain._p_off, chain._axes, q, chain._r_ee, chain._p_ee
    )
    twist = jac @ np.asarray(state.dq, dtype=float)
    return TaskState(pose=Pose(position=pos, rotation=rot), twist=twist)
