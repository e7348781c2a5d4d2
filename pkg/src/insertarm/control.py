"""The three control laws: task-space computed torque with diagonal PD gains,
task-space admittance (virtual mass-spring-damper driven by measured external
force), and the scalar haptic-guided insertion law.

Controllers are pure state-in/state-out functions; the simulation loop owns
every piece of mutable controller state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _native
from .errors import ConfigurationError, DomainError, SingularityError
from .kinematics import JointState, KinematicChain, Pose, TaskState, jacobian_time_derivative
from .rotations import exp_rotvec, log_rotmat

# Damping engages only this close to a singularity; exact pseudo-inverse
# otherwise, so fine tracking carries no regularization bias.
DAMPING_ENGAGE_SIGMA = 1e-3
SINGULARITY_SIGMA = 1e-8


@dataclass
class GainSet:
    """Diagonal task-space PD gains plus the scalar insertion-law gains."""

    kp_diag: np.ndarray = field(default_factory=lambda: np.full(6, 400.0))
    kd_diag: np.ndarray = field(default_factory=lambda: np.full(6, 40.0))
    insertion_kp: float = 80.0
    insertion_kd: float = 0.2
    insertion_ko: float = 5e-4
    damping_lambda: float = 1e-4

    def __post_init__(self):
        self.kp_diag = np.asarray(self.kp_diag, dtype=float)
        self.kd_diag = np.asarray(self.kd_diag, dtype=float)
        if self.kp_diag.shape != (6,) or self.kd_diag.shape != (6,):
            raise ConfigurationError("kp_diag and kd_diag must be 6-vectors")
        if np.any(self.kp_diag < 0.0) or np.any(self.kd_diag < 0.0):
            raise ConfigurationError("task-space gains must be >= 0")
        if self.damping_lambda < 0.0:
            raise ConfigurationError("pseudo-inverse damping must be >= 0")


@dataclass
class VirtualImpedance:
    """Per-task-axis virtual mass, damping and stiffness rendered by admittance."""

    mass: np.ndarray = field(default_factory=lambda: np.full(6, 8.0))
    damping: np.ndarray = field(default_factory=lambda: np.full(6, 120.0))
    stiffness: np.ndarray = field(default_factory=lambda: np.full(6, 400.0))

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=float)
        self.damping = np.asarray(self.damping, dtype=float)
        self.stiffness = np.asarray(self.stiffness, dtype=float)
        for name, v in (("mass", self.mass), ("damping", self.damping), ("stiffness", self.stiffness)):
            if v.shape != (6,):
                raise ConfigurationError(f"impedance {name} must be a 6-vector")
        if np.any(self.mass <= 0.0):
            raise ConfigurationError("virtual mass entries must be > 0")
        if np.any(self.damping < 0.0) or np.any(self.stiffness < 0.0):
            raise ConfigurationError("impedance damping/stiffness must be >= 0")


@dataclass
class TaskError:
    """Position error, orientation log-map error, and twist error (base frame)."""

    p_err: np.ndarray
    phi_err: np.ndarray
    v_err: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.p_err, self.phi_err])


@dataclass
class AdmittanceState:
    """Virtual reference pose/twist plus the holding-mode anchor.

    a_ref holds the most recent virtual acceleration so the tracking layer can
    feed it forward.
    """

    x_ref: Pose
    v_ref: np.ndarray = field(default_factory=lambda: np.zeros(6))
    anchor: Pose = None  # type: ignore[assignment]
    a_ref: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        if self.anchor is None:
            self.anchor = self.x_ref.copy()

    @classmethod
    def at(cls, pose: Pose) -> "AdmittanceState":
        return cls(x_ref=pose.copy(), anchor=pose.copy())


def task_error(desired: TaskState, measured: TaskState) -> TaskError:
    """Error taking the measured task state to the desired one."""
    p_err = desired.pose.position - measured.pose.position
    phi_err = log_rotmat(desired.pose.rotation @ measured.pose.rotation.T)
    v_err = desired.twist - measured.twist
    return TaskError(p_err=p_err, phi_err=phi_err, v_err=v_err)


def pseudo_inverse(jac: np.ndarray, damping: float = 0.0) -> np.ndarray:
    """Damped least-squares pseudo-inverse J^T (J J^T + lambda^2 I)^-1.

    Computed through the SVD, which evaluates the identical expression for
    any matrix shape and reduces to the Moore-Penrose inverse at damping 0.
    """
    jac = np.asarray(jac, dtype=float)
    if not np.all(np.isfinite(jac)):
        raise ConfigurationError("Jacobian must be finite")
    u, sigma, vt = np.linalg.svd(jac, full_matrices=False)
    if damping == 0.0:
        cutoff = max(jac.shape) * np.finfo(float).eps * (sigma[0] if sigma.size else 0.0)
        inv_sigma = np.where(sigma > cutoff, 1.0 / np.where(sigma > cutoff, sigma, 1.0), 0.0)
    else:
        inv_sigma = sigma / (sigma**2 + damping**2)
    return (vt.T * inv_sigma) @ u.T


def computed_torque_full(
    chain: KinematicChain,
    state: JointState,
    desired: TaskState,
    ddx_desired: np.ndarray,
    gains: GainSet,
    gravity: np.ndarray | None = None,
) -> tuple[np.ndarray, TaskState, np.ndarray, TaskError]:
    """computed_torque plus the intermediates (measured state, Jacobian, task
    error) that the simulation loop reuses for logging and wrench mapping."""
    if not np.any(gains.kp_diag > 0.0):
        raise ConfigurationError("tracking mode needs at least one positive Kp entry")
    q = chain.check_q(state.q)
    dq = np.asarray(state.dq, dtype=float)
    ddx_desired = np.asarray(ddx_desired, dtype=float)
    if ddx_desired.shape != (6,):
        raise ConfigurationError("desired task acceleration must be a 6-vector")

    jac, rot, pos = _native.jacobian_and_pose(
        chain._r_off, chain._p_off, chain._axes, q, chain._r_ee, chain._p_ee
    )
    measured = TaskState(pose=Pose(position=pos, rotation=rot), twist=jac @ dq)
    err = task_error(desired, measured)
    phi_norm = float(np.linalg.norm(err.phi_err))
    if phi_norm >= np.pi - 1e-9:
        raise DomainError("orientation error at the log-map antipode; no unique error direction")

    ddx_cmd = ddx_desired + gains.kp_diag * err.stacked() + gains.kd_diag * err.v_err
    jdot = jacobian_time_derivative(chain, state)

    u, sigma, vt = np.linalg.svd(jac, full_matrices=False)
    sigma_min = float(sigma[-1])
    if gains.damping_lambda == 0.0 and sigma_min < SINGULARITY_SIGMA:
        raise SingularityError(sigma_min)
    lam = gains.damping_lambda if sigma_min < DAMPING_ENGAGE_SIGMA else 0.0
    if lam == 0.0:
        cutoff = max(jac.shape) * np.finfo(float).eps * float(sigma[0])
        inv_sigma = np.where(sigma > cutoff, 1.0 / np.where(sigma > cutoff, sigma, 1.0), 0.0)
    else:
        inv_sigma = sigma / (sigma**2 + lam**2)
    ddq_c = ((vt.T * inv_sigma) @ u.T) @ (ddx_cmd - jdot @ dq)

    g_vec = chain.gravity if gravity is None else np.asarray(gravity, dtype=float)
    tau = _native.rnea(
        chain._r_off, chain._p_off, chain._axes, q, dq, ddq_c,
        chain._mass, chain._com, chain._inertia, g_vec,
    )
    return tau, measured, jac, err


def computed_torque(
    chain: KinematicChain,
    state: JointState,
    desired: TaskState,
    ddx_desired: np.ndarray,
    gains: GainSet,
    gravity: np.ndarray | None = None,
) -> np.ndarray:
    """Task-space computed-torque command.

    Maps the PD-corrected task acceleration through the (damped) Jacobian
    pseudo-inverse and turns the resulting joint acceleration into torques
    with the full inverse dynamics:

        ddq_c = J^+ [ddx_d + Kp e + Kd de - Jdot dq]
        tau   = M(q) ddq_c + c(q, dq) + g(q)
    """
    return computed_torque_full(chain, state, desired, ddx_desired, gains, gravity)[0]


def compensation_torque(
    chain: KinematicChain,
    state: JointState,
    gravity: np.ndarray | None = None,
) -> np.ndarray:
    """Torque canceling gravity, Coriolis/centrifugal bias and configured
    viscous friction, leaving external force as the only driving factor."""
    q = chain.check_q(state.q)
    dq = np.asarray(state.dq, dtype=float)
    g_vec = chain.gravity if gravity is None else np.asarray(gravity, dtype=float)
    bias = _native.rnea(
        chain._r_off, chain._p_off, chain._axes, q, dq, np.zeros(chain.dof),
        chain._mass, chain._com, chain._inertia, g_vec,
    )
    return bias + chain.viscous_friction * dq


def admittance_step(
    adm: AdmittanceState,
    f_ext: np.ndarray,
    imp: VirtualImpedance,
    mode: str,
    dt: float,
) -> AdmittanceState:
    """One semi-implicit Euler step of the virtual task-space dynamics
    F_ext = M a + B v + K (x - anchor), integrated per axis.

    ``placement`` drops the stiffness term and re-anchors at the new pose
    every step (free drift under the operator's force); ``holding`` keeps the
    configured stiffness pulling back to the anchor. Orientation axes
    integrate in the log-map tangent space around the anchor orientation and
    the pose is rebuilt by the exponential map, so it stays a proper rotation.
    """
    if dt <= 0.0:
        raise ConfigurationError(f"admittance step needs dt > 0, got {dt}")
    if mode not in ("placement", "holding"):
        raise ConfigurationError(f"unknown admittance mode {mode!r}")
    f_ext = np.asarray(f_ext, dtype=float)
    if f_ext.shape != (6,):
        raise ConfigurationError("external wrench must be a 6-vector")

    delta = np.empty(6)
    delta[:3] = adm.x_ref.position - adm.anchor.position
    delta[3:] = log_rotmat(adm.x_ref.rotation @ adm.anchor.rotation.T)
    stiffness = np.zeros(6) if mode == "placement" else imp.stiffness

    accel = (f_ext - imp.damping * adm.v_ref - stiffness * delta) / imp.mass
    v_new = adm.v_ref + accel * dt
    delta_new = delta + v_new * dt

    position = adm.anchor.position + delta_new[:3]
    rotation = exp_rotvec(delta_new[3:]) @ adm.anchor.rotation
    x_ref = Pose(position=position, rotation=rotation)
    anchor = x_ref.copy() if mode == "placement" else adm.anchor
    return AdmittanceState(x_ref=x_ref, v_ref=v_new, anchor=anchor, a_ref=accel)


def insertion_control(
    x_haptic: float,
    x_tool: float,
    v_tool: float,
    f_tool: float,
    gains: GainSet,
) -> float:
    """Insertion-axis velocity command from the scaled haptic target.

    The haptic target is held constant between samples (zero-order hold), so
    the error rate reduces to -v_tool. f_tool is the sensed axial force,
    negative while tissue resists advance; with insertion_ko >= 0 the force
    term therefore retards insertion under resistance.
    """
    for name, v in (("x_haptic", x_haptic), ("x_tool", x_tool), ("v_tool", v_tool), ("f_tool", f_tool)):
        if not np.isfinite(v):
            raise ConfigurationError(f"{name} must be finite")
    err = x_haptic - x_tool
    return gains.insertion_kp * err + gains.insertion_kd * (-v_tool) + gains.insertion_ko * f_tool
