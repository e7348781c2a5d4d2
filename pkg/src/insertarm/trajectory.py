"""Time-parameterized desired task trajectories: single-axis sine waves about
a start pose and quintic point-to-point moves, plus the haptic ramp used to
replay insertion runs without an operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainError
from .kinematics import Pose, TaskState
from .rotations import log_rotmat


@dataclass
class TrajectorySpec:
    """Either a per-axis sine about start_pose or a quintic point-to-point move.

    Axis indices 0..2 select translation (amplitude in m), 3..5 orientation
    (rotation about the corresponding base axis, amplitude in rad). All
    non-selected axes stay bit-identical to start_pose.
    """

    kind: str  # "sine" | "point_to_point"
    start_pose: Pose
    axis: int = 0
    amplitude: float = 0.05
    period: float = 8.0
    goal_pose: Pose | None = None
    duration: float = 4.0

    def __post_init__(self):
        if self.kind not in ("sine", "point_to_point"):
            raise ConfigurationError(f"unknown trajectory kind {self.kind!r}")
        if self.kind == "sine":
            if not 0 <= self.axis <= 5:
                raise ConfigurationError(f"sine axis must be 0..5, got {self.axis}")
            if self.amplitude <= 0.0 or self.period <= 0.0:
                raise ConfigurationError("sine needs amplitude > 0 and period > 0")
        else:
            if self.goal_pose is None:
                raise ConfigurationError("point_to_point needs a goal_pose")
            if self.duration <= 0.0:
                raise ConfigurationError("point_to_point needs duration > 0")


class TrajectorySample(NamedTuple):
    state: TaskState
    accel: np.ndarray  # desired task acceleration, 6-vector


def _sine_sample(spec: TrajectorySpec, t: float) -> TrajectorySample:
    omega = 2.0 * np.pi / spec.period
    disp = spec.amplitude * np.sin(omega * t)
    vel = spec.amplitude * omega * np.cos(omega * t)
    acc = -spec.amplitude * omega * omega * np.sin(omega * t)

    twist = np.zeros(6)
    accel = np.zeros(6)
    twist[spec.axis] = vel
    accel[spec.axis] = acc
    if spec.axis < 3:
        delta = np.zeros(3)
        delta[spec.axis] = disp
        pose = spec.start_pose.translated(delta)
    else:
        phi = np.zeros(3)
        phi[spec.axis - 3] = disp
        pose = spec.start_pose.rotated_by(phi)
    return TrajectorySample(TaskState(pose=pose, twist=twist), accel)


def _quintic(s: float) -> tuple[float, float, float]:
    """Quintic blend with zero velocity/acceleration at both ends, s in [0, 1]."""
    pos = 10.0 * s**3 - 15.0 * s**4 + 6.0 * s**5
    vel = 30.0 * s**2 - 60.0 * s**3 + 30.0 * s**4
    acc = 60.0 * s - 180.0 * s**2 + 120.0 * s**3
    return pos, vel, acc


def _p2p_sample(spec: TrajectorySpec, t: float) -> TrajectorySample:
    tt = min(t, spec.duration)
    s = tt / spec.duration
    blend, dblend, ddblend = _quintic(s)
    dblend /= spec.duration
    ddblend /= spec.duration**2
    if t >= spec.duration:
        dblend = 0.0
        ddblend = 0.0

    dp = spec.goal_pose.position - spec.start_pose.position
    dphi = log_rotmat(spec.goal_pose.rotation @ spec.start_pose.rotation.T)

    if t >= spec.duration:
        pose = spec.goal_pose.copy()
    else:
        pose = Pose(
            position=spec.start_pose.position + blend * dp,
            rotation=spec.start_pose.rotated_by(blend * dphi).rotation,
        )
    twist = np.concatenate([dblend * dp, dblend * dphi])
    accel = np.concatenate([ddblend * dp, ddblend * dphi])
    return TrajectorySample(TaskState(pose=pose, twist=twist), accel)


def sample(spec: TrajectorySpec, t: float) -> TrajectorySample:
    """Desired task state and acceleration at time t >= 0."""
    if t < 0.0:
        raise DomainError(f"trajectory time must be >= 0, got {t}")
    if spec.kind == "sine":
        return _sine_sample(spec, t)
    return _p2p_sample(spec, t)


@dataclass(frozen=True)
class InsertionProfile:
    """Haptic target ramp x_h(t) = min(speed * t, depth)."""

    speed: float
    depth: float

    def __post_init__(self):
        if self.speed <= 0.0 or self.depth <= 0.0:
            raise ConfigurationError("insertion profile needs speed > 0 and depth > 0")

    def __call__(self, t: float) -> float:
        if t < 0.0:
            raise DomainError(f"profile time must be >= 0, got {t}")
        return min(self.speed * t, self.depth)


def insertion_profile(speed: float, depth: float) -> InsertionProfile:
    """Constant-speed ramp clamped at the commanded depth."""
    return InsertionProfile(speed=speed, depth=depth)
