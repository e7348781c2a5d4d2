"""Simulated standalone tool-insertion end-effector.

Motor m2 drives the actuation roller that translates the tool along the
insertion axis; motor m1 spins the tool about that axis through a gearbox, so
both commands together produce helical motion. The roller transmission is
quasi-static and slip-free: motor angles are derived from tool motion through
the roller radius and gear ratios, and the axial drive force always balances
the external load up to the module's force limit, beyond which the advance
stalls. Axial force sensing is an ideal, delay-free channel (optional
zero-mean noise is injected by the caller).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class ToolSpec:
    """Mounted tool plus the module limits that apply while driving it."""

    diameter: float  # m
    min_clamp: float = 0.0004  # m
    max_clamp: float = 0.003  # m
    max_insertion_force: float = 10.0  # N, design requirement: >= 10 for the default module
    max_speed: float = 0.02  # m/s
    max_spin: float = 2.0 * np.pi  # rad/s

    def __post_init__(self):
        if self.diameter <= 0.0:
            raise ConfigurationError("tool diameter must be > 0")
        if self.min_clamp > self.max_clamp:
            raise ConfigurationError("min_clamp must be <= max_clamp")
        if self.max_insertion_force <= 0.0 or self.max_speed <= 0.0 or self.max_spin <= 0.0:
            raise ConfigurationError("module limits must be > 0")


@dataclass(frozen=True)
class RollerDrive:
    """Transmission constants tying tool motion to motor angles (no slip)."""

    roller_radius: float = 0.006  # m
    gear_m1: float = 2.0  # motor m1 revolutions per tool revolution
    gear_m2: float = 1.0  # motor m2 revolutions per roller revolution

    def __post_init__(self):
        if self.roller_radius <= 0.0 or self.gear_m1 <= 0.0 or self.gear_m2 <= 0.0:
            raise ConfigurationError("roller radius and gear ratios must be > 0")


@dataclass
class MotorState:
    angle: float = 0.0  # rad
    velocity: float = 0.0  # rad/s


@dataclass
class InsertionState:
    """Tool depth/rotation, realized rates, sensed axial force, motor states."""

    depth: float = 0.0
    theta: float = 0.0
    v: float = 0.0
    omega: float = 0.0
    sensed_force: float = 0.0
    motor_m1: MotorState = field(default_factory=MotorState)
    motor_m2: MotorState = field(default_factory=MotorState)
    drive_force: float = 0.0  # axial force delivered by the roller this step
    stalled: bool = False
    v_saturated: bool = False
    w_saturated: bool = False


@dataclass(frozen=True)
class ClampDecision:
    accepted: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.accepted


def clamp_check(tool: ToolSpec, module_range: tuple[float, float] | None = None) -> ClampDecision:
    """Whether the spring-loaded clamp can take the tool's diameter (closed interval)."""
    lo, hi = module_range if module_range is not None else (tool.min_clamp, tool.max_clamp)
    if lo <= 0.0 or hi <= 0.0:
        raise ConfigurationError("clamp range must be positive")
    if tool.diameter < lo:
        return ClampDecision(False, f"tool diameter {tool.diameter:g} m below clamp minimum {lo:g} m")
    if tool.diameter > hi:
        return ClampDecision(False, f"tool diameter {tool.diameter:g} m above clamp maximum {hi:g} m")
    return ClampDecision(True)


def helical_command(pitch: float, speed: float) -> tuple[float, float]:
    """Velocity and spin commands realizing a helix of the given pitch (m/rev)."""
    if pitch <= 0.0:
        raise DomainError(f"helical pitch must be > 0, got {pitch}")
    if speed < 0.0:
        raise DomainError(f"helical speed must be >= 0, got {speed}")
    return speed, 2.0 * np.pi * speed / pitch


def actuate(
    state: InsertionState,
    u_v: float,
    u_w: float,
    external_force: float,
    dt: float,
    tool: ToolSpec,
    drive: RollerDrive = RollerDrive(),
    force_noise: float = 0.0,
) -> InsertionState:
    """Advance the module by one step under saturated, force-limited commands.

    The quasi-static roller must deliver -external_force to keep the tool
    moving; if that exceeds the module limit the advance stalls (velocity 0,
    delivered force pinned at the limit). Depth never goes below 0: retracting
    past the entry point leaves the tool free.
    """
    if dt <= 0.0:
        raise ConfigurationError(f"actuate needs dt > 0, got {dt}")
    if not np.isfinite(external_force):
        raise ConfigurationError("external force must be finite")

    v = float(np.clip(u_v, -tool.max_speed, tool.max_speed))
    w = float(np.clip(u_w, -tool.max_spin, tool.max_spin))
    v_saturated = v != u_v
    w_saturated = w != u_w

    required = -external_force  # positive while tissue resists advance
    stalled = False
    if v > 0.0 and required > tool.max_insertion_force:
        v = 0.0
        stalled = True
    elif v < 0.0 and required < -tool.max_insertion_force:
        v = 0.0
        stalled = True
    delivered = float(np.clip(required, -tool.max_insertion_force, tool.max_insertion_force))

    depth = state.depth + v * dt
    if depth < 0.0:
        depth = 0.0
        v = (depth - state.depth) / dt
    theta = state.theta + w * dt

    # no-slip transmission: motor angles derive exactly from tool motion
    m2_angle = depth / (drive.roller_radius * drive.gear_m2)
    m2_vel = v / (drive.roller_radius * drive.gear_m2)
    m1_angle = theta * drive.gear_m1
    m1_vel = w * drive.gear_m1

    return InsertionState(
        depth=depth,
        theta=theta,
        v=v,
        omega=w,
        sensed_force=external_force + force_noise,
        motor_m1=MotorState(angle=m1_angle, velocity=m1_vel),
        motor_m2=MotorState(angle=m2_angle, velocity=m2_vel),
        drive_force=delivered,
        stalled=stalled,
        v_saturated=v_saturated,
        w_saturated=w_saturated,
    )
