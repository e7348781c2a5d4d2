import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from insertarm import ConfigurationError, DomainError
from insertarm.insertion import (
    ClampDecision,
    InsertionState,
    RollerDrive,
    ToolSpec,
    actuate,
    clamp_check,
    helical_command,
)

NEEDLE = ToolSpec(diameter=0.0017)


def test_default_module_meets_force_design_requirement():
    assert NEEDLE.max_insertion_force >= 10.0


def test_clamp_accepts_sixteen_gauge_needle():
    decision = clamp_check(NEEDLE, (0.0004, 0.003))
    assert decision.accepted and decision.reason is None


def test_clamp_boundary_is_closed():
    tool = ToolSpec(diameter=0.003)
    assert clamp_check(tool, (0.0004, 0.003)).accepted


def test_clamp_rejects_oversized_tool():
    decision = clamp_check(ToolSpec(diameter=0.005), (0.0004, 0.003))
    assert not decision
    assert "above" in decision.reason


@given(
    diameter=st.floats(1e-4, 5e-3),
    lo=st.floats(1e-5, 5e-3),
    hi_pad=st.floats(0.0, 5e-3),
    widen_lo=st.floats(0.0, 1e-4),
    widen_hi=st.floats(0.0, 5e-3),
)
@settings(max_examples=100, deadline=None)
def test_clamp_acceptance_monotone_under_widening(diameter, lo, hi_pad, widen_lo, widen_hi):
    hi = lo + hi_pad
    tool = ToolSpec(diameter=diameter)
    if clamp_check(tool, (lo, hi)).accepted:
        wider = (max(lo - widen_lo, 1e-9), hi + widen_hi)
        assert clamp_check(tool, wider).accepted


def test_free_space_advance():
    state = actuate(InsertionState(), u_v=0.001, u_w=0.0, external_force=0.0, dt=1.0, tool=NEEDLE)
    assert np.isclose(state.depth, 0.001)
    assert state.sensed_force == 0.0
    assert not state.stalled and not state.v_saturated


def test_force_limit_stalls_advance():
    state = actuate(InsertionState(depth=0.004), u_v=0.002, u_w=0.0,
                    external_force=-12.0, dt=1e-3, tool=NEEDLE)
    assert state.stalled
    assert state.v == 0.0
    assert np.isclose(state.depth, 0.004)
    assert state.drive_force == NEEDLE.max_insertion_force
    assert abs(state.drive_force) <= NEEDLE.max_insertion_force


def test_force_within_limit_advances_and_balances():
    state = actuate(InsertionState(), u_v=0.001, u_w=0.0, external_force=-4.0, dt=1e-3, tool=NEEDLE)
    assert not state.stalled
    assert state.drive_force == 4.0
    assert state.sensed_force == -4.0


def test_pure_rotation():
    state = actuate(InsertionState(), u_v=0.0, u_w=1.0, external_force=0.0, dt=2.0, tool=NEEDLE)
    assert np.isclose(state.theta, 2.0)
    assert state.depth == 0.0


def test_command_saturation_flags():
    state = actuate(InsertionState(), u_v=1.0, u_w=100.0, external_force=0.0, dt=1e-3, tool=NEEDLE)
    assert state.v_saturated and state.w_saturated
    assert state.v == NEEDLE.max_speed
    assert state.omega == NEEDLE.max_spin


def test_depth_clamped_at_entry_plane():
    state = actuate(InsertionState(depth=0.0005), u_v=-0.01, u_w=0.0,
                    external_force=0.0, dt=1.0, tool=NEEDLE)
    assert state.depth == 0.0


def test_helical_command_definition():
    u_v, u_w = helical_command(pitch=0.001, speed=0.001)
    assert u_v == 0.001
    assert np.isclose(u_w, 2 * np.pi)
    assert helical_command(pitch=0.002, speed=0.0) == (0.0, 0.0)
    with pytest.raises(DomainError):
        helical_command(pitch=0.0, speed=0.001)
    with pytest.raises(DomainError):
        helical_command(pitch=0.001, speed=-0.001)


def test_helical_integration_closed_form():
    # 10 s at 1 mm/s with 2 mm/rev pitch: depth 10 mm, theta 10*pi
    u_v, u_w = helical_command(pitch=0.002, speed=0.001)
    state = InsertionState()
    dt = 1e-3
    for _ in range(10000):
        state = actuate(state, u_v, u_w, external_force=0.0, dt=dt, tool=NEEDLE)
    assert abs(state.depth - 0.010) < 1e-9
    assert abs(state.theta - 10 * np.pi) < 1e-9
    # helical coupling invariant while unsaturated
    assert np.isclose(state.depth / state.theta, 0.002 / (2 * np.pi))


def test_no_slip_motor_consistency():
    drive = RollerDrive(roller_radius=0.006, gear_m1=2.0, gear_m2=1.5)
    state = InsertionState()
    for _ in range(500):
        state = actuate(state, 0.002, 0.5, external_force=-0.5, dt=1e-3, tool=NEEDLE, drive=drive)
    assert np.isclose(state.motor_m2.angle, state.depth / (0.006 * 1.5), atol=1e-15)
    assert np.isclose(state.motor_m1.angle, state.theta * 2.0, atol=1e-15)
    assert np.isclose(state.motor_m2.velocity, state.v / (0.006 * 1.5))


def test_exact_velocity_integration_drift():
    state = InsertionState()
    dt = 1e-3
    n = 5000
    for _ in range(n):
        state = actuate(state, 0.002, 0.0, external_force=0.0, dt=dt, tool=NEEDLE)
    assert abs(state.depth - n * 0.002 * dt) < n * 1e-12


def test_sensor_noise_is_additive():
    state = actuate(InsertionState(), 0.001, 0.0, external_force=-1.0, dt=1e-3,
                    tool=NEEDLE, force_noise=0.125)
    assert state.sensed_force == -1.0 + 0.125


def test_validation():
    with pytest.raises(ConfigurationError):
        actuate(InsertionState(), 0.0, 0.0, 0.0, dt=0.0, tool=NEEDLE)
    with pytest.raises(ConfigurationError):
        ToolSpec(diameter=0.001, min_clamp=0.003, max_clamp=0.001)
    with pytest.raises(ConfigurationError):
        RollerDrive(roller_radius=0.0)
