"""Deterministic fixed-step simulation loop.

Wires the arm plant (rigid-body forward dynamics), the tissue model and the
insertion module to the controllers, one mode per scenario:

* ``track``       computed-torque tracking of the scenario trajectory
* ``admittance``  virtual-impedance reference driven by the scheduled external
                  wrench ("manual placement"), with the computed-torque layer
                  tracking the reference underneath; with auto-hold enabled the
                  reference re-anchors and holds whenever the wrench is zero
* ``insert``      the arm holds its start pose while the insertion module
                  advances the tool against the tissue stack under the haptic
                  velocity law

Per tick the loop evaluates the controller on the current state, logs one
record, then integrates the plant (semi-implicit Euler by default, RK4 behind
a config switch). Identical scenario + seed gives byte-identical logs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .config import chain_from_dict, load_chain, packaged_config
from .control import (
    AdmittanceState,
    GainSet,
    VirtualImpedance,
    admittance_step,
    computed_torque_full,
    insertion_control,
)
from .dynamics import forward_dynamics
from .errors import ConfigurationError, SimulationError
from .insertion import InsertionState, RollerDrive, ToolSpec, actuate, clamp_check, helical_command
from .kinematics import JointState, KinematicChain, Pose, TaskState, task_state
from .tissue import TissueLayer, TissueSample, axial_force, standard_samples
from .trajectory import TrajectorySpec, insertion_profile, sample

# event flag bits in the log
EVENT_PUNCTURE = 1
EVENT_V_SATURATED = 2
EVENT_W_SATURATED = 4
EVENT_FORCE_STALL = 8

MODES = ("track", "admittance", "insert")


@dataclass
class WrenchWindow:
    """One scheduled external wrench, active on [t_start, t_end)."""

    t_start: float
    t_end: float
    wrench: np.ndarray

    def __post_init__(self):
        self.wrench = np.asarray(self.wrench, dtype=float)
        if self.wrench.shape != (6,):
            raise ConfigurationError("wrench must be a 6-vector")
        if self.t_end <= self.t_start:
            raise ConfigurationError("wrench window must have t_end > t_start")


@dataclass
class InsertionSetup:
    """Insertion-mode wiring: haptic ramp, optional helical spin, sensing."""

    speed: float = 0.001  # m/s haptic ramp rate
    depth: float = 0.010  # m commanded depth
    pitch: float | None = None  # m/rev helical pitch; None = no spin
    axis_in_ee: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    force_noise_std: float = 0.0
    drive: RollerDrive = field(default_factory=RollerDrive)

    def __post_init__(self):
        self.axis_in_ee = np.asarray(self.axis_in_ee, dtype=float)
        norm = np.linalg.norm(self.axis_in_ee)
        if norm == 0.0:
            raise ConfigurationError("insertion axis must be nonzero")
        self.axis_in_ee = self.axis_in_ee / norm
        if self.force_noise_std < 0.0:
            raise ConfigurationError("force noise std must be >= 0")


@dataclass
class Scenario:
    """Everything one deterministic run needs."""

    chain: KinematicChain
    mode: str
    q0: np.ndarray
    duration: float
    dt: float = 1e-3
    seed: int = 0
    name: str = "scenario"
    gains: GainSet = field(default_factory=GainSet)
    impedance: VirtualImpedance = field(default_factory=VirtualImpedance)
    trajectory: TrajectorySpec | None = None
    tissue: TissueSample | None = None
    tool: ToolSpec = field(default_factory=lambda: ToolSpec(diameter=0.0017))
    insertion: InsertionSetup = field(default_factory=InsertionSetup)
    wrench_schedule: list[WrenchWindow] = field(default_factory=list)
    admittance_auto_hold: bool = True
    integrator: str = "semi_implicit"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.dt <= 0.0:
            raise ConfigurationError("dt must be > 0")
        if self.duration < self.dt:
            raise ConfigurationError("duration must be >= dt")
        if self.integrator not in ("semi_implicit", "rk4"):
            raise ConfigurationError(f"unknown integrator {self.integrator!r}")
        self.q0 = np.asarray(self.q0, dtype=float)
        self.chain.joint_state(self.q0, np.zeros(self.chain.dof))  # validates limits
        self._check_schedule()
        if self.mode == "insert":
            if self.tissue is None:
                raise ConfigurationError("insert mode needs a tissue sample")
            decision = clamp_check(self.tool)
            if not decision:
                raise ConfigurationError(f"tool rejected by clamp: {decision.reason}")

    def _check_schedule(self):
        for axis in range(6):
            windows = sorted(
                (w for w in self.wrench_schedule if w.wrench[axis] != 0.0),
                key=lambda w: w.t_start,
            )
            for a, b in zip(windows, windows[1:]):
                if b.t_start < a.t_end:
                    raise ConfigurationError(
                        f"wrench windows overlap on axis {axis}: "
                        f"[{a.t_start}, {a.t_end}) and [{b.t_start}, {b.t_end})"
                    )


@dataclass
class LogRecord:
    t: float
    q: np.ndarray
    dq: np.ndarray
    pose: Pose
    x_d: Pose
    task_err: np.ndarray
    tau: np.ndarray
    depth: float
    theta: float
    v: float
    f_t: float
    x_h: float
    f_drive: float
    events: int


def step_plant(
    chain: KinematicChain,
    state: JointState,
    tau: np.ndarray,
    external_wrench: np.ndarray | None,
    dt: float,
    method: str = "semi_implicit",
) -> JointState:
    """One plant step under zero-order-hold torque and wrench.

    Semi-implicit Euler: dq += ddq dt, then q += dq dt. RK4 integrates the
    same vector field with the held inputs.
    """
    if method == "semi_implicit":
        ddq = forward_dynamics(chain, state, tau, external_wrench)
        dq = state.dq + ddq * dt
        q = state.q + dq * dt
        return JointState(q=q, dq=dq)
    if method != "rk4":
        raise ConfigurationError(f"unknown integrator {method!r}")

    def f(q, dq):
        return dq, forward_dynamics(chain, JointState(q=q, dq=dq), tau, external_wrench)

    q0, dq0 = state.q, state.dq
    k1q, k1v = f(q0, dq0)
    k2q, k2v = f(q0 + 0.5 * dt * k1q, dq0 + 0.5 * dt * k1v)
    k3q, k3v = f(q0 + 0.5 * dt * k2q, dq0 + 0.5 * dt * k2v)
    k4q, k4v = f(q0 + dt * k3q, dq0 + dt * k3v)
    q = q0 + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
    dq = dq0 + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return JointState(q=q, dq=dq)


class SimulationLoop:
    """Owns all mutable state of one scenario run; single-threaded."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.chain = scenario.chain
        self.q = scenario.q0.copy()
        self.dq = np.zeros(self.chain.dof)
        self.tick_index = 0
        self.rng = np.random.default_rng(scenario.seed)
        self.records: list[LogRecord] = []

        start = task_state(self.chain, JointState(q=self.q, dq=self.dq))
        self.hold_pose = start.pose.copy()
        self.mode = scenario.mode

        self.trajectory = scenario.trajectory
        if self.mode == "track":
            if self.trajectory is None:
                raise ConfigurationError("track mode needs a trajectory")
            if self.trajectory.start_pose is None:
                self.trajectory = replace(self.trajectory, start_pose=start.pose.copy())

        self.admittance = AdmittanceState.at(start.pose)
        self.tissue = scenario.tissue.copy() if scenario.tissue is not None else None
        self.insertion = InsertionState()
        self.haptic_profile = (
            insertion_profile(scenario.insertion.speed, scenario.insertion.depth)
            if self.mode == "insert"
            else None
        )
        self.haptic_override: float | None = None  # set by the teleop layer
        self.extra_wrench: np.ndarray | None = None  # teleop apply_wrench
        self.extra_wrench_until: float = 0.0

    @property
    def t(self) -> float:
        return self.tick_index * self.scenario.dt

    def wrench_at(self, t: float) -> np.ndarray:
        total = np.zeros(6)
        for window in self.scenario.wrench_schedule:
            if window.t_start <= t < window.t_end:
                total = total + window.wrench
        if self.extra_wrench is not None and t < self.extra_wrench_until:
            total = total + self.extra_wrench
        return total

    def haptic_target_at(self, t: float) -> float:
        if self.haptic_override is not None:
            return self.haptic_override
        if self.haptic_profile is not None:
            return self.haptic_profile(t)
        return 0.0

    def _controls(self) -> tuple[np.ndarray, LogRecord]:
        """Controller outputs for the current state plus the log record.

        Returns the net joint torque with any external wrench already folded
        in through the (shared) measured Jacobian transpose.
        """
        sc = self.scenario
        t = self.t
        state = JointState(q=self.q, dq=self.dq)
        schedule_wrench = self.wrench_at(t)
        events = 0
        depth = self.insertion.depth
        theta = self.insertion.theta
        v_tool = self.insertion.v
        f_t = self.insertion.sensed_force
        f_drive = self.insertion.drive_force
        x_h = 0.0
        tissue_force = 0.0

        if self.mode == "track":
            desired, ddx_d = sample(self.trajectory, t)
        elif self.mode == "admittance":
            adm_mode = (
                "placement"
                if (sc.admittance_auto_hold and np.any(schedule_wrench))
                else "holding"
            )
            self.admittance = admittance_step(
                self.admittance, schedule_wrench, sc.impedance, adm_mode, sc.dt
            )
            desired = TaskState(pose=self.admittance.x_ref, twist=self.admittance.v_ref)
            ddx_d = self.admittance.a_ref
        else:  # insert
            desired = TaskState(pose=self.hold_pose)
            ddx_d = np.zeros(6)
            x_h = self.haptic_target_at(t)
            u = insertion_control(x_h, depth, v_tool, f_t, sc.gains)
            if sc.insertion.pitch is not None:
                u_w = 2.0 * np.pi * u / sc.insertion.pitch
            else:
                u_w = 0.0
            tissue_force, punctures = axial_force(self.tissue, depth, v_tool)
            noise = (
                self.rng.normal(0.0, sc.insertion.force_noise_std)
                if sc.insertion.force_noise_std > 0.0
                else 0.0
            )
            self.insertion = actuate(
                self.insertion, u, u_w, tissue_force, sc.dt,
                tool=sc.tool, drive=sc.insertion.drive, force_noise=noise,
            )
            if punctures:
                events |= EVENT_PUNCTURE
            if self.insertion.v_saturated:
                events |= EVENT_V_SATURATED
            if self.insertion.w_saturated:
                events |= EVENT_W_SATURATED
            if self.insertion.stalled:
                events |= EVENT_FORCE_STALL
            depth = self.insertion.depth
            theta = self.insertion.theta
            v_tool = self.insertion.v
            f_t = self.insertion.sensed_force
            f_drive = self.insertion.drive_force

        tau, measured, jac, err = computed_torque_full(self.chain, state, desired, ddx_d, sc.gains)

        plant_wrench = schedule_wrench
        if self.mode == "insert" and tissue_force != 0.0:
            # tissue reaction acts on the arm along the world insertion axis
            axis_world = measured.pose.rotation @ sc.insertion.axis_in_ee
            plant_wrench = plant_wrench + np.concatenate([axis_world * tissue_force, np.zeros(3)])
        tau_net = tau + jac.T @ plant_wrench if np.any(plant_wrench) else tau

        record = LogRecord(
            t=t,
            q=self.q.copy(),
            dq=self.dq.copy(),
            pose=measured.pose,
            x_d=desired.pose.copy(),
            task_err=np.concatenate([err.p_err, err.phi_err]),
            tau=tau,
            depth=depth,
            theta=theta,
            v=v_tool,
            f_t=f_t,
            x_h=x_h,
            f_drive=f_drive,
            events=events,
        )
        return tau_net, record

    def tick(self):
        """Log the current tick and integrate the plant to the next one."""
        tau_net, record = self._controls()
        if not np.all(np.isfinite(tau_net)):
            raise SimulationError(
                "controller output became non-finite", last_valid_index=len(self.records) - 1
            )
        self.records.append(record)
        try:
            state = step_plant(
                self.chain,
                JointState(q=self.q, dq=self.dq),
                tau_net,
                None,
                self.scenario.dt,
                self.scenario.integrator,
            )
        except SimulationError as exc:
            raise SimulationError(str(exc), last_valid_index=len(self.records) - 1) from exc
        if not (np.all(np.isfinite(state.q)) and np.all(np.isfinite(state.dq))):
            raise SimulationError(
                "simulation state became non-finite", last_valid_index=len(self.records) - 1
            )
        self.q = state.q
        self.dq = state.dq
        self.tick_index += 1

    def finalize(self):
        """Append the terminal record (controls evaluated, not applied)."""
        _, record = self._controls()
        self.records.append(record)

    def run(self) -> list[LogRecord]:
        steps = int(round(self.scenario.duration / self.scenario.dt))
        for _ in range(steps):
            self.tick()
        self.finalize()
        return self.records


def run(scenario: Scenario) -> list[LogRecord]:
    """Run a scenario start to finish; deterministic for a given seed."""
    return SimulationLoop(scenario).run()


# ---------------------------------------------------------------------------
# CSV logs (fixed, documented column order -- part of the public contract)
# ---------------------------------------------------------------------------

def log_columns(dof: int) -> list[str]:
    cols = ["t"]
    cols += [f"q{i + 1}" for i in range(dof)]
    cols += [f"dq{i + 1}" for i in range(dof)]
    cols += ["px", "py", "pz", "ox", "oy", "oz"]
    cols += ["xd_px", "xd_py", "xd_pz", "xd_ox", "xd_oy", "xd_oz"]
    cols += ["err_px", "err_py", "err_pz", "err_ox", "err_oy", "err_oz"]
    cols += [f"tau{i + 1}" for i in range(dof)]
    cols += ["depth", "theta", "v", "F_t", "x_h", "f_drive", "event_flags"]
    return cols


def _record_row(record: LogRecord) -> list[str]:
    values = [record.t]
    values += list(record.q)
    values += list(record.dq)
    values += list(record.pose.position) + list(record.pose.rotvec())
    values += list(record.x_d.position) + list(record.x_d.rotvec())
    values += list(record.task_err)
    values += list(record.tau)
    values += [record.depth, record.theta, record.v, record.f_t, record.x_h, record.f_drive]
    return [repr(float(v)) for v in values] + [str(record.events)]


def write_log_csv(records: list[LogRecord], path: str | Path) -> Path:
    """Serialize records; float fields use shortest round-trip repr, so the
    file is byte-identical across runs of the same scenario + seed."""
    if not records:
        raise ConfigurationError("cannot write an empty log")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dof = records[0].q.shape[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(log_columns(dof))
        for record in records:
            writer.writerow(_record_row(record))
    return path


def read_log_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Log file back as named column arrays (floats; event_flags as int)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader]
    out: dict[str, np.ndarray] = {}
    data = np.array(rows, dtype=object)
    for j, name in enumerate(header):
        if name == "event_flags":
            out[name] = np.array([int(x) for x in data[:, j]])
        else:
            out[name] = np.array([float(x) for x in data[:, j]])
    return out


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------

def _broadcast6(raw, what: str) -> np.ndarray:
    if isinstance(raw, (int, float)):
        return np.full(6, float(raw))
    v = np.asarray(raw, dtype=float)
    if v.shape != (6,):
        raise ConfigurationError(f"{what} must be a scalar or 6-vector")
    return v


def _gains_from(doc: dict | None) -> GainSet:
    doc = doc or {}
    defaults = GainSet()
    return GainSet(
        kp_diag=_broadcast6(doc.get("kp", defaults.kp_diag), "gains.kp"),
        kd_diag=_broadcast6(doc.get("kd", defaults.kd_diag), "gains.kd"),
        insertion_kp=float(doc.get("insertion_kp", defaults.insertion_kp)),
        insertion_kd=float(doc.get("insertion_kd", defaults.insertion_kd)),
        insertion_ko=float(doc.get("insertion_ko", defaults.insertion_ko)),
        damping_lambda=float(doc.get("damping_lambda", defaults.damping_lambda)),
    )


def _impedance_from(doc: dict | None) -> VirtualImpedance:
    doc = doc or {}
    defaults = VirtualImpedance()
    return VirtualImpedance(
        mass=_broadcast6(doc.get("mass", defaults.mass), "impedance.mass"),
        damping=_broadcast6(doc.get("damping", defaults.damping), "impedance.damping"),
        stiffness=_broadcast6(doc.get("stiffness", defaults.stiffness), "impedance.stiffness"),
    )


def _pose_from(doc: dict | None) -> Pose | None:
    if doc is None:
        return None
    from .rotations import exp_rotvec

    return Pose(
        position=np.asarray(doc.get("position", [0, 0, 0]), dtype=float),
        rotation=exp_rotvec(np.asarray(doc.get("rotation", [0, 0, 0]), dtype=float)),
    )


def _trajectory_from(doc: dict | None) -> TrajectorySpec | None:
    if doc is None:
        return None
    kind = doc.get("kind", "sine")
    return TrajectorySpec(
        kind=kind,
        start_pose=_pose_from(doc.get("start_pose")),
        axis=int(doc.get("axis", 0)),
        amplitude=float(doc.get("amplitude", 0.05)),
        period=float(doc.get("period", 8.0)),
        goal_pose=_pose_from(doc.get("goal_pose")),
        duration=float(doc.get("duration", 4.0)),
    )


def _tissue_from(raw) -> TissueSample | None:
    if raw is None:
        return None
    if isinstance(raw, str):
        samples = standard_samples()
        if raw not in samples:
            raise ConfigurationError(
                f"unknown tissue sample {raw!r}; packaged samples: {sorted(samples)}"
            )
        return samples[raw]
    layers = tuple(
        TissueLayer(
            name=str(l.get("name", f"layer{i}")),
            thickness=float(l["thickness"]),
            stiffness_k=float(l.get("stiffness_k", 0.0)),
            stiffness_a=float(l.get("stiffness_a", 0.0)),
            puncture_force=float(l["puncture_force"]),
            friction_mu=float(l.get("friction_mu", 0.0)),
            cutting_f=float(l.get("cutting_f", 0.0)),
        )
        for i, l in enumerate(raw["layers"])
    )
    return TissueSample(layers=layers, name=str(raw.get("name", "custom")))


def _tool_from(doc: dict | None) -> ToolSpec:
    doc = doc or {}
    defaults = ToolSpec(diameter=0.0017)
    return ToolSpec(
        diameter=float(doc.get("diameter", defaults.diameter)),
        min_clamp=float(doc.get("min_clamp", defaults.min_clamp)),
        max_clamp=float(doc.get("max_clamp", defaults.max_clamp)),
        max_insertion_force=float(doc.get("max_insertion_force", defaults.max_insertion_force)),
        max_speed=float(doc.get("max_speed", defaults.max_speed)),
        max_spin=float(doc.get("max_spin", defaults.max_spin)),
    )


def _insertion_from(doc: dict | None) -> InsertionSetup:
    doc = doc or {}
    defaults = InsertionSetup()
    pitch = doc.get("pitch", None)
    return InsertionSetup(
        speed=float(doc.get("speed", defaults.speed)),
        depth=float(doc.get("depth", defaults.depth)),
        pitch=None if pitch is None else float(pitch),
        axis_in_ee=np.asarray(doc.get("axis_in_ee", [0, 0, 1]), dtype=float),
        force_noise_std=float(doc.get("force_noise_std", 0.0)),
        drive=RollerDrive(
            roller_radius=float(doc.get("roller_radius", 0.006)),
            gear_m1=float(doc.get("gear_m1", 2.0)),
            gear_m2=float(doc.get("gear_m2", 1.0)),
        ),
    )


def scenario_from_dict(doc: dict) -> Scenario:
    for key in ("mode", "q0", "duration"):
        if key not in doc:
            raise ConfigurationError(f"scenario config missing required key {key!r}")
    chain_raw = doc.get("chain", "youbot_approx")
    chain = chain_from_dict(chain_raw) if isinstance(chain_raw, dict) else load_chain(chain_raw)
    schedule = [
        WrenchWindow(
            t_start=float(w["t_start"]), t_end=float(w["t_end"]), wrench=w["wrench"]
        )
        for w in doc.get("external_wrenches", [])
    ]
    return Scenario(
        chain=chain,
        mode=str(doc["mode"]),
        q0=np.asarray(doc["q0"], dtype=float),
        duration=float(doc["duration"]),
        dt=float(doc.get("dt", 1e-3)),
        seed=int(doc.get("seed", 0)),
        name=str(doc.get("name", "scenario")),
        gains=_gains_from(doc.get("gains")),
        impedance=_impedance_from(doc.get("impedance")),
        trajectory=_trajectory_from(doc.get("trajectory")),
        tissue=_tissue_from(doc.get("tissue")),
        tool=_tool_from(doc.get("tool")),
        insertion=_insertion_from(doc.get("insertion")),
        wrench_schedule=schedule,
        admittance_auto_hold=bool(doc.get("admittance_auto_hold", True)),
        integrator=str(doc.get("integrator", "semi_implicit")),
    )


def load_scenario(source: str | Path | dict) -> Scenario:
    """Load a scenario from a dict, a YAML file path, or a packaged name."""
    if isinstance(source, dict):
        return scenario_from_dict(source)
    path = Path(source)
    if not path.exists():
        path = packaged_config(str(source))
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return scenario_from_dict(doc)
