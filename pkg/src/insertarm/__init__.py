"""Deterministic simulator and control library for a 5-DOF arm carrying a
roller-driven tool-insertion end-effector: task-space computed-torque
tracking, admittance placement/holding, haptic-guided insertion against a
layered tissue model, plus an experiment harness and a teleoperation service.
"""

from .errors import (
    ConfigurationError,
    DomainError,
    ProtocolError,
    SimulationError,
    SingularityError,
)
from .kinematics import (
    JointSpec,
    JointState,
    KinematicChain,
    LinkParams,
    Pose,
    TaskState,
    forward_kinematics,
    geometric_jacobian,
    jacobian_time_derivative,
    link_com_positions,
    task_state,
)
from .dynamics import DynamicsTerms, dynamics_terms, forward_dynamics, inverse_dynamics
from .control import (
    AdmittanceState,
    GainSet,
    TaskError,
    VirtualImpedance,
    admittance_step,
    compensation_torque,
    computed_torque,
    insertion_control,
    pseudo_inverse,
    task_error,
)
from .trajectory import TrajectorySpec, insertion_profile, sample
from .tissue import NeedleSpec, TissueLayer, TissueSample, axial_force, standard_samples
from .insertion import (
    ClampDecision,
    InsertionState,
    RollerDrive,
    ToolSpec,
    actuate,
    clamp_check,
    helical_command,
)
from .simulate import LogRecord, Scenario, SimulationLoop, load_scenario, run, step_plant
from .config import load_chain

__version__ = "0.1.0"
