"""Rigid-body dynamics of the arm: inverse dynamics (recursive Newton-Euler),
inertia/bias/gravity terms, and the forward dynamics used by the plant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _native
from .errors import ConfigurationError, SimulationError
from .kinematics import JointState, KinematicChain, geometric_jacobian

_ZERO_G = np.zeros(3)


@dataclass
class DynamicsTerms:
    """Inertia matrix M (dof x dof), bias torques c (Coriolis + centrifugal), gravity torques g."""

    M: np.ndarray
    c: np.ndarray
    g: np.ndarray


def _check_vec(chain: KinematicChain, v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (chain.dof,):
        raise ConfigurationError(f"{name} must have {chain.dof} entries, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ConfigurationError(f"{name} must be finite")
    return v


def inverse_dynamics(
    chain: KinematicChain,
    state: JointState,
    ddq: np.ndarray,
    gravity: np.ndarray | None = None,
) -> np.ndarray:
    """Joint torques tau = M(q) ddq + c(q, dq) + g(q), via recursive Newton-Euler."""
    q = chain.check_q(state.q)
    dq = _check_vec(chain, state.dq, "dq")
    ddq = _check_vec(chain, ddq, "ddq")
    g = chain.gravity if gravity is None else np.asarray(gravity, dtype=float)
    return _native.rnea(
        chain._r_off, chain._p_off, chain._axes, q, dq, ddq,
        chain._mass, chain._com, chain._inertia, g,
    )


def dynamics_terms(
    chain: KinematicChain,
    state: JointState,
    gravity: np.ndarray | None = None,
) -> DynamicsTerms:
    """M, c and g at the given state, mutually consistent with inverse_dynamics."""
    q = chain.check_q(state.q)
    dq = _check_vec(chain, state.dq, "dq")
    g_vec = chain.gravity if gravity is None else np.asarray(gravity, dtype=float)
    zero = np.zeros(chain.dof)
    m = _native.mass_matrix(
        chain._r_off, chain._p_off, chain._axes, q, chain._mass, chain._com, chain._inertia
    )
    c = _native.rnea(
        chain._r_off, chain._p_off, chain._axes, q, dq, zero,
        chain._mass, chain._com, chain._inertia, _ZERO_G,
    )
    g = _native.rnea(
        chain._r_off, chain._p_off, chain._axes, q, zero, zero,
        chain._mass, chain._com, chain._inertia, g_vec,
    )
    return DynamicsTerms(M=m, c=c, g=g)


def forward_dynamics(
    chain: KinematicChain,
    state: JointState,
    tau: np.ndarray,
    external_wrench: np.ndarray | None = None,
    gravity: np.ndarray | None = None,
) -> np.ndarray:
    """Joint accelerations solving M ddq = tau + J^T F_ext - c - g - friction.

    The chain's configured per-joint viscous friction acts on the plant side
    here; it is zero by default.
    """
    q = chain.check_q(state.q)
    dq = _check_vec(chain, state.dq, "dq")
    tau = _check_vec(chain, tau, "tau")
    g_vec = chain.gravity if gravity is None else np.asarray(gravity, dtype=float)

    m = _native.mass_matrix(
        chain._r_off, chain._p_off, chain._axes, q, chain._mass, chain._com, chain._inertia
    )
    bias = _native.rnea(
        chain._r_off, chain._p_off, chain._axes, q, dq, np.zeros(chain.dof),
        chain._mass, chain._com, chain._inertia, g_vec,
    )
    rhs = tau - bias - chain.viscous_friction * dq
    if external_wrench is not None:
        wrench = np.asarray(external_wrench, dtype=float)
        if wrench.shape != (6,):
            raise ConfigurationError("external wrench must be a 6-vector")
        if np.any(wrench):
            rhs = rhs + geometric_jacobian(chain, q).T @ wrench
    ddq = np.linalg.solve(m, rhs)
    if not np.all(np.isfinite(ddq)):
        raise SimulationError("forward dynamics produced a non-finite acceleration", -1)
    return ddq


def kinetic_energy(chain: KinematicChain, state: JointState) -> float:
    """Total kinetic energy 0.5 dq^T M(q) dq."""
    m = _native.mass_matrix(
        chain._r_off, chain._p_off, chain._axes, chain.check_q(state.q),
        chain._mass, chain._com, chain._inertia,
    )
    dq = np.asarray(state.dq, dtype=float)
    return 0.5 * float(dq @ m @ dq)
