import numpy as np
import pytest

from insertarm import JointSpec, KinematicChain, LinkParams
from insertarm.rotations import exp_rotvec


def revolute(axis, translation, rotation=None, limits=(-10.0, 10.0), friction=0.0):
    return JointSpec(
        axis=np.asarray(axis, dtype=float),
        offset_translation=np.asarray(translation, dtype=float),
        offset_rotation=np.eye(3) if rotation is None else rotation,
        limits=limits,
        viscous_friction=friction,
    )


def link(mass, com, inertia_diag=(1e-3, 1e-3, 1e-3)):
    return LinkParams(mass=mass, com=np.asarray(com, dtype=float), inertia=np.diag(inertia_diag))


@pytest.fixture
def one_link():
    """Single revolute joint about z, 0.3 m link along x."""
    return KinematicChain(
        joints=[revolute([0, 0, 1], [0, 0, 0])],
        links=[link(1.0, [0.15, 0, 0])],
        ee_translation=np.array([0.3, 0.0, 0.0]),
    )


@pytest.fixture
def two_link_planar():
    """Planar 2-link chain (0.3 m, 0.2 m) with both joints about z."""
    return KinematicChain(
        joints=[revolute([0, 0, 1], [0, 0, 0]), revolute([0, 0, 1], [0.3, 0, 0])],
        links=[link(1.2, [0.15, 0, 0], (1e-3, 1e-3, 9e-3)),
               link(0.8, [0.1, 0, 0], (1e-3, 1e-3, 4e-3))],
        ee_translation=np.array([0.2, 0.0, 0.0]),
        gravity=np.array([0.0, -9.81, 0.0]),
    )


@pytest.fixture
def pendulum_y():
    """Single pendulum about y: mass 1 kg, COM at 0.5 m along x, q = 0 horizontal."""
    return KinematicChain(
        joints=[revolute([0, 1, 0], [0, 0, 0])],
        links=[link(1.0, [0.5, 0, 0], (1e-3, 1.0 / 12 * 0.5**2, 1e-3))],
        gravity=np.array([0.0, 0.0, -9.81]),
    )


@pytest.fixture
def planar_three_link():
    """Planar 3-link chain used for exactly-linearizable closed-loop tests."""
    return KinematicChain(
        joints=[revolute([0, 0, 1], [0, 0, 0]),
                revolute([0, 0, 1], [0.25, 0, 0]),
                revolute([0, 0, 1], [0.22, 0, 0])],
        links=[link(1.1, [0.12, 0, 0], (1e-3, 1e-3, 7e-3)),
               link(0.9, [0.11, 0, 0], (1e-3, 1e-3, 5e-3)),
               link(0.6, [0.09, 0, 0], (1e-3, 1e-3, 3e-3))],
        ee_translation=np.array([0.15, 0.0, 0.0]),
        gravity=np.array([0.0, -9.81, 0.0]),
    )


def random_chain(rng: np.random.Generator, dof: int) -> KinematicChain:
    """Random valid chain: random axes, offsets terms, SPD inertias."""
    joints = []
    links = []
    for _ in range(dof):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        rot = exp_rotvec(rng.uniform(-1.0, 1.0, size=3))
        joints.append(
            JointSpec(
                axis=axis,
                offset_translation=rng.uniform(-0.2, 0.2, size=3),
                offset_rotation=rot,
                limits=(-10.0, 10.0),
            )
        )
        a = rng.uniform(-0.05, 0.05, size=(3, 3))
        inertia = a @ a.T + np.eye(3) * rng.uniform(5e-4, 3e-3)
        links.append(
            LinkParams(mass=rng.uniform(0.4, 2.5), com=rng.uniform(-0.1, 0.1, size=3), inertia=inertia)
        )
    return KinematicChain(
        joints=joints,
        links=links,
        ee_translation=rng.uniform(-0.15, 0.15, size=3),
        ee_rotation=exp_rotvec(rng.uniform(-1.0, 1.0, size=3)),
        gravity=np.array([0.0, 0.0, -9.81]),
    )
