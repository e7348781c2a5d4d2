"""Chain configuration files.

A chain is described by a YAML document:

    name: my_arm
    gravity: [0.0, 0.0, -9.81]          # optional, m/s^2
    joints:
      - name: base_yaw
        axis: [0, 0, 1]                  # unit vector, joint frame
        offset:
          translation: [0, 0, 0.147]     # m, parent frame
          rotation: [0, 0, 0]            # rotation vector (axis*angle, rad)
        limits: [-2.9, 2.9]              # rad, optional
        viscous_friction: 0.0            # N*m*s/rad, optional
        link:
          mass: 1.39                     # kg
          com: [0, 0, 0.06]              # m, link frame
          inertia: [[...], [...], [...]] # kg*m^2 about the COM, link frame
    ee_offset:
      translation: [0, 0, 0.105]
      rotation: [0, 0, 0]

Packaged chains (e.g. ``youbot_approx``) can be referenced by bare name.
"""

from __future__ import annotations

import importlib.resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigurationError
from .kinematics import JointSpec, KinematicChain, LinkParams
from .rotations import exp_rotvec


def packaged_config(name: str) -> Path:
    """Path to a YAML file shipped inside the package's configs directory."""
    base = importlib.resources.files("insertarm") / "configs"
    path = base / (name if name.endswith(".yaml") else name + ".yaml")
    if not path.is_file():
        raise ConfigurationError(f"no packaged config named {name!r}")
    return Path(str(path))


def _vec(raw, length: int, what: str) -> np.ndarray:
    try:
        v = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{what}: expected a numeric list, got {raw!r}") from exc
    if v.shape != (length,):
        raise ConfigurationError(f"{what}: expected {length} entries, got {raw!r}")
    return v


def _offset(raw: dict | None, what: str) -> tuple[np.ndarray, np.ndarray]:
    raw = raw or {}
    translation = _vec(raw.get("translation", [0.0, 0.0, 0.0]), 3, f"{what}.translation")
    rotvec = _vec(raw.get("rotation", [0.0, 0.0, 0.0]), 3, f"{what}.rotation")
    return translation, exp_rotvec(rotvec)


def chain_from_dict(doc: dict) -> KinematicChain:
    """Build a validated KinematicChain from a parsed config document."""
    if not isinstance(doc, dict) or "joints" not in doc:
        raise ConfigurationError("chain config must be a mapping with a 'joints' list")
    joints = []
    links = []
    for idx, jraw in enumerate(doc["joints"]):
        what = f"joints[{idx}]"
        if "axis" not in jraw or "link" not in jraw:
            raise ConfigurationError(f"{what}: missing 'axis' or 'link'")
        translation, rotation = _offset(jraw.get("offset"), f"{what}.offset")
        limits = jraw.get("limits", [-np.pi, np.pi])
        joints.append(
            JointSpec(
                axis=_vec(jraw["axis"], 3, f"{what}.axis"),
                offset_translation=translation,
                offset_rotation=rotation,
                limits=(float(limits[0]), float(limits[1])),
                viscous_friction=float(jraw.get("viscous_friction", 0.0)),
                name=str(jraw.get("name", f"joint{idx + 1}")),
            )
        )
        lraw = jraw["link"]
        links.append(
            LinkParams(
                mass=float(lraw["mass"]),
                com=_vec(lraw.get("com", [0.0, 0.0, 0.0]), 3, f"{what}.link.com"),
                inertia=np.asarray(lraw["inertia"], dtype=float),
            )
        )
    ee_translation, ee_rotation = _offset(doc.get("ee_offset"), "ee_offset")
    gravity = _vec(doc.get("gravity", [0.0, 0.0, -9.81]), 3, "gravity")
    return KinematicChain(
        joints=joints,
        links=links,
        ee_translation=ee_translation,
        ee_rotation=ee_rotation,
        gravity=gravity,
        name=str(doc.get("name", "")),
    )


def load_chain(source: str | Path | dict) -> KinematicChain:
    """Load a chain from a dict, a YAML file path, or a packaged config name."""
    if isinstance(source, dict):
        return chain_from_dict(source)
    path = Path(source)
    if not path.exists():
        path = packaged_config(str(source))
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return chain_from_dict(doc)
