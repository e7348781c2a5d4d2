"""Teleoperation wire protocol, version v1.

Messages are single-line JSON objects with a required version tag ``v`` =
``"v1"`` and a ``type`` tag. Unknown fields are ignored; unknown types get a
structured error reply naming the type. Command messages carry the driver
token (``token``) once one has been granted.

Command types: set_mode, jog, apply_wrench, haptic_target, set_gains, pause,
resume, reset, request_driver, release_driver, save_log.
Server types: welcome, state, heartbeat, error, ack, driver_grant, log_saved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ProtocolError

PROTOCOL_VERSION = "v1"

MODE_NAMES = ("track", "admittance", "insert")


@dataclass(frozen=True)
class SetMode:
    mode: str
    type: str = field(default="set_mode", init=False)


@dataclass(frozen=True)
class Jog:
    axis: int
    delta: float
    type: str = field(default="jog", init=False)


@dataclass(frozen=True)
class ApplyWrench:
    wrench: tuple[float, ...]
    duration: float
    type: str = field(default="apply_wrench", init=False)


@dataclass(frozen=True)
class HapticTarget:
    x_h: float
    type: str = field(default="haptic_target", init=False)


@dataclass(frozen=True)
class SetGains:
    # partial gain update: any subset of kp, kd (6-vectors), insertion_kp,
    # insertion_kd, insertion_ko, damping_lambda
    values: tuple[tuple[str, object], ...]
    type: str = field(default="set_gains", init=False)


@dataclass(frozen=True)
class Pause:
    type: str = field(default="pause", init=False)


@dataclass(frozen=True)
class Resume:
    type: str = field(default="resume", init=False)


@dataclass(frozen=True)
class Reset:
    type: str = field(default="reset", init=False)


@dataclass(frozen=True)
class RequestDriver:
    type: str = field(default="request_driver", init=False)


@dataclass(frozen=True)
class ReleaseDriver:
    type: str = field(default="release_driver", init=False)


@dataclass(frozen=True)
class SaveLog:
    type: str = field(default="save_log", init=False)


Command = (
    SetMode | Jog | ApplyWrench | HapticTarget | SetGains
    | Pause | Resume | Reset | RequestDriver | ReleaseDriver | SaveLog
)

_SIMPLE_COMMANDS = {
    "pause": Pause,
    "resume": Resume,
    "reset": Reset,
    "request_driver": RequestDriver,
    "release_driver": ReleaseDriver,
    "save_log": SaveLog,
}


def encode(obj: dict) -> str:
    """Serialize a message dict to one line, stamping the version tag."""
    out = dict(obj)
    out.setdefault("v", PROTOCOL_VERSION)
    return json.dumps(out, separators=(",", ":"), sort_keys=True)


def decode(line: str | bytes) -> dict:
    """Parse one protocol line; enforces the object shape and version tag."""
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProtocolError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("message must be a JSON object")
    if "type" not in obj or not isinstance(obj["type"], str):
        raise ProtocolError("message missing its 'type' tag")
    if obj.get("v") != PROTOCOL_VERSION:
        raise ProtocolError(f"message missing or mismatching version tag (need {PROTOCOL_VERSION!r})")
    return obj


def encode_command(cmd: Command, token: str | None = None) -> str:
    obj: dict = {"type": cmd.type}
    if isinstance(cmd, SetMode):
        obj["mode"] = cmd.mode
    elif isinstance(cmd, Jog):
        obj["axis"] = cmd.axis
        obj["delta"] = cmd.delta
    elif isinstance(cmd, ApplyWrench):
        obj["wrench"] = list(cmd.wrench)
        obj["duration"] = cmd.duration
    elif isinstance(cmd, HapticTarget):
        obj["x_h"] = cmd.x_h
    elif isinstance(cmd, SetGains):
        obj["values"] = {k: v for k, v in cmd.values}
    if token is not None:
        obj["token"] = token
    return encode(obj)


def _number(obj: dict, key: str) -> float:
    value = obj.get(key)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ProtocolError(f"field {key!r} must be a number")
    return float(value)


def parse_command(obj: dict) -> Command:
    """Typed command from a decoded message dict; raises ProtocolError."""
    kind = obj["type"]
    if kind in _SIMPLE_COMMANDS:
        return _SIMPLE_COMMANDS[kind]()
    if kind == "set_mode":
        mode = obj.get("mode")
        if mode not in MODE_NAMES:
            raise ProtocolError(f"set_mode needs mode in {MODE_NAMES}")
        return SetMode(mode=mode)
    if kind == "jog":
        axis = obj.get("axis")
        if not isinstance(axis, int) or isinstance(axis, bool) or not 0 <= axis <= 5:
            raise ProtocolError("jog needs an integer axis in 0..5")
        return Jog(axis=axis, delta=_number(obj, "delta"))
    if kind == "apply_wrench":
        wrench = obj.get("wrench")
        if (
            not isinstance(wrench, list)
            or len(wrench) != 6
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in wrench)
        ):
            raise ProtocolError("apply_wrench needs a 6-number wrench")
        duration = _number(obj, "duration")
        if duration < 0.0:
            raise ProtocolError("apply_wrench duration must be >= 0")
        return ApplyWrench(wrench=tuple(float(x) for x in wrench), duration=duration)
    if kind == "haptic_target":
        return HapticTarget(x_h=_number(obj, "x_h"))
    if kind == "set_gains":
        values = obj.get("values")
        if not isinstance(values, dict) or not values:
            raise ProtocolError("set_gains needs a non-empty 'values' object")
        allowed = {"kp", "kd", "insertion_kp", "insertion_kd", "insertion_ko", "damping_lambda"}
        bad = set(values) - allowed
        if bad:
            raise ProtocolError(f"set_gains: unknown gain fields {sorted(bad)}")
        norm = []
        for key in sorted(values):
            v = values[key]
            if isinstance(v, list):
                norm.append((key, tuple(float(x) for x in v)))
            elif isinstance(v, (int, float)) and not isinstance(v, bool):
                norm.append((key, float(v)))
            else:
                raise ProtocolError(f"set_gains: field {key!r} must be a number or list")
        return SetGains(values=tuple(norm))
    raise ProtocolError(f"unknown command type {kind!r}")


def error_message(code: str, message: str, in_reply_to: str | None = None) -> str:
    obj = {"type": "error", "code": code, "message": message}
    if in_reply_to is not None:
        obj["in_reply_to"] = in_reply_to
    return encode(obj)
