"""Scripted headless teleop client.

Connects over WebSocket, takes the driver token, and drives insertion by
streaming haptic_target commands: one per received state broadcast, following
the commanded ramp in simulated time with a bounded per-command increment, so
transient stalls of either side never produce a large target jump.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import ProtocolError
from .teleop_protocol import (
    Command,
    HapticTarget,
    RequestDriver,
    SaveLog,
    decode,
    encode_command,
)


class TeleopClient:
    """Thin blocking wrapper around one protocol session."""

    def __init__(self, url: str, open_timeout: float = 10.0):
        from websockets.sync.client import connect

        self.conn = connect(url, open_timeout=open_timeout)
        self.token: str | None = None
        self.welcome = self.wait_for("welcome")

    def close(self):
        self.conn.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def send(self, cmd: Command):
        self.conn.send(encode_command(cmd, token=self.token))

    def send_raw(self, text: str):
        self.conn.send(text)

    def recv(self, timeout: float = 10.0) -> dict:
        return decode(self.conn.recv(timeout=timeout))

    def wait_for(self, kind: str, timeout: float = 30.0) -> dict:
        """Next message of the given type; protocol errors surface immediately."""
        while True:
            message = self.recv(timeout=timeout)
            if message["type"] == kind:
                return message
            if message["type"] == "error" and kind != "error":
                raise ProtocolError(f"server error: {json.dumps(message)}")

    def request_driver(self) -> str:
        self.send(RequestDriver())
        grant = self.wait_for("driver_grant")
        self.token = grant["token"]
        return self.token

    def drive_insertion_ramp(
        self,
        speed: float,
        depth: float,
        max_step: float = 1e-4,
        settle_v: float = 1e-7,
        timeout: float = 300.0,
    ) -> dict:
        """Stream haptic_target commands following a ramp of the given speed.

        Sends one command per state broadcast: the ramp target for the
        state's simulated time (measured from the first broadcast seen),
        clamped to advance at most ``max_step`` past the last commanded
        value, so stalls on either side never produce a big target jump.
        Returns the state in which the tool has stopped at the final target.
        """
        sent = 0.0
        t0 = None
        self.send(HapticTarget(x_h=0.0))
        while True:
            state = self.wait_for("state", timeout=timeout)
            if t0 is None:
                t0 = state["t"]
            if sent < depth:
                target = min(speed * (state["t"] - t0), sent + max_step, depth)
                if target > sent:
                    self.send(HapticTarget(x_h=target))
                    sent = target
            elif state["x_h"] == depth and abs(state["tool_v"]) < settle_v:
                return state

    def save_log(self) -> Path:
        self.send(SaveLog())
        saved = self.wait_for("log_saved")
        return Path(saved["path"])
