"""Teleoperation service: one live simulation session over WebSocket.

A single owner task steps the simulation loop; client sessions talk to it
exclusively through queues. Commands are parsed and driver-checked on
receipt, then applied atomically at the next loop tick. State snapshots are
broadcast every 50 Hz of simulated time through bounded per-client queues
that drop the oldest message under backpressure (the next delivered message
carries a ``gap`` flag), so a slow client never stalls the loop. Pacing is
wall-clock scaled by ``timescale``; 0 disables pacing entirely.

Multiple viewers may connect; mutating commands require the driver token
granted to exactly one client at a time (released on disconnect).
"""

from __future__ import annotations

import asyncio
import secrets
import threading
import time
from collections import deque
from dataclasses import replace
from pathlib import Path

import numpy as np

from .control import GainSet
from .errors import ProtocolError
from .kinematics import JointState, task_state
from .simulate import Scenario, SimulationLoop, write_log_csv
from .teleop_protocol import (
    ApplyWrench,
    Command,
    HapticTarget,
    Jog,
    Pause,
    ReleaseDriver,
    RequestDriver,
    Reset,
    Resume,
    SaveLog,
    SetGains,
    SetMode,
    decode,
    encode,
    parse_command,
)
from .trajectory import TrajectorySpec

JOG_LIMIT_LINEAR = 0.010  # m per command
JOG_LIMIT_ANGULAR = 0.1  # rad per command

_MUTATING = (SetMode, Jog, ApplyWrench, HapticTarget, SetGains, Pause, Resume, Reset)

# which mutating commands each mode accepts
_MODE_COMMANDS = {
    "track": (SetMode, Jog, SetGains, Pause, Resume, Reset),
    "admittance": (SetMode, Jog, ApplyWrench, SetGains, Pause, Resume, Reset),
    "insert": (SetMode, HapticTarget, SetGains, Pause, Resume, Reset),
}


class _Client:
    def __init__(self, conn, queue_limit: int):
        self.conn = conn
        self.queue: deque[dict] = deque(maxlen=queue_limit)
        self.wakeup = asyncio.Event()
        self.gap_pending = False

    def enqueue(self, message: dict):
        if len(self.queue) == self.queue.maxlen:
            self.gap_pending = True  # oldest message is about to be dropped
        self.queue.append(message)
        self.wakeup.set()


class TeleopServer:
    def __init__(
        self,
        scenario: Scenario,
        host: str = "127.0.0.1",
        port: int = 0,
        timescale: float = 1.0,
        state_period: float = 0.02,
        heartbeat_period: float = 1.0,
        queue_limit: int = 64,
        log_dir: str | Path | None = None,
    ):
        if timescale < 0.0:
            raise ValueError("timescale must be >= 0 (0 = unpaced)")
        self.scenario = scenario
        self.host = host
        self.port = port
        self.timescale = timescale
        self.state_period = state_period
        self.heartbeat_period = heartbeat_period
        self.queue_limit = queue_limit
        self.log_dir = Path(log_dir) if log_dir is not None else None

        self.sim = SimulationLoop(scenario)
        if self.sim.mode == "insert":
            # interactive sessions hold at zero until the driver commands x_h
            self.sim.haptic_override = 0.0
        self.paused = False
        self.clients: set[_Client] = set()
        self.pending: deque[tuple[_Client, Command]] = deque()
        self.driver: _Client | None = None
        self.driver_token: str | None = None
        self.last_command: str | None = None
        self._seq = 0
        self._saves = 0
        self._stop: asyncio.Event | None = None
        self._thread: threading.Thread | None = None
        self._aio_loop: asyncio.AbstractEventLoop | None = None
        self._started = threading.Event()
        self._startup_error: BaseException | None = None

    # -- lifecycle ---------------------------------------------------------

    def serve_forever(self):
        asyncio.run(self._main())

    def start(self, timeout: float = 10.0):
        """Run the server on a background thread; returns once the port is bound."""
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        if not self._started.wait(timeout):
            raise RuntimeError("teleop server did not start in time")
        if self._startup_error is not None:
            raise self._startup_error

    def stop(self):
        if self._aio_loop is not None and self._stop is not None:
            self._aio_loop.call_soon_threadsafe(self._stop.set)
        if self._thread is not None:
            self._thread.join(timeout=10.0)

    async def _main(self):
        from websockets.asyncio.server import serve as ws_serve

        self._stop = asyncio.Event()
        self._aio_loop = asyncio.get_running_loop()
        try:
            async with ws_serve(self._handler, self.host, self.port) as server:
                self.port = server.sockets[0].getsockname()[1]
                sim_task = asyncio.create_task(self._sim_task())
                beat_task = asyncio.create_task(self._heartbeat_task())
                self._started.set()
                try:
                    await self._stop.wait()
                finally:
                    sim_task.cancel()
                    beat_task.cancel()
        except BaseException as exc:  # surface bind errors to start()
            self._startup_error = exc
            self._started.set()
            raise

    # -- messaging ---------------------------------------------------------

    def _broadcast(self, message: dict):
        for client in list(self.clients):
            client.enqueue(message)

    def _state_message(self) -> dict | None:
        if not self.sim.records:
            return None
        rec = self.sim.records[-1]
        self._seq += 1
        return {
            "type": "state",
            "seq": self._seq,
            "t": rec.t,
            "mode": self.sim.mode,
            "paused": self.paused,
            "pose": {
                "position": [float(x) for x in rec.pose.position],
                "rotation": [float(x) for x in rec.pose.rotvec()],
            },
            "task_err": [float(x) for x in rec.task_err],
            "depth": rec.depth,
            "theta": rec.theta,
            "tool_v": rec.v,
            "F_t": rec.f_t,
            "x_h": rec.x_h,
            "punctured": list(self.sim.tissue.punctured) if self.sim.tissue is not None else [],
            "saturation": {
                "v": bool(rec.events & 2),
                "w": bool(rec.events & 4),
                "stalled": bool(rec.events & 8),
            },
            "last_command": self.last_command,
        }

    async def _sim_task(self):
        dt = self.scenario.dt
        chunk = max(1, int(round(self.state_period / dt)))
        deadline = time.perf_counter()
        while True:
            if not self.paused:
                for _ in range(chunk):
                    while self.pending:
                        client, cmd = self.pending.popleft()
                        reply = self._apply(client, cmd)
                        if reply is not None:
                            client.enqueue(reply)
                    self.sim.tick()
            else:
                while self.pending:
                    client, cmd = self.pending.popleft()
                    reply = self._apply(client, cmd)
                    if reply is not None:
                        client.enqueue(reply)
            message = self._state_message()
            if message is not None:
                self._broadcast(message)
            if self.timescale > 0.0:
                deadline += (chunk * dt) / self.timescale
                delay = deadline - time.perf_counter()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    deadline = time.perf_counter()  # fell behind; no spiral
                    await asyncio.sleep(0)
            else:
                await asyncio.sleep(0)

    async def _heartbeat_task(self):
        while True:
            await asyncio.sleep(self.heartbeat_period)
            t = self.sim.records[-1].t if self.sim.records else 0.0
            self._broadcast({"type": "heartbeat", "t": t, "wall": time.time()})

    async def _sender(self, client: _Client):
        while True:
            await client.wakeup.wait()
            client.wakeup.clear()
            while client.queue:
                message = client.queue.popleft()
                if client.gap_pending:
                    message = {**message, "gap": True}
                    client.gap_pending = False
                await client.conn.send(encode(message))

    async def _handler(self, conn):
        client = _Client(conn, self.queue_limit)
        self.clients.add(client)
        sender = asyncio.create_task(self._sender(client))
        client.enqueue(
            {
                "type": "welcome",
                "protocol": "v1",
                "scenario": self.scenario.name,
                "mode": self.sim.mode,
                "dt": self.scenario.dt,
                "max_depth": self.scenario.insertion.depth,
                "state_period": self.state_period,
            }
        )
        try:
            async for raw in conn:
                try:
                    obj = decode(raw)
                    cmd = parse_command(obj)
                except ProtocolError as exc:
                    kind = None
                    try:
                        import json

                        parsed = json.loads(raw)
                        if isinstance(parsed, dict) and isinstance(parsed.get("type"), str):
                            kind = parsed["type"]
                    except Exception:
                        pass
                    client.enqueue(
                        {"type": "error", "code": "protocol", "message": str(exc),
                         **({"in_reply_to": kind} if kind else {})}
                    )
                    continue
                if isinstance(cmd, _MUTATING) and not self._is_driver(client, obj.get("token")):
                    client.enqueue(
                        {"type": "error", "code": "not_driver",
                         "message": "command requires the driver token", "in_reply_to": cmd.type}
                    )
                    continue
                self.pending.append((client, cmd))
        finally:
            sender.cancel()
            self.clients.discard(client)
            if self.driver is client:
                self.driver = None
                self.driver_token = None

    def _is_driver(self, client: _Client, token) -> bool:
        return self.driver is client and self.driver_token is not None and token == self.driver_token

    # -- command application (runs inside the sim task, at tick boundaries) --

    def _apply(self, client: _Client, cmd: Command) -> dict | None:
        if isinstance(cmd, RequestDriver):
            if self.driver is None or self.driver is client:
                self.driver = client
                self.driver_token = secrets.token_hex(8)
                return {"type": "driver_grant", "token": self.driver_token}
            return {"type": "error", "code": "driver_taken",
                    "message": "another client holds the driver token", "in_reply_to": cmd.type}
        if isinstance(cmd, ReleaseDriver):
            if self.driver is client:
                self.driver = None
                self.driver_token = None
            return {"type": "ack", "applied": cmd.type, "t": self.sim.t}
        if isinstance(cmd, SaveLog):
            if self.log_dir is None:
                return {"type": "error", "code": "no_log_dir",
                        "message": "server started without a log directory", "in_reply_to": cmd.type}
            if not self.sim.records:
                return {"type": "error", "code": "empty_log",
                        "message": "no records yet", "in_reply_to": cmd.type}
            self._saves += 1
            path = self.log_dir / f"{self.scenario.name}_teleop_{self._saves}.csv"
            write_log_csv(self.sim.records, path)
            return {"type": "log_saved", "path": str(path), "records": len(self.sim.records)}

        if not isinstance(cmd, _MODE_COMMANDS[self.sim.mode]):
            return {"type": "error", "code": "wrong_mode",
                    "message": f"{cmd.type} is not allowed in {self.sim.mode} mode",
                    "in_reply_to": cmd.type}

        if isinstance(cmd, Pause):
            self.paused = True
        elif isinstance(cmd, Resume):
            self.paused = False
        elif isinstance(cmd, Reset):
            self.sim = SimulationLoop(self.scenario)
            if self.sim.mode == "insert":
                self.sim.haptic_override = 0.0
            self.paused = False
        elif isinstance(cmd, HapticTarget):
            self.sim.haptic_override = float(np.clip(cmd.x_h, 0.0, self.scenario.insertion.depth))
        elif isinstance(cmd, ApplyWrench):
            wrench = np.asarray(cmd.wrench, dtype=float)
            if np.any(wrench) and cmd.duration > 0.0:
                self.sim.extra_wrench = wrench
                self.sim.extra_wrench_until = self.sim.t + cmd.duration
            else:
                self.sim.extra_wrench = None
                self.sim.extra_wrench_until = 0.0
        elif isinstance(cmd, Jog):
            limit = JOG_LIMIT_LINEAR if cmd.axis < 3 else JOG_LIMIT_ANGULAR
            if abs(cmd.delta) > limit:
                return {"type": "error", "code": "jog_limit",
                        "message": f"jog delta {cmd.delta:g} exceeds limit {limit:g}",
                        "in_reply_to": cmd.type}
            self._jog(cmd.axis, cmd.delta)
        elif isinstance(cmd, SetGains):
            try:
                self.sim.scenario.gains = self._merged_gains(dict(cmd.values))
            except Exception as exc:
                return {"type": "error", "code": "bad_gains", "message": str(exc),
                        "in_reply_to": cmd.type}
        elif isinstance(cmd, SetMode):
            error = self._switch_mode(cmd.mode)
            if error is not None:
                return {"type": "error", "code": "bad_mode", "message": error,
                        "in_reply_to": cmd.type}
        self.last_command = cmd.type
        return {"type": "ack", "applied": cmd.type, "t": self.sim.t}

    def _merged_gains(self, values: dict) -> GainSet:
        g = self.sim.scenario.gains
        return GainSet(
            kp_diag=np.asarray(values.get("kp", g.kp_diag), dtype=float),
            kd_diag=np.asarray(values.get("kd", g.kd_diag), dtype=float),
            insertion_kp=float(values.get("insertion_kp", g.insertion_kp)),
            insertion_kd=float(values.get("insertion_kd", g.insertion_kd)),
            insertion_ko=float(values.get("insertion_ko", g.insertion_ko)),
            damping_lambda=float(values.get("damping_lambda", g.damping_lambda)),
        )

    def _current_pose(self):
        return task_state(
            self.sim.chain, JointState(q=self.sim.q, dq=self.sim.dq)
        ).pose

    def _jog(self, axis: int, delta: float):
        step = np.zeros(3)
        step[axis % 3] = delta
        sim = self.sim
        if sim.mode == "admittance":
            target = sim.admittance.anchor
            moved = target.translated(step) if axis < 3 else target.rotated_by(step)
            sim.admittance.anchor = moved
        elif sim.mode == "track" and sim.trajectory is not None:
            start = sim.trajectory.start_pose
            moved = start.translated(step) if axis < 3 else start.rotated_by(step)
            sim.trajectory = replace(sim.trajectory, start_pose=moved)
        else:
            moved = sim.hold_pose.translated(step) if axis < 3 else sim.hold_pose.rotated_by(step)
            sim.hold_pose = moved

    def _switch_mode(self, mode: str) -> str | None:
        sim = self.sim
        if mode == sim.mode:
            return None
        pose = self._current_pose()
        if mode == "insert":
            if sim.tissue is None:
                return "scenario has no tissue sample; insert mode unavailable"
            sim.hold_pose = pose
            if sim.haptic_profile is None:
                from .trajectory import insertion_profile

                sim.haptic_profile = insertion_profile(
                    self.scenario.insertion.speed, self.scenario.insertion.depth
                )
            sim.haptic_override = sim.insertion.depth  # hold until the driver commands
        elif mode == "admittance":
            from .control import AdmittanceState

            sim.admittance = AdmittanceState.at(pose)
        elif mode == "track":
            if sim.trajectory is not None:
                sim.trajectory = replace(sim.trajectory, start_pose=pose)
            else:
                sim.trajectory = TrajectorySpec(
                    kind="point_to_point", start_pose=pose, goal_pose=pose.copy(), duration=1.0
                )
        sim.mode = mode
        return None


def serve(host: str, port: int, scenario: Scenario, timescale: float = 1.0,
          log_dir: str | Path | None = None):
    """Blocking entry point used by the ``serve`` CLI."""
    server = TeleopServer(scenario, host=host, port=port, timescale=timescale, log_dir=log_dir)
    print(f"teleop service listening on ws://{host}:{port} "
          f"(scenario {scenario.name!r}, timescale {timescale:g})")
    server.serve_forever()
