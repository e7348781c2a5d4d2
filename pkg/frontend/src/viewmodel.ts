/**
 * Console view model: owns everything the UI renders and is the single place
 * that emits commands.
 *
 * Command gating mirrors the service contract, so the console never sends a
 * command outside the active mode's allowed set; suppressed commands leave a
 * visible notice instead. The driver token is requested automatically on the
 * first command attempt. The haptic slider is throttled to at most 50
 * commands per second. Displayed force is exactly the most recent state
 * broadcast unless the (labeled) smoothing toggle is on.
 */

import {
  ConsoleCommand,
  decodeServerMessage,
  encodeCommand,
  MODE_COMMANDS,
  Mode,
  ProtocolError,
  ServerMessage,
  StateMessage,
  WelcomeMessage,
} from "./protocol.js";
import { TimeSeriesBuffer } from "./ring_buffer.js";
import { ConnectionState } from "./socket.js";

export interface CommandLogEntry {
  at: number; // local ms timestamp
  type: string;
  detail: string;
  status: "sent" | "suppressed" | "error";
}

export interface Transport {
  send(line: string): boolean;
}

export interface ViewModelOptions {
  plotCapacity?: number;
  throttleMs?: number;
  historyCapacity?: number;
  now?: () => number;
}

const SMOOTHING_ALPHA = 0.2;

export class ConsoleViewModel {
  connection: ConnectionState = "disconnected";
  welcome: WelcomeMessage | null = null;
  latest: StateMessage | null = null;
  driverToken: string | null = null;
  driverPending = false;
  notice: string | null = null;
  smoothingEnabled = false;

  readonly commandHistory: CommandLogEntry[] = [];
  readonly forcePlot: TimeSeriesBuffer;
  readonly depthPlot: TimeSeriesBuffer;
  readonly targetPlot: TimeSeriesBuffer;
  readonly errorPlot: TimeSeriesBuffer;

  private readonly throttleMs: number;
  private readonly historyCapacity: number;
  private readonly now: () => number;
  private readonly listeners = new Set<() => void>();
  private lastSliderSendAt = -Infinity;
  private lastHeartbeatAt: number | null = null;
  private pendingGapMarker = false;
  private wrenchHeld = false;
  private smoothedForce = 0;

  constructor(private readonly transport: Transport, options: ViewModelOptions = {}) {
    const capacity = options.plotCapacity ?? 600;
    this.forcePlot = new TimeSeriesBuffer(capacity);
    this.depthPlot = new TimeSeriesBuffer(capacity);
    this.targetPlot = new TimeSeriesBuffer(capacity);
    this.errorPlot = new TimeSeriesBuffer(capacity);
    this.throttleMs = options.throttleMs ?? 20;
    this.historyCapacity = options.historyCapacity ?? 100;
    this.now = options.now ?? (() => Date.now());
  }

  // -- change notification -------------------------------------------------

  onChange(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const fn of this.listeners) {
      fn();
    }
  }

  // -- derived display values ----------------------------------------------

  get mode(): Mode {
    return this.latest?.mode ?? this.welcome?.mode ?? "track";
  }

  get maxDepth(): number {
    return this.welcome?.max_depth ?? 0.01;
  }

  get controlsEnabled(): boolean {
    return this.connection === "connected";
  }

  /** Exactly the last broadcast force unless smoothing is on (and labeled). */
  displayedForce(): number {
    if (this.latest === null) {
      return 0;
    }
    return this.smoothingEnabled ? this.smoothedForce : this.latest.F_t;
  }

  heartbeatAgeMs(): number | null {
    return this.lastHeartbeatAt === null ? null : this.now() - this.lastHeartbeatAt;
  }

  // -- inbound -------------------------------------------------------------

  handleConnectionState(state: ConnectionState): void {
    const wasConnected = this.connection === "connected";
    this.connection = state;
    if (wasConnected && state !== "connected") {
      // plots resume with a visible gap once the stream is back
      this.pendingGapMarker = true;
      this.driverToken = null; // the service releases the driver on disconnect
      this.driverPending = false;
    }
    this.emit();
  }

  handleLine(line: string): void {
    let message: ServerMessage;
    try {
      message = decodeServerMessage(line);
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.pushHistory("decode", err.message, "error");
        this.emit();
        return;
      }
      throw err;
    }
    switch (message.type) {
      case "welcome":
        this.welcome = message;
        break;
      case "state": {
        const gap = this.pendingGapMarker || message.gap === true;
        this.pendingGapMarker = false;
        this.latest = message;
        this.smoothedForce =
          this.forcePlot.length === 0
            ? message.F_t
            : this.smoothedForce + SMOOTHING_ALPHA * (message.F_t - this.smoothedForce);
        this.forcePlot.push(message.t, message.F_t, gap);
        this.depthPlot.push(message.t, message.depth, gap);
        this.targetPlot.push(message.t, message.x_h, gap);
        const err = message.task_err;
        this.errorPlot.push(message.t, Math.hypot(err[0], err[1], err[2]), gap);
        break;
      }
      case "heartbeat":
        this.lastHeartbeatAt = this.now();
        break;
      case "driver_grant":
        this.driverToken = message.token;
        this.driverPending = false;
        this.notice = null;
        this.pushHistory("request_driver", "token granted", "sent");
        break;
      case "ack":
        this.pushHistory(message.applied, `applied at t=${message.t.toFixed(3)}`, "sent");
        break;
      case "error":
        this.notice = `${message.code}: ${message.message}`;
        this.pushHistory(message.in_reply_to ?? "server", this.notice, "error");
        if (message.code === "driver_taken") {
          this.driverPending = false;
        }
        break;
      case "log_saved":
        this.pushHistory("save_log", message.path, "sent");
        break;
    }
    this.emit();
  }

  // -- outbound ------------------------------------------------------------

  /** Slider position in [0, 1] maps linearly onto x_h in [0, max_depth]. */
  hapticSliderInput(position: number): boolean {
    const clamped = Math.min(1, Math.max(0, position));
    const target = clamped * this.maxDepth;
    if (!this.gate("haptic_target")) {
      return false;
    }
    const t = this.now();
    if (t - this.lastSliderSendAt < this.throttleMs) {
      return false; // throttled, not an error
    }
    this.lastSliderSendAt = t;
    return this.dispatch({ type: "haptic_target", x_h: target });
  }

  /** Press-and-hold wrench pad: axis 0..5, signed magnitude (N or N*m). */
  wrenchPadPress(axis: number, magnitude: number, holdLimitS = 10): boolean {
    if (!this.gate("apply_wrench")) {
      return false;
    }
    const wrench = [0, 0, 0, 0, 0, 0];
    wrench[axis] = magnitude;
    this.wrenchHeld = true;
    return this.dispatch({ type: "apply_wrench", wrench, duration: holdLimitS });
  }

  /** Release emits the zero wrench exactly once per held press. */
  wrenchPadRelease(): boolean {
    if (!this.wrenchHeld) {
      return false;
    }
    this.wrenchHeld = false;
    return this.dispatch({ type: "apply_wrench", wrench: [0, 0, 0, 0, 0, 0], duration: 0 });
  }

  jog(axis: number, delta: number): boolean {
    if (!this.gate("jog")) {
      return false;
    }
    return this.dispatch({ type: "jog", axis, delta });
  }

  setMode(mode: Mode): boolean {
    if (!this.gate("set_mode")) {
      return false;
    }
    return this.dispatch({ type: "set_mode", mode });
  }

  pause(): boolean {
    return this.gate("pause") && this.dispatch({ type: "pause" });
  }

  resume(): boolean {
    return this.gate("resume") && this.dispatch({ type: "resume" });
  }

  reset(): boolean {
    return this.gate("reset") && this.dispatch({ type: "reset" });
  }

  saveLog(): boolean {
    return this.dispatch({ type: "save_log" });
  }

  requestDriver(): boolean {
    if (this.driverToken !== null || this.driverPending) {
      return false;
    }
    this.driverPending = true;
    const ok = this.transport.send(encodeCommand({ type: "request_driver" }, null));
    if (!ok) {
      this.driverPending = false;
    }
    this.emit();
    return ok;
  }

  toggleSmoothing(): void {
    this.smoothingEnabled = !this.smoothingEnabled;
    this.smoothedForce = this.latest?.F_t ?? 0;
    this.emit();
  }

  // -- internals -----------------------------------------------------------

  /** Mode/connection/driver gate; suppressed commands leave a notice. */
  private gate(type: string): boolean {
    if (!this.controlsEnabled) {
      this.suppress(type, "not connected");
      return false;
    }
    if (!MODE_COMMANDS[this.mode].has(type)) {
      this.suppress(type, `not allowed in ${this.mode} mode`);
      return false;
    }
    if (this.driverToken === null) {
      // first command attempt: ask for the driver token instead
      this.requestDriver();
      this.suppress(type, "requesting driver token; retry once granted");
      return false;
    }
    return true;
  }

  private suppress(type: string, why: string): void {
    this.notice = `${type} suppressed: ${why}`;
    this.pushHistory(type, why, "suppressed");
    this.emit();
  }

  private dispatch(cmd: ConsoleCommand): boolean {
    const ok = this.transport.send(encodeCommand(cmd, this.driverToken));
    if (!ok) {
      this.suppress(cmd.type, "socket not open");
      return false;
    }
    this.emit();
    return true;
  }

  private pushHistory(type: string, detail: string, status: CommandLogEntry["status"]): void {
    this.commandHistory.push({ at: this.now(), type, detail, status });
    if (this.commandHistory.length > this.historyCapacity) {
      this.commandHistory.splice(0, this.commandHistory.length - this.historyCapacity);
    }
  }
}
