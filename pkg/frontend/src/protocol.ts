/**
 * Teleop wire protocol v1 (mirrors the service's schema).
 *
 * Every message is a single JSON line carrying `v: "v1"` and a `type` tag.
 * Unknown fields are ignored on receive; messages without the version tag or
 * type are rejected.
 */

export const PROTOCOL_VERSION = "v1";

export type Mode = "track" | "admittance" | "insert";

export interface PoseMessage {
  position: [number, number, number];
  rotation: [number, number, number]; // rotation vector, rad
}

export interface StateMessage {
  type: "state";
  seq: number;
  t: number;
  mode: Mode;
  paused: boolean;
  pose: PoseMessage;
  task_err: number[];
  depth: number;
  theta: number;
  tool_v: number;
  F_t: number;
  x_h: number;
  punctured: boolean[];
  saturation: { v: boolean; w: boolean; stalled: boolean };
  last_command: string | null;
  gap?: boolean;
}

export interface WelcomeMessage {
  type: "welcome";
  protocol: string;
  scenario: string;
  mode: Mode;
  dt: number;
  max_depth: number;
  state_period: number;
}

export interface HeartbeatMessage {
  type: "heartbeat";
  t: number;
  wall: number;
}

export interface AckMessage {
  type: "ack";
  applied: string;
  t: number;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
  in_reply_to?: string;
}

export interface DriverGrantMessage {
  type: "driver_grant";
  token: string;
}

export interface LogSavedMessage {
  type: "log_saved";
  path: string;
  records: number;
}

export type ServerMessage =
  | StateMessage
  | WelcomeMessage
  | HeartbeatMessage
  | AckMessage
  | ErrorMessage
  | DriverGrantMessage
  | LogSavedMessage;

export type ConsoleCommand =
  | { type: "set_mode"; mode: Mode }
  | { type: "jog"; axis: number; delta: number }
  | { type: "apply_wrench"; wrench: number[]; duration: number }
  | { type: "haptic_target"; x_h: number }
  | { type: "set_gains"; values: Record<string, number | number[]> }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "reset" }
  | { type: "request_driver" }
  | { type: "release_driver" }
  | { type: "save_log" };

/** Commands each mode accepts, mirroring the service's gating. */
export const MODE_COMMANDS: Record<Mode, ReadonlySet<string>> = {
  track: new Set(["set_mode", "jog", "set_gains", "pause", "resume", "reset"]),
  admittance: new Set(["set_mode", "jog", "apply_wrench", "set_gains", "pause", "resume", "reset"]),
  insert: new Set(["set_mode", "haptic_target", "set_gains", "pause", "resume", "reset"]),
};

export function encodeCommand(cmd: ConsoleCommand, token: string | null): string {
  const obj: Record<string, unknown> = { v: PROTOCOL_VERSION, ...cmd };
  if (token !== null) {
    obj.token = token;
  }
  return JSON.stringify(obj);
}

export class ProtocolError extends Error {}

/** Parse one line from the server, enforcing the envelope. */
export function decodeServerMessage(line: string): ServerMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    throw new ProtocolError(`not valid JSON: ${line.slice(0, 80)}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new ProtocolError("message must be a JSON object");
  }
  const rec = obj as Record<string, unknown>;
  if (rec.v !== PROTOCOL_VERSION) {
    throw new ProtocolError(`missing or mismatching version tag (need "${PROTOCOL_VERSION}")`);
  }
  if (typeof rec.type !== "string") {
    throw new ProtocolError("message missing its 'type' tag");
  }
  switch (rec.type) {
    case "state":
    case "welcome":
    case "heartbeat":
    case "ack":
    case "error":
    case "driver_grant":
    case "log_saved":
      return rec as unknown as ServerMessage;
    default:
      throw new ProtocolError(`unknown server message type "${rec.type}"`);
  }
}
