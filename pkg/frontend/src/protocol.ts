/**
 * Wire protocol spoken by the `windfarm serve` stream: versioned JSON
 * text messages. Frames flow server -> client; controls flow back.
 * The dashboard renders only values found in these messages.
 */

export const PROTOCOL_VERSION = 1;
export const DEFAULT_SERVER_URL = "ws://127.0.0.1:8734/";

export interface TurbineView {
  index: number;
  position: [number, number];
  orientation_angle: number;
  wind_angle: number;
  contribution: number;
  light: "green" | "yellow" | "red";
  inbox_size: number;
  sent: boolean;
  predicted_angle: number | null;
}

export interface FrameMessage {
  v: number;
  type: "frame";
  step: number;
  episode: number;
  main_angle: number;
  efficiency: number | null;
  cumulative_reward: number;
  time_scale: number;
  paused: boolean;
  wind_pinned: boolean;
  edges: [number, number][];
  turbines: TurbineView[];
}

export interface ErrorMessage {
  v: number;
  type: "error";
  message: string;
}

export type ServerMessage = FrameMessage | ErrorMessage;

export type ControlKind =
  | "pause"
  | "resume"
  | "reset"
  | "set_time_scale"
  | "set_wind_direction"
  | "release_wind";

export interface ControlMessage {
  v: number;
  type: "control";
  kind: ControlKind;
  value?: number;
}

export function makeControl(kind: ControlKind, value?: number): ControlMessage {
  const msg: ControlMessage = { v: PROTOCOL_VERSION, type: "control", kind };
  if (value !== undefined) {
    msg.value = value;
  }
  return msg;
}

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function isTurbine(x: unknown): x is TurbineView {
  if (typeof x !== "object" || x === null) return false;
  const t = x as Record<string, unknown>;
  return (
    isFiniteNumber(t.index) &&
    Array.isArray(t.position) &&
    t.position.length === 2 &&
    t.position.every(isFiniteNumber) &&
    isFiniteNumber(t.orientation_angle) &&
    isFiniteNumber(t.wind_angle) &&
    isFiniteNumber(t.contribution) &&
    (t.light === "green" || t.light === "yellow" || t.light === "red") &&
    isFiniteNumber(t.inbox_size) &&
    typeof t.sent === "boolean" &&
    (t.predicted_angle === null || isFiniteNumber(t.predicted_angle))
  );
}

/**
 * Parse one raw socket payload. Returns null for anything that is not
 * a well-formed message of a known type, so a malformed payload can
 * never corrupt the view model.
 */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;
  if (msg.v !== PROTOCOL_VERSION) return null;
  if (msg.type === "error") {
    return typeof msg.message === "string" ? (msg as unknown as ErrorMessage) : null;
  }
  if (msg.type !== "frame") return null;
  const ok =
    isFiniteNumber(msg.step) &&
    isFiniteNumber(msg.episode) &&
    isFiniteNumber(msg.main_angle) &&
    (msg.efficiency === null || isFiniteNumber(msg.efficiency)) &&
    isFiniteNumber(msg.cumulative_reward) &&
    isFiniteNumber(msg.time_scale) &&
    typeof msg.paused === "boolean" &&
    typeof msg.wind_pinned === "boolean" &&
    Array.isArray(msg.edges) &&
    msg.edges.every(
      (e: unknown) => Array.isArray(e) && e.length === 2 && e.every(isFiniteNumber),
    ) &&
    Array.isArray(msg.turbines) &&
    msg.turbines.every(isTurbine);
  return ok ? (msg as unknown as FrameMessage) : null;
}
