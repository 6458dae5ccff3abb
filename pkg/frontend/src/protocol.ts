// Message shapes for the entry service: one JSON object per WebSocket
// message (or per line over TCP). Every "t" is milliseconds since the
// session epoch; "period" is seconds; direction 1 is clockwise on a
// y-down screen.

export type Method = "slope" | "correlation";

export type StartMessage = {
  type: "start";
  targets: number;
  method: Method;
  task?: string;
};
export type GazeMessage = { type: "gaze"; t: number; x: number; y: number };
export type StopMessage = { type: "stop" };
export type ClientMessage = StartMessage | GazeMessage | StopMessage;

export type LayoutEntry = {
  id: number;
  label: string;
  radius: number;
  period: number;
  phase: number;
  direction: 1 | -1;
  center: [number, number];
};

export type StartedMessage = {
  type: "started";
  epoch: number;
  method: Method;
  display_radius: number;
  layout: LayoutEntry[];
};
export type FrameTarget = { id: number; x: number; y: number; progress: number };
export type FrameMessage = { type: "frame"; t: number; targets: FrameTarget[] };
export type DetectedMessage = {
  type: "detected";
  id: number;
  label: string;
  t: number;
  ambiguous: boolean;
  // present only when a task is live and this event changed the buffer
  correct?: boolean;
};
export type TaskDoneMessage = { type: "task_done"; t: number; buffer: string; errors: number };
export type TaskFailedMessage = { type: "task_failed"; t: number; buffer: string; errors: number };
export type ErrorMessage = { type: "error"; message: string };
export type ServerMessage =
  | StartedMessage
  | FrameMessage
  | DetectedMessage
  | TaskDoneMessage
  | TaskFailedMessage
  | ErrorMessage;

const SERVER_TYPES = new Set([
  "started",
  "frame",
  "detected",
  "task_done",
  "task_failed",
  "error",
]);

export function parseServerMessage(text: string): ServerMessage | null {
  let value: unknown;
  try {
    value = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof value !== "object" || value === null || Array.isArray(value)) return null;
  const type = (value as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) return null;
  return value as ServerMessage;
}

export const TARGET_COUNTS = [6, 8, 10, 12, 14, 16, 18, 20, 22, 24] as const;
export const CANCEL_LABEL = "CANCEL";
export const TASK_LENGTH = 4;

// Where a target sits at a given moment on the server timeline. Used for
// rendering before the first frame arrives and for scripting pointer
// traces; live rendering interpolates the server's frame messages instead.
export function targetPosition(entry: LayoutEntry, tMs: number): { x: number; y: number } {
  const angle =
    entry.phase + entry.direction * ((2 * Math.PI) / entry.period) * (tMs / 1000);
  return {
    x: entry.center[0] + entry.radius * Math.cos(angle),
    y: entry.center[1] + entry.radius * Math.sin(angle),
  };
}
