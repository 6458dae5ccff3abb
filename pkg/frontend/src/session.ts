import {
  CANCEL_LABEL,
  DetectedMessage,
  FrameMessage,
  LayoutEntry,
  Method,
  ServerMessage,
  targetPosition,
} from "./protocol.js";

// Client-side mirror of one service session. It owns no transport and no
// clock: every entry point takes the caller's monotonic time in ms
// (performance.now() in the browser), which keeps the whole thing
// testable without timers.
//
// The server is the sole authority on detection and on the entry buffer.
// This mirror replays the same bookkeeping (append, cancel, burst
// arbitration) purely so the page can show the buffer between messages;
// task_done/task_failed carry the authoritative string and overwrite it.

export type Feedback = "correct" | "wrong" | "done" | "failed";

export type TaskStatus = "none" | "active" | "done" | "failed";

export type TargetView = {
  id: number;
  label: string;
  x: number;
  y: number;
  // fill intensity, straight from the latest frame's progress
  alpha: number;
  isCancel: boolean;
};

export type SessionView = {
  status: "idle" | "running";
  method: Method | null;
  displayRadius: number;
  buffer: string;
  taskStatus: TaskStatus;
  taskElapsedS: number | null;
  taskErrors: number;
  lastError: string | null;
};

type StampedFrame = { frame: FrameMessage; arrivedMs: number };

const MIN_GAZE_STEP_MS = 0.1;

export class ClientSession {
  private layout: LayoutEntry[] = [];
  private method: Method | null = null;
  private displayRadius = 10;
  private running = false;
  private pendingTask = false;

  private prevFrame: StampedFrame | null = null;
  private lastFrame: StampedFrame | null = null;
  // server-time minus local-time, refreshed on every frame
  private clockOffsetMs = 0;
  private haveOffset = false;
  private lastGazeT = -Infinity;

  private buffer: string[] = [];
  private taskStatus: TaskStatus = "none";
  private taskElapsedS: number | null = null;
  private taskErrors = 0;
  private lastEntryT: number | null = null;
  private lastError: string | null = null;

  // Call when sending a start message, so the next started message knows
  // whether a task clock is running server-side.
  noteStartSent(withTask: boolean): void {
    this.pendingTask = withTask;
  }

  handle(msg: ServerMessage, nowMs: number): Feedback[] {
    switch (msg.type) {
      case "started":
        this.layout = msg.layout;
        this.method = msg.method;
        this.displayRadius = msg.display_radius;
        this.running = true;
        this.prevFrame = null;
        this.lastFrame = null;
        this.clockOffsetMs = 0 - nowMs; // epoch is t=0 on the server timeline
        this.haveOffset = true;
        this.lastGazeT = -Infinity;
        this.buffer = [];
        this.taskStatus = this.pendingTask ? "active" : "none";
        this.taskElapsedS = null;
        this.taskErrors = 0;
        this.lastEntryT = null;
        this.lastError = null;
        return [];
      case "frame":
        this.prevFrame = this.lastFrame;
        this.lastFrame = { frame: msg, arrivedMs: nowMs };
        this.clockOffsetMs = msg.t - nowMs;
        this.haveOffset = true;
        return [];
      case "detected":
        return this.onDetected(msg);
      case "task_done":
        this.buffer = msg.buffer.split("");
        this.taskStatus = "done";
        this.taskElapsedS = msg.t / 1000;
        this.taskErrors = msg.errors;
        return ["done"];
      case "task_failed":
        this.buffer = msg.buffer.split("");
        this.taskStatus = "failed";
        this.taskElapsedS = msg.t / 1000;
        this.taskErrors = msg.errors;
        return ["failed"];
      case "error":
        this.lastError = msg.message;
        return [];
    }
  }

  private onDetected(msg: DetectedMessage): Feedback[] {
    // An ambiguous result arrives as a burst of detected messages sharing
    // one timestamp, lowest id first; only the first of the burst entered
    // the server's buffer, so only that one is mirrored here.
    const firstOfBurst = this.lastEntryT === null || msg.t > this.lastEntryT;
    this.lastEntryT = msg.t;
    if (!firstOfBurst) return [];
    if (msg.label === CANCEL_LABEL) {
      this.buffer.pop();
    } else {
      this.buffer.push(msg.label);
    }
    if (msg.correct === undefined) return [];
    if (msg.label === CANCEL_LABEL) this.taskErrors += 1;
    return [msg.correct ? "correct" : "wrong"];
  }

  markStopped(): void {
    this.running = false;
  }

  get view(): SessionView {
    return {
      status: this.running ? "running" : "idle",
      method: this.method,
      displayRadius: this.displayRadius,
      buffer: this.buffer.join(""),
      taskStatus: this.taskStatus,
      taskElapsedS: this.taskElapsedS,
      taskErrors: this.taskErrors,
      lastError: this.lastError,
    };
  }

  // Local clock mapped onto the server timeline (ms since epoch).
  serverTimeNow(nowMs: number): number {
    return this.haveOffset ? nowMs + this.clockOffsetMs : 0;
  }

  // Timestamp for the next gaze message. The server rejects non-increasing
  // times, and the offset can step backwards when a frame arrives after a
  // network stall, so clamp to strictly increasing.
  nextGazeTimestamp(nowMs: number): number {
    const t = Math.max(this.serverTimeNow(nowMs), this.lastGazeT + MIN_GAZE_STEP_MS);
    this.lastGazeT = t;
    return t;
  }

  // Target discs for one rendered frame. Between server frames the
  // positions are interpolated (one frame behind, the usual trade of
  // latency for smoothness); the fill alpha is never interpolated, it is
  // whatever the latest frame reported.
  renderPositions(nowMs: number): TargetView[] {
    if (this.lastFrame === null) {
      const t = this.serverTimeNow(nowMs);
      return this.layout.map((entry) => {
        const p = targetPosition(entry, t);
        return {
          id: entry.id,
          label: entry.label,
          x: p.x,
          y: p.y,
          alpha: 0,
          isCancel: entry.label === CANCEL_LABEL,
        };
      });
    }
    const last = this.lastFrame;
    const prev = this.prevFrame;
    let u = 1;
    let base: FrameMessage = last.frame;
    if (prev !== null) {
      const span = last.arrivedMs - prev.arrivedMs;
      u = span > 0 ? (nowMs - last.arrivedMs) / span : 1;
      u = Math.min(Math.max(u, 0), 1);
      base = prev.frame;
    }
    const byId = new Map(this.layout.map((entry) => [entry.id, entry]));
    return last.frame.targets.map((target, i) => {
      const from = (prev !== null ? base.targets[i] : undefined) ?? target;
      const entry = byId.get(target.id);
      return {
        id: target.id,
        label: entry ? entry.label : String(target.id),
        x: from.x + (target.x - from.x) * u,
        y: from.y + (target.y - from.y) * u,
        alpha: target.progress,
        isCancel: entry ? entry.label === CANCEL_LABEL : false,
      };
    });
  }

  layoutEntry(label: string): LayoutEntry | undefined {
    return this.layout.find((entry) => entry.label === label);
  }
}
