import { ChildProcess, spawn } from "node:child_process";
import path from "node:path";
import { createInterface } from "node:readline";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";
import { afterEach, describe, expect, it } from "vitest";
import { parseServerMessage, targetPosition } from "../src/protocol.js";
import { ClientSession, Feedback } from "../src/session.js";
import { Wire, WireHandlers, encodeClientMessage } from "../src/transport.js";

// End-to-end: spawn the real Python service, connect through its
// WebSocket bridge with the production ClientSession, and script the
// pointer to ride a target. Only the socket constructor differs from the
// browser (node's "ws" package instead of the DOM WebSocket).

const REPO_ROOT = path.resolve(path.dirname(fileURLToPath(import.meta.url)), "..", "..");

const procs: ChildProcess[] = [];
const wires: Wire[] = [];

afterEach(() => {
  for (const wire of wires.splice(0)) wire.close();
  for (const proc of procs.splice(0)) proc.kill();
});

async function startServer(taskTimeoutS: number): Promise<string> {
  const proc = spawn(
    "python3",
    [
      "-m",
      "pursuitkit.cli",
      "serve",
      "--port",
      "0",
      "--ws-port",
      "0",
      "--task-timeout-s",
      String(taskTimeoutS),
    ],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  procs.push(proc);
  let stderr = "";
  proc.stderr!.on("data", (chunk: Buffer) => {
    stderr += chunk.toString();
  });
  return new Promise<string>((resolve, reject) => {
    const timer = setTimeout(
      () => reject(new Error(`server announced no ws endpoint\n${stderr}`)),
      15000,
    );
    createInterface({ input: proc.stdout! }).on("line", (line) => {
      const match = line.match(/^listening (ws:\/\/\S+)$/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]!);
      }
    });
    proc.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`server exited with ${code} before listening\n${stderr}`));
    });
  });
}

function openNodeWire(url: string, handlers: WireHandlers): Promise<Wire> {
  return new Promise((resolve, reject) => {
    const socket = new WebSocket(url);
    socket.on("error", reject);
    socket.on("close", () => handlers.onClose());
    socket.on("message", (data) => {
      const msg = parseServerMessage(String(data));
      if (msg) handlers.onMessage(msg);
    });
    socket.on("open", () => {
      handlers.onOpen();
      const wire: Wire = {
        send: (msg) => socket.send(encodeClientMessage(msg)),
        close: () => socket.close(),
      };
      wires.push(wire);
      resolve(wire);
    });
  });
}

type TaskMessage = { kind: "task_done" | "task_failed"; t: number; buffer: string; errors: number };
type Detection = { id: number; label: string; correct: boolean | undefined; ambiguous: boolean };

class E2eClient {
  session = new ClientSession();
  feedback: Feedback[] = [];
  detections: Detection[] = [];
  errors: string[] = [];
  taskMessages: TaskMessage[] = [];
  maxProgress = new Map<number, number>();
  wire!: Wire;

  async connect(url: string): Promise<void> {
    this.wire = await openNodeWire(url, {
      onOpen: () => {},
      onClose: () => {},
      onMessage: (msg) => {
        this.feedback.push(...this.session.handle(msg, performance.now()));
        if (msg.type === "detected") {
          this.detections.push({
            id: msg.id,
            label: msg.label,
            correct: msg.correct,
            ambiguous: msg.ambiguous,
          });
        } else if (msg.type === "error") {
          this.errors.push(msg.message);
        } else if (msg.type === "task_done" || msg.type === "task_failed") {
          this.taskMessages.push({ kind: msg.type, t: msg.t, buffer: msg.buffer, errors: msg.errors });
        } else if (msg.type === "frame") {
          for (const target of msg.targets) {
            const seen = this.maxProgress.get(target.id) ?? 0;
            this.maxProgress.set(target.id, Math.max(seen, target.progress));
          }
        }
      },
    });
  }

  // Ride the labelled target: every ~15 ms send a gaze sample sitting
  // exactly where that target is at the sample's own timestamp.
  async follow(label: string, done: () => boolean, budgetMs: number): Promise<void> {
    const entry = this.session.layoutEntry(label);
    if (entry === undefined) throw new Error(`no target labelled ${label}`);
    const deadline = performance.now() + budgetMs;
    while (!done()) {
      if (performance.now() > deadline) {
        throw new Error(`gave up following ${label} after ${budgetMs} ms`);
      }
      const t = this.session.nextGazeTimestamp(performance.now());
      const pos = targetPosition(entry, t);
      this.wire.send({ type: "gaze", t, x: pos.x, y: pos.y });
      await sleep(15);
    }
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor(cond: () => boolean, budgetMs: number, what: string): Promise<void> {
  const deadline = performance.now() + budgetMs;
  while (!cond()) {
    if (performance.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(10);
  }
}

describe("live service round trip", () => {
  it("enters a symbol by pursuit and removes it with CANCEL", async () => {
    const url = await startServer(30);
    const client = new E2eClient();
    await client.connect(url);

    client.session.noteStartSent(true);
    client.wire.send({ type: "start", targets: 6, method: "slope", task: "3140" });
    await waitFor(() => client.session.view.status === "running", 5000, "started message");
    expect(client.session.layoutEntry("3")).toBeDefined();
    expect(client.session.layoutEntry("CANCEL")).toBeDefined();
    expect(client.session.layoutEntry("6")).toBeUndefined();
    expect(client.session.renderPositions(performance.now())).toHaveLength(7);
    expect(client.session.view.taskStatus).toBe("active");

    await client.follow("3", () => client.feedback.includes("correct"), 10000);
    expect(client.session.view.buffer).toBe("3");
    expect(client.detections[0]).toMatchObject({ label: "3", correct: true, ambiguous: false });
    // fill intensity tracked the build-up server-side
    expect(client.maxProgress.get(3) ?? 0).toBeGreaterThanOrEqual(0.5);

    await client.follow("CANCEL", () => client.feedback.includes("wrong"), 12000);
    expect(client.session.view.buffer).toBe("");
    expect(client.session.view.taskErrors).toBe(1);
    const last = client.detections[client.detections.length - 1]!;
    expect(last).toMatchObject({ label: "CANCEL", correct: false });

    // after stop the server forgets the session
    client.wire.send({ type: "stop" });
    client.session.markStopped();
    client.wire.send({ type: "gaze", t: 1, x: 0, y: 0 });
    await waitFor(() => client.errors.length > 0, 5000, "error after stop");
    expect(client.errors[0]).toContain("start");
  }, 60000);

  it("fails the task when the deadline passes without entries", async () => {
    const url = await startServer(1.5);
    const client = new E2eClient();
    await client.connect(url);

    client.wire.send({ type: "gaze", t: 0, x: 1, y: 1 });
    await waitFor(() => client.errors.length > 0, 5000, "error before start");

    client.session.noteStartSent(true);
    client.wire.send({ type: "start", targets: 6, method: "correlation", task: "0123" });
    await waitFor(() => client.session.view.status === "running", 5000, "started message");

    await waitFor(() => client.feedback.includes("failed"), 8000, "task_failed");
    expect(client.session.view.taskStatus).toBe("failed");
    expect(client.session.view.buffer).toBe("");
    const failMsg = client.taskMessages[0]!;
    expect(failMsg.kind).toBe("task_failed");
    expect(failMsg.t).toBeGreaterThanOrEqual(1500);
    expect(failMsg.t).toBeLessThan(4000);
    expect(client.taskMessages).toHaveLength(1);
  }, 30000);
});
