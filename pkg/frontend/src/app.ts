import { Beeper } from "./audio.js";
import { trackPointer } from "./pointer.js";
import {
  CANCEL_LABEL,
  ClientMessage,
  Method,
  TARGET_COUNTS,
  TASK_LENGTH,
} from "./protocol.js";
import { ClientSession } from "./session.js";
import { Wire, defaultWireUrl, openWebSocketWire } from "./transport.js";

// Page wiring. All interaction state lives in ClientSession; this module
// only moves data between the socket, the pointer, the canvas and the
// controls.

const LAYOUT = { width: 1920, height: 1080 };
const GAZE_INTERVAL_MS = 1000 / 60;
const RECONNECT_BASE_MS = 1000;
const RECONNECT_MAX_MS = 5000;

type ConnectionState = "connecting" | "connected" | "reconnecting";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing #${id}`);
  return el as T;
}

function main(): void {
  const canvas = byId<HTMLCanvasElement>("dial");
  const targetsSelect = byId<HTMLSelectElement>("targets");
  const methodSelect = byId<HTMLSelectElement>("method");
  const taskInput = byId<HTMLInputElement>("task");
  const startButton = byId<HTMLButtonElement>("start");
  const stopButton = byId<HTMLButtonElement>("stop");
  const bufferEl = byId<HTMLElement>("buffer");
  const statusEl = byId<HTMLElement>("status");

  canvas.width = LAYOUT.width;
  canvas.height = LAYOUT.height;
  const maybeCtx = canvas.getContext("2d");
  if (maybeCtx === null) throw new Error("canvas 2d context unavailable");
  const ctx: CanvasRenderingContext2D = maybeCtx;

  for (const count of TARGET_COUNTS) {
    const option = document.createElement("option");
    option.value = String(count);
    option.textContent = String(count);
    if (count === 8) option.selected = true;
    targetsSelect.appendChild(option);
  }

  const session = new ClientSession();
  const pointer = trackPointer(canvas, LAYOUT);
  const beeper = new Beeper();

  let wire: Wire | null = null;
  let connection: ConnectionState = "connecting";
  let reconnectDelay = RECONNECT_BASE_MS;
  let statusNote = "";

  function send(msg: ClientMessage): void {
    wire?.send(msg);
  }

  function connect(): void {
    connection = wire === null ? "connecting" : "reconnecting";
    wire = openWebSocketWire(defaultWireUrl(window.location), {
      onOpen() {
        connection = "connected";
        reconnectDelay = RECONNECT_BASE_MS;
        if (session.view.status === "running") {
          // the server-side session died with the old socket
          session.markStopped();
          statusNote = "connection was lost; start again";
        }
      },
      onClose() {
        connection = "reconnecting";
        window.setTimeout(connect, reconnectDelay);
        reconnectDelay = Math.min(reconnectDelay * 1.5, RECONNECT_MAX_MS);
      },
      onMessage(msg) {
        for (const feedback of session.handle(msg, performance.now())) {
          beeper.play(feedback);
        }
      },
    });
  }

  startButton.addEventListener("click", () => {
    const task = taskInput.value.trim();
    if (task !== "" && task.length !== TASK_LENGTH) {
      statusNote = `task needs exactly ${TASK_LENGTH} symbols`;
      return;
    }
    statusNote = "";
    const msg: ClientMessage = {
      type: "start",
      targets: Number(targetsSelect.value),
      method: methodSelect.value as Method,
    };
    if (task !== "") msg.task = task;
    session.noteStartSent(task !== "");
    send(msg);
  });

  stopButton.addEventListener("click", () => {
    send({ type: "stop" });
    session.markStopped();
    statusNote = "";
  });

  window.setInterval(() => {
    if (session.view.status !== "running" || connection !== "connected") return;
    if (!pointer.seen) return;
    send({
      type: "gaze",
      t: session.nextGazeTimestamp(performance.now()),
      x: pointer.x,
      y: pointer.y,
    });
  }, GAZE_INTERVAL_MS);

  function statusLine(): string {
    if (connection !== "connected") return connection === "connecting" ? "connecting..." : "reconnecting...";
    const view = session.view;
    const parts: string[] = [];
    if (view.status === "running") {
      parts.push(`${view.method} method`);
      if (view.taskStatus === "active") parts.push("task running");
      if (view.taskStatus === "done" && view.taskElapsedS !== null) {
        parts.push(`task done in ${view.taskElapsedS.toFixed(1)} s, ${view.taskErrors} cancel(s)`);
      }
      if (view.taskStatus === "failed") parts.push("task timed out");
    } else {
      parts.push("idle");
    }
    if (view.lastError !== null) parts.push(`server: ${view.lastError}`);
    if (statusNote !== "") parts.push(statusNote);
    return parts.join(" | ");
  }

  function draw(): void {
    const view = session.view;
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, LAYOUT.width, LAYOUT.height);
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.font = "14px system-ui, sans-serif";
    for (const target of session.renderPositions(performance.now())) {
      const fill = target.isCancel ? "255, 173, 51" : "96, 165, 250";
      const stroke = target.isCancel ? "#c98a1b" : "#3b82c4";
      ctx.beginPath();
      ctx.arc(target.x, target.y, view.displayRadius, 0, 2 * Math.PI);
      ctx.fillStyle = `rgba(${fill}, ${target.alpha.toFixed(3)})`;
      ctx.fill();
      ctx.lineWidth = 2;
      ctx.strokeStyle = stroke;
      ctx.stroke();
      ctx.fillStyle = "#e8ecf4";
      const labelY =
        target.label === CANCEL_LABEL ? target.y + view.displayRadius + 14 : target.y;
      ctx.fillText(target.label, target.x, labelY);
    }
    if (pointer.seen && view.status === "running") {
      ctx.beginPath();
      ctx.arc(pointer.x, pointer.y, 4, 0, 2 * Math.PI);
      ctx.fillStyle = "#f2f5fa";
      ctx.fill();
    }
  }

  function refresh(): void {
    const view = session.view;
    draw();
    bufferEl.textContent = view.buffer === "" ? "(empty)" : view.buffer.split("").join(" ");
    statusEl.textContent = statusLine();
    statusEl.dataset.state = connection === "connected" ? view.taskStatus : "offline";
    startButton.disabled = connection !== "connected";
    stopButton.disabled = connection !== "connected" || view.status !== "running";
    window.requestAnimationFrame(refresh);
  }

  connect();
  window.requestAnimationFrame(refresh);
}

main();
