"""Interactive symbol-entry service over newline-delimited JSON.

Protocol (one JSON object per line over TCP, or per WebSocket message):

  client -> server
    {"type": "start", "targets": N, "method": "slope"|"correlation",
     "task": "optional 4 symbols"}
    {"type": "gaze", "t": ms, "x": px, "y": px}
    {"type": "stop"}

  server -> client
    {"type": "started", "epoch": ms, "method": ..., "display_radius": px,
     "layout": [{"id", "label", "radius", "period", "phase", "direction",
                 "center"}]}
    {"type": "frame", "t": ms, "targets": [{"id", "x", "y", "progress"}]}
    {"type": "detected", "id", "label", "t": ms, "ambiguous": bool,
     "correct": bool (present while a task is active and this event entered
     the buffer)}
    {"type": "task_done", "t": ms, "buffer": str, "errors": n}
    {"type": "task_failed", "t": ms, "buffer": str, "errors": n}
    {"type": "error", "message": str}

All "t" fields count milliseconds since the session epoch; "period" is in
seconds; direction 1 is clockwise, -1 counter-clockwise. The server owns
the animation clock: clients render target positions from frame messages
and stamp outgoing gaze with the same timeline.

The Session class is transport-free (time is injected), so task deadlines
and entry semantics are testable without sockets or sleeps. The TCP and
WebSocket front ends are thin shells around it: detection events on the
wire are exactly the detector's events for the same sample sequence.
"""

from __future__ import annotations

import asyncio
import json
import math
import sys
import time
from pathlib import Path
from typing import Any

from .detector import METHODS, DetectorConfig, GazeSample, PursuitDetector
from .errors import PursuitError
from .simulator import targets_at_ms
from .trajectories import (
    CANCEL_LABEL,
    SELECTABLE_COUNTS,
    DialPlateLayout,
    dialplate_layout,
)

DEFAULT_TCP_PORT = 8433
DEFAULT_TASK_TIMEOUT_MS = 90_000.0
TASK_LENGTH = 4


def _error(message: str) -> dict:
    return {"type": "error", "message": message}


def _finite_number(value: Any) -> float | None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None
    v = float(value)
    return v if math.isfinite(v) else None


def layout_message(layout: DialPlateLayout) -> list[dict]:
    out = []
    for spec in layout.targets:
        traj = spec.trajectory
        out.append(
            {
                "id": spec.id,
                "label": spec.label,
                "radius": traj.radius,
                "period": traj.period,
                "phase": traj.phase,
                "direction": 1 if traj.clockwise else -1,
                "center": [traj.center[0], traj.center[1]],
            }
        )
    return out


class Session:
    """One client's interaction state.

    handle_message() and tick() take the current time in milliseconds and
    return the messages to send. Selections append to the entry buffer;
    CANCEL removes the last symbol and, during a task, counts as one error.
    A task fails when its deadline passes before the buffer matches.
    """

    def __init__(self, task_timeout_ms: float = DEFAULT_TASK_TIMEOUT_MS) -> None:
        if task_timeout_ms <= 0:
            raise ValueError(f"task_timeout_ms must be > 0, got {task_timeout_ms}")
        self.task_timeout_ms = task_timeout_ms
        self.layout: DialPlateLayout | None = None
        self.method: str | None = None
        self.buffer: list[str] = []
        self.task: str | None = None
        self.task_errors = 0
        self._task_alive = False
        self._detector: PursuitDetector | None = None
        self._epoch_ms: float | None = None
        self._progress: dict[int, float] = {}

    @property
    def started(self) -> bool:
        return self._detector is not None

    @property
    def epoch_ms(self) -> float | None:
        return self._epoch_ms

    @property
    def frame_interval_ms(self) -> float:
        if self._detector is None:
            return 1000.0 / 60.0
        return 1000.0 / self._detector.config.sample_rate

    def handle_message(self, msg: Any, now_ms: float) -> list[dict]:
        if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
            return [_error("message must be an object with a string 'type'")]
        kind = msg["type"]
        if kind == "start":
            return self._on_start(msg, now_ms)
        if kind == "gaze":
            return self._on_gaze(msg, now_ms)
        if kind == "stop":
            self._clear()
            return []
        return [_error(f"unknown message type {kind!r}")]

    def tick(self, now_ms: float) -> list[dict]:
        """Frame message at the current time, plus task_failed on deadline."""
        if self._detector is None or self.layout is None or self._epoch_ms is None:
            return []
        t = now_ms - self._epoch_ms
        out = self._deadline_check(t)
        targets = [
            {"id": tid, "x": x, "y": y, "progress": self._progress.get(tid, 0.0)}
            for tid, x, y in targets_at_ms(self.layout, t)
        ]
        out.append({"type": "frame", "t": t, "targets": targets})
        return out

    def _clear(self) -> None:
        self.layout = None
        self.method = None
        self.buffer = []
        self.task = None
        self.task_errors = 0
        self._task_alive = False
        self._detector = None
        self._epoch_ms = None
        self._progress = {}

    def _on_start(self, msg: dict, now_ms: float) -> list[dict]:
        targets = msg.get("targets")
        if isinstance(targets, bool) or not isinstance(targets, int):
            return [_error("'targets' must be an integer")]
        if targets not in SELECTABLE_COUNTS:
            return [_error(f"'targets' must be one of {list(SELECTABLE_COUNTS)}")]
        method = msg.get("method")
        if method not in METHODS:
            return [_error(f"'method' must be one of {list(METHODS)}")]
        layout = dialplate_layout(targets)
        task = msg.get("task")
        if task is not None:
            if not isinstance(task, str) or len(task) != TASK_LENGTH:
                return [_error(f"'task' must be a string of {TASK_LENGTH} symbols")]
            labels = {spec.label for spec in layout.selectable}
            bad = [c for c in task if c not in labels]
            if bad:
                return [_error(f"task symbols {bad} not in this layout")]

        self._clear()
        self.layout = layout
        self.method = method
        self.task = task
        self._task_alive = task is not None
        self._detector = PursuitDetector(DetectorConfig.defaults(method), layout.ids)
        self._epoch_ms = now_ms
        self._progress = {tid: 0.0 for tid in layout.ids}
        return [
            {
                "type": "started",
                "epoch": self._epoch_ms,
                "method": method,
                "display_radius": layout.display_radius,
                "layout": layout_message(layout),
            }
        ]

    def _on_gaze(self, msg: dict, now_ms: float) -> list[dict]:
        if self._detector is None or self.layout is None or self._epoch_ms is None:
            return [_error("no active session; send start first")]
        t = _finite_number(msg.get("t"))
        x = _finite_number(msg.get("x"))
        y = _finite_number(msg.get("y"))
        if t is None or x is None or y is None:
            return [_error("gaze needs finite numbers t, x, y")]

        out = self._deadline_check(now_ms - self._epoch_ms)
        try:
            frame = self._detector.ingest(
                GazeSample(t_ms=t, x=x, y=y), targets_at_ms(self.layout, t)
            )
        except PursuitError as exc:
            out.append(_error(str(exc)))
            return out
        self._progress = dict(frame.progress)

        if frame.events:
            # Several targets can fire on one sample under pathological
            # input; only the lowest id enters the buffer.
            winner = min(e.target_id for e in frame.events)
            for event in frame.events:
                label = self.layout.by_id(event.target_id).label
                detected = {
                    "type": "detected",
                    "id": event.target_id,
                    "label": label,
                    "t": event.t_ms,
                    "ambiguous": frame.ambiguous,
                }
                if event.target_id == winner:
                    correct, extra = self._apply_entry(label, event.t_ms)
                    if correct is not None:
                        detected["correct"] = correct
                    out.append(detected)
                    out.extend(extra)
                else:
                    out.append(detected)
        return out

    def _apply_entry(self, label: str, t_ms: float) -> tuple[bool | None, list[dict]]:
        """Update the entry buffer; returns (correct flag, follow-up messages)."""
        correct: bool | None = None
        extra: list[dict] = []
        if label == CANCEL_LABEL:
            if self.buffer:
                self.buffer.pop()
            if self._task_alive:
                self.task_errors += 1
                correct = False
        else:
            if self._task_alive and self.task is not None:
                pos = len(self.buffer)
                correct = pos < len(self.task) and self.task[pos] == label
            self.buffer.append(label)
            if self._task_alive and "".join(self.buffer) == self.task:
                self._task_alive = False
                extra.append(
                    {
                        "type": "task_done",
                        "t": t_ms,
                        "buffer": "".join(self.buffer),
                        "errors": self.task_errors,
                    }
                )
        return correct, extra

    def _deadline_check(self, t_ms: float) -> list[dict]:
        if self._task_alive and t_ms >= self.task_timeout_ms:
            self._task_alive = False
            return [
                {
                    "type": "task_failed",
                    "t": t_ms,
                    "buffer": "".join(self.buffer),
                    "errors": self.task_errors,
                }
            ]
        return []


# --- asyncio front ends -----------------------------------------------------


def _now_ms() -> float:
    return time.monotonic() * 1000.0


def _encode(msg: dict) -> bytes:
    return (json.dumps(msg, separators=(",", ":")) + "\n").encode("utf-8")


async def _tcp_connection(
    reader: asyncio.StreamReader,
    writer: asyncio.StreamWriter,
    task_timeout_ms: float,
) -> None:
    session = Session(task_timeout_ms=task_timeout_ms)
    lock = asyncio.Lock()

    async def send(msgs: list[dict]) -> None:
        if not msgs:
            return
        async with lock:
            for m in msgs:
                writer.write(_encode(m))
            await writer.drain()

    async def ticker() -> None:
        while True:
            await asyncio.sleep(session.frame_interval_ms / 1000.0)
            await send(session.tick(_now_ms()))

    tick_task = asyncio.create_task(ticker())
    try:
        while True:
            line = await reader.readline()
            if not line:
                break
            text = line.strip()
            if not text:
                continue
            try:
                msg = json.loads(text)
            except json.JSONDecodeError as exc:
                await send([_error(f"invalid JSON: {exc.msg}")])
                continue
            await send(session.handle_message(msg, _now_ms()))
    except (ConnectionResetError, asyncio.IncompleteReadError):
        pass
    finally:
        tick_task.cancel()
        try:
            writer.close()
            await writer.wait_closed()
        except (ConnectionError, OSError):
            pass


def _build_web_app(task_timeout_ms: float, web_root: str | None):
    from aiohttp import WSMsgType, web

    async def ws_handler(request: "web.Request") -> "web.WebSocketResponse":
        ws = web.WebSocketResponse(heartbeat=30.0)
        await ws.prepare(request)
        session = Session(task_timeout_ms=task_timeout_ms)
        lock = asyncio.Lock()

        async def send(msgs: list[dict]) -> None:
            for m in msgs:
                async with lock:
                    await ws.send_str(json.dumps(m, separators=(",", ":")))

        async def ticker() -> None:
            while True:
                await asyncio.sleep(session.frame_interval_ms / 1000.0)
                await send(session.tick(_now_ms()))

        tick_task = asyncio.create_task(ticker())
        try:
            async for msg in ws:
                if msg.type != WSMsgType.TEXT:
                    continue
                for text in msg.data.splitlines():
                    text = text.strip()
                    if not text:
                        continue
                    try:
                        parsed = json.loads(text)
                    except json.JSONDecodeError as exc:
                        await send([_error(f"invalid JSON: {exc.msg}")])
                        continue
                    await send(session.handle_message(parsed, _now_ms()))
        except ConnectionResetError:
            pass
        finally:
            tick_task.cancel()
        return ws

    app = web.Application()
    app.router.add_get("/ws", ws_handler)

    if web_root is not None:
        root = Path(web_root).resolve()

        async def static_handler(request: "web.Request") -> "web.FileResponse":
            tail = request.match_info.get("tail", "") or "index.html"
            candidate = (root / tail).resolve()
            if root not in candidate.parents and candidate != root:
                raise web.HTTPForbidden()
            if not candidate.is_file():
                raise web.HTTPNotFound()
            return web.FileResponse(candidate)

        app.router.add_get("/", static_handler)
        app.router.add_get("/{tail:.+}", static_handler)
    return app


def serve(
    host: str = "127.0.0.1",
    port: int = DEFAULT_TCP_PORT,
    ws_port: int | None = None,
    web_root: str | None = None,
    task_timeout_s: float = 90.0,
) -> int:
    """Run the TCP service (and, if ws_port is given, the WebSocket/HTTP
    bridge) until interrupted. Prints one 'listening ...' line per endpoint
    with the actual bound port, so port 0 works for tests."""
    task_timeout_ms = task_timeout_s * 1000.0

    async def amain() -> None:
        async def on_connect(reader, writer):
            await _tcp_connection(reader, writer, task_timeout_ms)

        server = await asyncio.start_server(on_connect, host, port)
        bound = server.sockets[0].getsockname()[1]
        print(f"listening tcp://{host}:{bound}", flush=True)

        runner = None
        if ws_port is not None:
            from aiohttp import web

            app = _build_web_app(task_timeout_ms, web_root)
            runner = web.AppRunner(app)
            await runner.setup()
            site = web.TCPSite(runner, host, ws_port)
            await site.start()
            ws_bound = runner.addresses[0][1] if runner.addresses else ws_port
            print(f"listening ws://{host}:{ws_bound}/ws", flush=True)

        try:
            async with server:
                await server.serve_forever()
        finally:
            if runner is not None:
                await runner.cleanup()

    try:
        asyncio.run(amain())
    except KeyboardInterrupt:
        print("shutting down", file=sys.stderr)
    return 0
