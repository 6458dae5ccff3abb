import asyncio
import json
import math

from pursuitkit.detector import DetectorConfig, GazeSample, PursuitDetector
from pursuitkit.service import (
    DEFAULT_TASK_TIMEOUT_MS,
    Session,
    _tcp_connection,
)
from pursuitkit.simulator import targets_at_ms
from pursuitkit.trajectories import dialplate_layout

DT_MS = 1000.0 / 60.0


def started_session(method="slope", targets=6, task=None, now=1000.0, **kwargs):
    session = Session(**kwargs)
    msg = {"type": "start", "targets": targets, "method": method}
    if task is not None:
        msg["task"] = task
    replies = session.handle_message(msg, now)
    assert replies[0]["type"] == "started"
    return session, replies[0]


def pursue(session, label, n_samples, t0_ms=0.0, now=1000.0):
    """Send ideal gaze along one target's path; returns all server messages."""
    traj = session.layout.by_label(label).trajectory
    messages = []
    for i in range(n_samples):
        t = t0_ms + i * DT_MS
        x, y = traj.position_at(t / 1000.0)
        messages.extend(
            session.handle_message({"type": "gaze", "t": t, "x": x, "y": y}, now)
        )
    return messages


def of_type(messages, kind):
    return [m for m in messages if m["type"] == kind]


class TestStart:
    def test_started_reply_describes_layout(self):
        session, started = started_session(targets=8, method="correlation", now=500.0)
        assert started["epoch"] == 500.0
        assert started["method"] == "correlation"
        assert started["display_radius"] == 20.0
        layout = started["layout"]
        assert len(layout) == 9
        cancel = layout[-1]
        assert cancel["label"] == "CANCEL"
        assert cancel["direction"] == -1
        assert cancel["radius"] == 80.0
        assert layout[0]["period"] == 2.5
        assert layout[0]["center"] == [960.0, 540.0]

    def test_bad_start_messages(self):
        session = Session()
        for msg in (
            {"type": "start", "targets": 7, "method": "slope"},
            {"type": "start", "targets": "6", "method": "slope"},
            {"type": "start", "targets": 6, "method": "euclid"},
            {"type": "start", "targets": 6, "method": "slope", "task": "314"},
            {"type": "start", "targets": 6, "method": "slope", "task": "31F0"},
            {"type": "start", "targets": 6, "method": "slope", "task": 3140},
        ):
            replies = session.handle_message(msg, 0.0)
            assert replies[0]["type"] == "error"
            assert not session.started

    def test_restart_resets_buffer(self):
        session, _ = started_session(task="3140")
        session.buffer.append("3")
        session.handle_message({"type": "start", "targets": 6, "method": "slope"}, 2000.0)
        assert session.buffer == []
        assert session.task is None


class TestGaze:
    def test_gaze_before_start_is_error(self):
        session = Session()
        replies = session.handle_message({"type": "gaze", "t": 0, "x": 1, "y": 2}, 0.0)
        assert replies[0]["type"] == "error"

    def test_malformed_gaze(self):
        session, _ = started_session()
        for msg in (
            {"type": "gaze", "t": 0, "x": "a", "y": 2},
            {"type": "gaze", "t": 0, "y": 2},
            {"type": "gaze", "t": math.nan, "x": 1, "y": 2},
            {"type": "gaze", "t": 0, "x": True, "y": 2},
        ):
            replies = session.handle_message(msg, 1000.0)
            assert replies[0]["type"] == "error"
        assert session.started

    def test_out_of_order_gaze_keeps_session(self):
        session, _ = started_session()
        session.handle_message({"type": "gaze", "t": 100.0, "x": 1, "y": 2}, 1000.0)
        replies = session.handle_message({"type": "gaze", "t": 100.0, "x": 1, "y": 2}, 1000.0)
        assert replies[0]["type"] == "error"
        replies = session.handle_message({"type": "gaze", "t": 120.0, "x": 1, "y": 2}, 1000.0)
        assert replies == []

    def test_unknown_type(self):
        session = Session()
        assert session.handle_message({"type": "warp"}, 0.0)[0]["type"] == "error"
        assert session.handle_message(["not", "an", "object"], 0.0)[0]["type"] == "error"

    def test_detection_matches_raw_detector(self):
        # the service is a shell: same samples, same events as the detector
        session, _ = started_session(method="slope", targets=6)
        messages = pursue(session, "3", 120)
        detected = of_type(messages, "detected")

        layout = dialplate_layout(6)
        det = PursuitDetector(DetectorConfig.slope_defaults(), layout.ids)
        traj = layout.by_label("3").trajectory
        raw_events = []
        for i in range(120):
            t = i * DT_MS
            x, y = traj.position_at(t / 1000.0)
            out = det.ingest(GazeSample(t, x, y), targets_at_ms(layout, t))
            raw_events.extend(out.events)
        assert [(d["id"], d["t"]) for d in detected] == [
            (e.target_id, e.t_ms) for e in raw_events
        ]
        assert session.buffer == ["3", "3"]


class TestEntryTask:
    def test_correct_entry(self):
        session, _ = started_session(method="slope", targets=6, task="3140")
        messages = pursue(session, "3", 60)
        detected = of_type(messages, "detected")
        assert len(detected) == 1
        assert detected[0]["label"] == "3"
        assert detected[0]["correct"] is True
        assert detected[0]["ambiguous"] is False
        assert session.buffer == ["3"]

    def test_wrong_entry_flagged(self):
        session, _ = started_session(method="slope", targets=6, task="3140")
        messages = pursue(session, "5", 60)
        detected = of_type(messages, "detected")
        assert detected[0]["correct"] is False
        assert session.buffer == ["5"]
        # wrong symbols are not errors by themselves; cancels are
        assert session.task_errors == 0

    def test_cancel_removes_last_and_counts_error(self):
        session, _ = started_session(method="slope", targets=6, task="3140")
        pursue(session, "3", 60)
        messages = pursue(session, "CANCEL", 120, t0_ms=60 * DT_MS)
        detected = of_type(messages, "detected")
        assert detected and detected[0]["label"] == "CANCEL"
        assert detected[0]["correct"] is False
        assert session.buffer == []
        assert session.task_errors == 1

    def test_cancel_on_empty_buffer(self):
        session, _ = started_session(method="slope", targets=6)
        messages = pursue(session, "CANCEL", 120)
        assert of_type(messages, "detected")
        assert session.buffer == []

    def test_task_done_after_four_symbols(self):
        # events land every 74 samples (44 to fire, 30 skipped), so four
        # selections fit in 300 samples with the fifth still pending
        session, _ = started_session(method="slope", targets=6, task="3333")
        messages = pursue(session, "3", 300)
        done = of_type(messages, "task_done")
        assert len(done) == 1
        assert done[0]["buffer"] == "3333"
        assert done[0]["errors"] == 0
        assert session.buffer == ["3", "3", "3", "3"]
        # no correctness flags once the task is over
        extra = pursue(session, "1", 120, t0_ms=300 * DT_MS)
        later = of_type(extra, "detected")
        assert later and "correct" not in later[0]

    def test_ambiguous_event_applies_lowest_id(self):
        session, _ = started_session(method="correlation", targets=20, task="0123")
        messages = pursue(session, "0", 60)
        detected = of_type(messages, "detected")
        assert [d["id"] for d in detected] == [0, 19]
        assert all(d["ambiguous"] for d in detected)
        assert "correct" in detected[0] and detected[0]["correct"] is True
        assert "correct" not in detected[1]
        assert session.buffer == ["0"]


class TestDeadline:
    def test_default_deadline_is_90s(self):
        session, _ = started_session(task="3140", now=1000.0)
        assert session.task_timeout_ms == DEFAULT_TASK_TIMEOUT_MS == 90_000.0
        before = session.tick(1000.0 + 89_999.9)
        assert of_type(before, "task_failed") == []
        at = session.tick(1000.0 + 90_000.0)
        failed = of_type(at, "task_failed")
        assert len(failed) == 1
        assert failed[0]["buffer"] == ""
        # only reported once
        assert of_type(session.tick(1000.0 + 91_000.0), "task_failed") == []

    def test_no_deadline_without_task(self):
        session, _ = started_session(now=0.0)
        assert of_type(session.tick(200_000.0), "task_failed") == []

    def test_gaze_message_can_trigger_deadline(self):
        session, _ = started_session(task="3140", now=0.0, task_timeout_ms=500.0)
        replies = session.handle_message(
            {"type": "gaze", "t": 600.0, "x": 1.0, "y": 2.0}, 600.0
        )
        assert of_type(replies, "task_failed")

    def test_done_before_deadline_wins(self):
        session, _ = started_session(method="slope", targets=6, task="3333", now=0.0)
        messages = pursue(session, "3", 400, now=5000.0)
        assert of_type(messages, "task_done")
        assert of_type(session.tick(200_000.0), "task_failed") == []


class TestTick:
    def test_tick_before_start_is_empty(self):
        assert Session().tick(0.0) == []

    def test_frame_positions_and_progress(self):
        session, _ = started_session(method="slope", targets=6, now=2000.0)
        frames = session.tick(2500.0)
        assert len(frames) == 1
        frame = frames[0]
        assert frame["type"] == "frame"
        assert frame["t"] == 500.0
        assert len(frame["targets"]) == 7
        expected = dict(
            (tid, (x, y)) for tid, x, y in targets_at_ms(session.layout, 500.0)
        )
        for entry in frame["targets"]:
            ex, ey = expected[entry["id"]]
            assert (entry["x"], entry["y"]) == (ex, ey)
            assert entry["progress"] == 0.0

    def test_progress_tracks_detector(self):
        session, _ = started_session(method="correlation", targets=6, now=0.0)
        pursue(session, "2", 40)
        frame = session.tick(700.0)[0]
        by_id = {t["id"]: t["progress"] for t in frame["targets"]}
        assert by_id[2] == min(1.0, 11 / 20)  # 40 samples: window 30 fills, 11 matches

    def test_event_sample_shows_full_progress_then_resets(self):
        session, _ = started_session(method="slope", targets=6, now=0.0)
        pursue(session, "1", 44)  # event on sample index 43
        frame = session.tick(800.0)[0]
        by_id = {t["id"]: t["progress"] for t in frame["targets"]}
        assert by_id[1] == 1.0
        pursue(session, "1", 1, t0_ms=44 * DT_MS)  # skipped sample clears it
        frame = session.tick(820.0)[0]
        assert {t["progress"] for t in frame["targets"]} == {0.0}


class TestStop:
    def test_stop_clears_session(self):
        session, _ = started_session()
        assert session.handle_message({"type": "stop"}, 0.0) == []
        assert not session.started
        assert session.tick(100.0) == []
        replies = session.handle_message({"type": "gaze", "t": 1, "x": 1, "y": 1}, 0.0)
        assert replies[0]["type"] == "error"


class TestTcpServer:
    def test_round_trip_over_socket(self):
        async def inner():
            async def on_connect(reader, writer):
                await _tcp_connection(reader, writer, 90_000.0)

            server = await asyncio.start_server(on_connect, "127.0.0.1", 0)
            port = server.sockets[0].getsockname()[1]
            reader, writer = await asyncio.open_connection("127.0.0.1", port)

            async def send(obj):
                writer.write((json.dumps(obj) + "\n").encode())
                await writer.drain()

            async def recv():
                line = await asyncio.wait_for(reader.readline(), timeout=5.0)
                return json.loads(line)

            await send({"type": "start", "targets": 6, "method": "slope", "task": "3140"})
            started = await recv()
            assert started["type"] == "started"
            assert len(started["layout"]) == 7

            traj_entry = started["layout"][3]
            assert traj_entry["label"] == "3"

            # walk target 3's path; positions computed from the layout message
            import math as m

            detected = None
            for i in range(120):
                t = i * DT_MS
                angle = traj_entry["phase"] + traj_entry["direction"] * (
                    2 * m.pi / traj_entry["period"]
                ) * (t / 1000.0)
                x = traj_entry["center"][0] + traj_entry["radius"] * m.cos(angle)
                y = traj_entry["center"][1] + traj_entry["radius"] * m.sin(angle)
                await send({"type": "gaze", "t": t, "x": x, "y": y})
                # drain whatever the server has queued without blocking long
                while detected is None:
                    try:
                        msg = await asyncio.wait_for(reader.readline(), timeout=0.002)
                    except asyncio.TimeoutError:
                        break
                    msg = json.loads(msg)
                    if msg["type"] == "detected":
                        detected = msg
                if detected:
                    break
            assert detected is not None
            assert detected["label"] == "3"
            assert detected["correct"] is True

            writer.write(b"this is not json\n")
            await writer.drain()
            while True:
                msg = await recv()
                if msg["type"] == "error":
                    break

            writer.close()
            await writer.wait_closed()
            server.close()
            await server.wait_closed()

        asyncio.run(inner())

    def test_frames_flow_without_gaze(self):
        async def inner():
            async def on_connect(reader, writer):
                await _tcp_connection(reader, writer, 90_000.0)

            server = await asyncio.start_server(on_connect, "127.0.0.1", 0)
            port = server.sockets[0].getsockname()[1]
            reader, writer = await asyncio.open_connection("127.0.0.1", port)
            writer.write(
                (json.dumps({"type": "start", "targets": 8, "method": "correlation"}) + "\n").encode()
            )
            await writer.drain()
            kinds = []
            for _ in range(4):
                line = await asyncio.wait_for(reader.readline(), timeout=5.0)
                kinds.append(json.loads(line)["type"])
            assert kinds[0] == "started"
            assert set(kinds[1:]) == {"frame"}
            writer.close()
            await writer.wait_closed()
            server.close()
            await server.wait_closed()

        asyncio.run(inner())


class TestWebSocketBridge:
    def test_ws_round_trip(self):
        import aiohttp
        from pursuitkit.service import _build_web_app

        async def inner():
            from aiohttp import web

            app = _build_web_app(90_000.0, None)
            runner = web.AppRunner(app)
            await runner.setup()
            site = web.TCPSite(runner, "127.0.0.1", 0)
            await site.start()
            port = runner.addresses[0][1]

            async with aiohttp.ClientSession() as client:
                async with client.ws_connect(f"http://127.0.0.1:{port}/ws") as ws:
                    await ws.send_str(
                        json.dumps({"type": "start", "targets": 6, "method": "slope"})
                    )
                    started = json.loads((await ws.receive(timeout=5.0)).data)
                    assert started["type"] == "started"
                    assert [e["label"] for e in started["layout"]] == [
                        "0", "1", "2", "3", "4", "5", "CANCEL",
                    ]
                    # frames arrive unprompted
                    kinds = set()
                    for _ in range(3):
                        msg = json.loads((await ws.receive(timeout=5.0)).data)
                        kinds.add(msg["type"])
                    assert kinds == {"frame"}
                    await ws.send_str("garbage")
                    while True:
                        msg = json.loads((await ws.receive(timeout=5.0)).data)
                        if msg["type"] == "error":
                            break
            await runner.cleanup()

        asyncio.run(inner())

    def test_static_files_served_with_traversal_guard(self):
        import aiohttp
        from pursuitkit.service import _build_web_app

        async def inner(tmp):
            from aiohttp import web

            (tmp / "index.html").write_text("<h1>demo</h1>")
            app = _build_web_app(90_000.0, str(tmp))
            runner = web.AppRunner(app)
            await runner.setup()
            site = web.TCPSite(runner, "127.0.0.1", 0)
            await site.start()
            port = runner.addresses[0][1]
            base = f"http://127.0.0.1:{port}"
            async with aiohttp.ClientSession() as client:
                async with client.get(base + "/") as resp:
                    assert resp.status == 200
                    assert "demo" in await resp.text()
                async with client.get(base + "/nope.js") as resp:
                    assert resp.status == 404
                async with client.get(base + "/../service.py") as resp:
                    assert resp.status in (403, 404)
            await runner.cleanup()

        import tempfile
        from pathlib import Path

        with tempfile.TemporaryDirectory() as d:
            asyncio.run(inner(Path(d)))


class TestServeCommand:
    def test_serve_subprocess_announces_ports(self):
        import socket
        import subprocess
        import sys
        import time as _time

        proc = subprocess.Popen(
            [
                sys.executable, "-m", "pursuitkit.cli", "serve",
                "--port", "0", "--task-timeout-s", "2.5",
            ],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        try:
            line = proc.stdout.readline().strip()
            assert line.startswith("listening tcp://127.0.0.1:")
            port = int(line.rsplit(":", 1)[1])
            with socket.create_connection(("127.0.0.1", port), timeout=5.0) as sock:
                sock.sendall(
                    (json.dumps({"type": "start", "targets": 6, "method": "slope"}) + "\n").encode()
                )
                sock.settimeout(5.0)
                buf = b""
                while b"\n" not in buf:
                    buf += sock.recv(4096)
                started = json.loads(buf.split(b"\n", 1)[0])
                assert started["type"] == "started"
        finally:
            proc.terminate()
            try:
                proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
