import json

import numpy as np
import pytest
from dataclasses import replace
from starlette.testclient import TestClient

from awareplan.bridge import create_app
from awareplan.scenario import EXTERNAL, PRESETS


def external_config(seed=0):
    base = PRESETS["paper-sec4"]
    return replace(base, human_control=EXTERNAL, seed=seed)


def make_client(seed=0, tick_hz=50.0):
    app = create_app(external_config(seed), tick_hz=tick_hz)
    return TestClient(app)


def recv_until(ws, kind, limit=300):
    for _ in range(limit):
        msg = json.loads(ws.receive_text())
        if msg["type"] == kind:
            return msg
    raise AssertionError(f"no {kind} frame within {limit} messages")


class TestBridge:
    def test_sync_then_snapshots(self):
        with make_client() as client:
            with client.websocket_connect("/ws") as ws:
                sync = json.loads(ws.receive_text())
                assert sync["type"] == "sync"
                assert sync["schema"] == 1
                assert sync["scenario"] == "paper-sec4"
                snap = recv_until(ws, "snapshot")
                assert snap["tick"] >= 0
                assert len(snap["human"]) == 2

    def test_no_command_means_stay(self):
        with make_client() as client:
            with client.websocket_connect("/ws") as ws:
                sync = json.loads(ws.receive_text())
                start = sync["human"]
                snap = recv_until(ws, "snapshot")
                assert snap["human_action"] == [0.0, 0.0]
                assert snap["human"] == start

    def test_command_round_trip_within_two_ticks(self):
        # command [0.9, 0.1] must appear as the projected [1.0, 0.0] * dt
        with make_client() as client:
            with client.websocket_connect("/ws") as ws:
                sync = json.loads(ws.receive_text())
                x0 = np.array(sync["human"])
                ws.send_text(json.dumps({"type": "command", "velocity": [0.9, 0.1]}))
                moved_at = None
                base_tick = None
                for _ in range(20):
                    snap = recv_until(ws, "snapshot")
                    if base_tick is None:
                        base_tick = snap["tick"]
                    if snap["human_action"] == [1.0, 0.0]:
                        moved_at = snap["tick"]
                        dx = np.array(snap["human"]) - x0
                        break
                assert moved_at is not None and moved_at - base_tick <= 2
                assert np.allclose(dx[:2] % 0.5, 0.0)  # moved in projected steps

    def test_malformed_frame_gets_error_and_session_survives(self):
        with make_client() as client:
            with client.websocket_connect("/ws") as ws:
                ws.receive_text()
                ws.send_text("this is not json")
                msg = recv_until(ws, "error")
                assert "malformed" in msg["message"]
                recv_until(ws, "snapshot")  # still streaming

    def test_reset_with_seed_and_replay_reproduces_stream(self):
        # paused stepping makes the command log exactly replayable
        commands = [[0.9, 0.1], [0.9, 0.1], [0.0, 0.6], [0.0, 0.0], [-0.4, 0.0]]

        def run_session(ws):
            ws.send_text(json.dumps({"type": "control", "action": "pause"}))
            ws.send_text(json.dumps({"type": "control", "action": "reset", "seed": 7}))
            recv_until(ws, "sync")
            frames = []
            for cmd in commands:
                ws.send_text(json.dumps({"type": "command", "velocity": cmd}))
                ws.send_text(json.dumps({"type": "control", "action": "step"}))
                frames.append(json.dumps(recv_until(ws, "snapshot"), sort_keys=True))
            return frames

        with make_client() as client:
            with client.websocket_connect("/ws") as ws:
                ws.receive_text()
                first = run_session(ws)
                second = run_session(ws)
        assert first == second

    def test_snapshot_ticks_gapless(self):
        with make_client() as client:
            with client.websocket_connect("/ws") as ws:
                ws.receive_text()
                ticks = []
                while len(ticks) < 6:
                    snap = recv_until(ws, "snapshot")
                    ticks.append(snap["tick"])
                assert ticks == list(range(ticks[0], ticks[0] + 6))

    def test_requires_external_mode(self):
        with pytest.raises(ValueError):
            create_app(PRESETS["paper-sec4"])

    def test_second_client_is_read_only_observer(self):
        with make_client() as client:
            with client.websocket_connect("/ws") as controller:
                controller.receive_text()
                with client.websocket_connect("/ws") as observer:
                    observer.receive_text()
                    observer.send_text(json.dumps(
                        {"type": "command", "velocity": [1.0, 0.0]}))
                    msg = recv_until(observer, "error")
                    assert "read-only" in msg["message"]
                    # the controller still steers
                    controller.send_text(json.dumps(
                        {"type": "command", "velocity": [0.9, 0.1]}))
                    for _ in range(10):
                        snap = recv_until(controller, "snapshot")
                        if snap["human_action"] == [1.0, 0.0]:
                            break
                    else:
                        raise AssertionError("controller command not applied")
