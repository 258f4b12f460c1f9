"""Real-time WebSocket bridge between a running simulation and the UI.

One externally-steered simulation per app. The tick loop is the sole
mutator of engine state; WebSocket ingress deposits steering commands
into a latest-wins mailbox that the engine reads once per tick, and
egress fans snapshots out through per-client queues that drop their
oldest frame rather than stall the loop.

Wire protocol (JSON text frames, `type` field):

* server -> client: ``sync`` (on connect: schema version, scenario name,
  dt, grid, goals, current tick), ``snapshot`` (per tick: states, plan
  polyline, belief, sparse heatmap, collision probabilities, forbidden
  cells, status flags), ``heartbeat`` (every 5 s), ``error``.
* client -> server: ``command`` {velocity: [vx, vy]} — persists until
  replaced; the server projects it onto the human action set. ``control``
  {action: pause | resume | step | reset, seed?} — ``step`` advances one
  tick while paused, which makes command logs exactly replayable.
"""

from __future__ import annotations

import asyncio
import json
import logging

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .engine import Engine, TickRecord
from .scenario import EXTERNAL, ScenarioConfig

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
HEARTBEAT_PERIOD = 5.0
CLIENT_QUEUE_SIZE = 256
HEATMAP_MASS = 1e-3


class BridgeSession:
    """Engine plus the mailbox/fan-out plumbing around it."""

    def __init__(self, config: ScenarioConfig, tick_hz: float | None = None):
        if config.human_control != EXTERNAL:
            raise ValueError("bridge requires a scenario with human_control='external'")
        self.config = config
        self.period = 1.0 / tick_hz if tick_hz else config.dt
        self.engine = Engine(config)
        self.command = np.zeros(2)
        self.paused = False
        self.clients: list[asyncio.Queue] = []
        # single-controller policy: the first connected client steers,
        # later connections observe
        self.controller: asyncio.Queue | None = None

    # -- engine control ----------------------------------------------------

    def reset(self, seed: int | None = None) -> None:
        cfg = self.config
        if seed is not None:
            from dataclasses import replace
            cfg = replace(cfg, seed=int(seed))
        self.config = cfg
        self.engine = Engine(cfg)
        self.command = np.zeros(2)

    def step_once(self) -> dict | None:
        if self.engine.done:
            return None
        rec = self.engine.tick(external_command=self.command)
        return self.snapshot(rec)

    def snapshot(self, rec: TickRecord) -> dict:
        return {
            "type": "snapshot",
            "schema": SCHEMA_VERSION,
            "tick": rec.t,
            "human": self.engine.x_h.tolist(),
            "robot": self.engine.x_r.tolist(),
            "human_action": rec.u_h.tolist(),
            "robot_action": rec.u_r.tolist(),
            "plan": rec.plan_states.tolist(),
            "belief": rec.belief_p,
            "p_coll": [float(p) for p in rec.p_coll],
            "forbidden": [[[int(a), int(b)] for a, b in cells] for cells in rec.forbidden],
            "heatmap": rec.heatmap,
            "feasible": bool(rec.feasible),
            "done": bool(self.engine.done),
        }

    def sync_frame(self) -> dict:
        g = self.config.grid
        return {
            "type": "sync",
            "schema": SCHEMA_VERSION,
            "scenario": self.config.name,
            "dt": self.config.dt,
            "tick": self.engine.t,
            "grid": {"origin": list(g.origin), "cell_size": g.cell_size,
                     "nx": g.nx, "ny": g.ny},
            "human_goal": list(self.config.human.goal),
            "robot_goal": list(self.config.robot.goal),
            "v_nominal": self.config.human.v_nominal,
            "human": self.engine.x_h.tolist(),
            "robot": self.engine.x_r.tolist(),
            "paused": self.paused,
        }

    # -- fan-out -----------------------------------------------------------

    def broadcast(self, frame: dict) -> None:
        text = json.dumps(frame, sort_keys=True)
        for q in self.clients:
            try:
                q.put_nowait(text)
            except asyncio.QueueFull:
                try:
                    q.get_nowait()  # drop the oldest frame, never stall
                except asyncio.QueueEmpty:
                    pass
                q.put_nowait(text)


def create_app(config: ScenarioConfig, tick_hz: float | None = None) -> FastAPI:
    session = BridgeSession(config, tick_hz)

    async def tick_loop():
        while True:
            if session.paused or session.engine.done:
                await asyncio.sleep(min(session.period, 0.05))
                continue
            frame = session.step_once()
            if frame is not None:
                session.broadcast(frame)
            await asyncio.sleep(session.period)

    async def heartbeat_loop():
        while True:
            await asyncio.sleep(HEARTBEAT_PERIOD)
            session.broadcast({"type": "heartbeat", "tick": session.engine.t})

    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        tasks = [asyncio.create_task(tick_loop()), asyncio.create_task(heartbeat_loop())]
        try:
            yield
        finally:
            for t in tasks:
                t.cancel()

    app = FastAPI(title="awareplan bridge", lifespan=lifespan)
    app.state.session = session

    async def handle_message(ws: WebSocket, raw: str, is_controller) -> None:
        try:
            msg = json.loads(raw)
            kind = msg["type"]
        except (json.JSONDecodeError, KeyError, TypeError):
            await ws.send_text(json.dumps(
                {"type": "error", "message": "malformed frame"}, sort_keys=True))
            return
        if kind in ("command", "control") and not is_controller():
            await ws.send_text(json.dumps(
                {"type": "error", "message": "read-only observer; another client controls"},
                sort_keys=True))
            return
        if kind == "command":
            try:
                v = msg["velocity"]
                session.command = np.array([float(v[0]), float(v[1])])
            except (KeyError, IndexError, TypeError, ValueError):
                await ws.send_text(json.dumps(
                    {"type": "error", "message": "bad command frame"}, sort_keys=True))
        elif kind == "control":
            action = msg.get("action")
            if action == "pause":
                session.paused = True
            elif action == "resume":
                session.paused = False
            elif action == "step":
                if session.paused:
                    frame = session.step_once()
                    if frame is not None:
                        session.broadcast(frame)
            elif action == "reset":
                session.reset(msg.get("seed"))
                session.broadcast(session.sync_frame())
            else:
                await ws.send_text(json.dumps(
                    {"type": "error", "message": f"unknown control {action!r}"},
                    sort_keys=True))
        else:
            await ws.send_text(json.dumps(
                {"type": "error", "message": f"unknown message type {kind!r}"},
                sort_keys=True))

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=CLIENT_QUEUE_SIZE)
        session.clients.append(queue)
        if session.controller is None:
            session.controller = queue
        await ws.send_text(json.dumps(session.sync_frame(), sort_keys=True))

        async def sender():
            while True:
                await ws.send_text(await queue.get())

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                await handle_message(ws, raw, lambda: session.controller is queue)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            session.clients.remove(queue)
            if session.controller is queue:
                session.controller = session.clients[0] if session.clients else None

    return app
