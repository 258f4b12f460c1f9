// Interactive client: connects to the bridge, renders each snapshot,
// and streams keyboard steering back. The UI performs no physics or
// inference of its own; every drawn quantity comes from a frame.

import { inputToCommand } from "./input.js";
import {
  ServerFrame,
  SnapshotFrame,
  SyncFrame,
  Vec2,
} from "./protocol.js";
import { drawScene } from "./render.js";
import { Camera, buildScene, cameraForGrid, waitingOverlay } from "./scene.js";

const params = new URLSearchParams(window.location.search);
const WS_URL = params.get("ws") ?? "ws://127.0.0.1:8700/ws";

const canvas = document.getElementById("arena") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("status")!;

interface ViewState {
  sync: SyncFrame | null;
  snapshot: SnapshotFrame | null;
  camera: Camera | null;
  beliefHistory: number[];
  keys: Set<string>;
  multiplier: 1 | 2;
  connected: boolean;
}

const view: ViewState = {
  sync: null, snapshot: null, camera: null, beliefHistory: [],
  keys: new Set(), multiplier: 1, connected: false,
};

let socket: WebSocket | null = null;
let lastSent: Vec2 = [0, 0];
let sendTimer: number | null = null;

function connect(): void {
  statusEl.textContent = `connecting to ${WS_URL}…`;
  socket = new WebSocket(WS_URL);
  socket.onopen = () => {
    view.connected = true;
    statusEl.textContent = "connected";
  };
  socket.onmessage = (ev: MessageEvent) => {
    let frame: ServerFrame;
    try {
      frame = JSON.parse(ev.data as string);
    } catch {
      console.error("bad frame", ev.data);
      return;
    }
    if (frame.type === "sync") {
      view.sync = frame;
      view.camera = cameraForGrid(frame.grid, canvas.width, canvas.height);
      view.beliefHistory = [];
      statusEl.textContent = `scenario ${frame.scenario} (dt=${frame.dt}s)`;
    } else if (frame.type === "snapshot") {
      view.snapshot = frame;
      view.beliefHistory.push(frame.belief);
      if (view.beliefHistory.length > 400) view.beliefHistory.shift();
    } else if (frame.type === "error") {
      console.warn("server error:", frame.message);
    }
    render();
  };
  socket.onclose = () => {
    view.connected = false;
    statusEl.textContent = "disconnected; retrying in 2 s";
    setTimeout(connect, 2000);
  };
  socket.onerror = () => socket?.close();
}

function render(): void {
  if (!view.camera || !view.sync) return;
  if (!view.snapshot) {
    drawScene(ctx, waitingOverlay(view.camera), canvas.width, canvas.height);
    return;
  }
  const prims = buildScene({
    snapshot: view.snapshot,
    grid: view.sync.grid,
    humanGoal: view.sync.human_goal,
    robotGoal: view.sync.robot_goal,
    beliefHistory: view.beliefHistory,
  }, view.camera);
  drawScene(ctx, prims, canvas.width, canvas.height);
}

function maybeSendCommand(): void {
  if (!socket || socket.readyState !== WebSocket.OPEN || !view.sync) return;
  const cmd = inputToCommand(view.keys, view.multiplier, view.sync.v_nominal);
  if (cmd[0] === lastSent[0] && cmd[1] === lastSent[1]) return;
  // coalesce: at most one command per tick period
  if (sendTimer !== null) return;
  sendTimer = window.setTimeout(() => {
    sendTimer = null;
    maybeSendCommand();
  }, view.sync.dt * 1000);
  socket.send(JSON.stringify({ type: "command", velocity: cmd }));
  lastSent = cmd;
}

window.addEventListener("keydown", (e) => {
  if (e.key === "Shift") view.multiplier = 2;
  else if (e.key === " ") {
    socket?.send(JSON.stringify({ type: "control", action: "pause" }));
    return;
  } else if (e.key === "r" || e.key === "R") {
    socket?.send(JSON.stringify({ type: "control", action: "reset", seed: 7 }));
    return;
  } else if (e.key === "Enter") {
    socket?.send(JSON.stringify({ type: "control", action: "resume" }));
    return;
  } else view.keys.add(e.key);
  maybeSendCommand();
});

window.addEventListener("keyup", (e) => {
  if (e.key === "Shift") view.multiplier = 1;
  else view.keys.delete(e.key);
  maybeSendCommand();
});

connect();
