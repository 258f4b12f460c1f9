// Wire types for the bridge WebSocket (schema version 1).
// Field names and shapes mirror the server's JSON frames exactly.

export const SCHEMA_VERSION = 1;

export type Vec2 = [number, number];

/** Sparse heatmap entry: [cell ix, cell iy, probability mass]. */
export type HeatCell = [number, number, number];

export interface GridInfo {
  origin: Vec2;
  cell_size: number;
  nx: number;
  ny: number;
}

export interface SyncFrame {
  type: "sync";
  schema: number;
  scenario: string;
  dt: number;
  tick: number;
  grid: GridInfo;
  human_goal: Vec2;
  robot_goal: Vec2;
  v_nominal: number;
  human: Vec2;
  robot: Vec2;
  paused: boolean;
}

export interface SnapshotFrame {
  type: "snapshot";
  schema: number;
  tick: number;
  human: Vec2;
  robot: Vec2;
  human_action: Vec2;
  robot_action: Vec2;
  plan: Vec2[];
  belief: number;
  p_coll: number[];
  forbidden: [number, number][][];
  heatmap: HeatCell[][];
  feasible: boolean;
  done: boolean;
}

export interface HeartbeatFrame {
  type: "heartbeat";
  tick: number;
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export type ServerFrame = SyncFrame | SnapshotFrame | HeartbeatFrame | ErrorFrame;

export interface CommandFrame {
  type: "command";
  velocity: Vec2;
  ts?: number;
}

export interface ControlFrame {
  type: "control";
  action: "pause" | "resume" | "step" | "reset";
  seed?: number;
}
