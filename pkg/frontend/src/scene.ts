// Pure scene construction: one snapshot in, a flat list of draw
// primitives out. No canvas, no network, no state — everything the
// renderer draws traces back to a snapshot field, which is what the
// component tests assert on.

import { GridInfo, SnapshotFrame, Vec2 } from "./protocol.js";

export interface Camera {
  /** pixels per meter */
  scale: number;
  /** canvas size in pixels */
  width: number;
  height: number;
  /** world point mapped to the canvas center */
  center: Vec2;
}

export type Primitive =
  | { kind: "rect"; tag: string; x: number; y: number; w: number; h: number;
      fill?: string; stroke?: string; alpha?: number }
  | { kind: "circle"; tag: string; x: number; y: number; r: number;
      fill?: string; stroke?: string }
  | { kind: "polyline"; tag: string; points: [number, number][];
      stroke: string; width?: number }
  | { kind: "text"; tag: string; x: number; y: number; text: string;
      fill: string; size?: number };

export function cameraForGrid(grid: GridInfo, width: number, height: number): Camera {
  const extentX = grid.nx * grid.cell_size;
  const extentY = grid.ny * grid.cell_size;
  const scale = Math.min(width / extentX, height / extentY) * 0.95;
  const center: Vec2 = [
    grid.origin[0] + extentX / 2,
    grid.origin[1] + extentY / 2,
  ];
  return { scale, width, height, center };
}

export function worldToScreen(p: Vec2, cam: Camera): [number, number] {
  // +y up in the world, +y down on the canvas
  return [
    cam.width / 2 + (p[0] - cam.center[0]) * cam.scale,
    cam.height / 2 - (p[1] - cam.center[1]) * cam.scale,
  ];
}

function cellRect(ix: number, iy: number, grid: GridInfo, cam: Camera) {
  const topLeft = worldToScreen(
    [grid.origin[0] + ix * grid.cell_size,
     grid.origin[1] + (iy + 1) * grid.cell_size], cam);
  const side = grid.cell_size * cam.scale;
  return { x: topLeft[0], y: topLeft[1], w: side, h: side };
}

/** Opacity of a heatmap cell: proportional to mass, visible floor, cap 0.9. */
export function heatAlpha(mass: number): number {
  return Math.min(0.9, Math.max(0.08, mass * 1.6));
}

export interface SceneInput {
  snapshot: SnapshotFrame;
  grid: GridInfo;
  humanGoal: Vec2;
  robotGoal: Vec2;
  beliefHistory: number[];
}

export function buildScene(input: SceneInput, cam: Camera): Primitive[] {
  const { snapshot, grid } = input;
  const prims: Primitive[] = [];

  // arena frame
  const corner = worldToScreen(
    [grid.origin[0], grid.origin[1] + grid.ny * grid.cell_size], cam);
  prims.push({
    kind: "rect", tag: "arena", x: corner[0], y: corner[1],
    w: grid.nx * grid.cell_size * cam.scale,
    h: grid.ny * grid.cell_size * cam.scale,
    stroke: "#444",
  });

  // predicted-occupancy heatmap, later steps drawn fainter
  const steps = snapshot.heatmap.length;
  snapshot.heatmap.forEach((cells, k) => {
    const fade = steps > 1 ? 1.0 - (0.5 * k) / (steps - 1) : 1.0;
    for (const [ix, iy, mass] of cells) {
      const r = cellRect(ix, iy, grid, cam);
      prims.push({
        kind: "rect", tag: "heat", ...r,
        fill: "#d12c2c", alpha: heatAlpha(mass) * fade,
      });
    }
  });

  // forbidden cells: union over steps, outlined once each
  const seen = new Set<string>();
  for (const cells of snapshot.forbidden) {
    for (const [ix, iy] of cells) {
      const key = `${ix},${iy}`;
      if (seen.has(key)) continue;
      seen.add(key);
      const r = cellRect(ix, iy, grid, cam);
      prims.push({ kind: "rect", tag: "forbidden", ...r, stroke: "#8a0303" });
    }
  }

  // planned robot path
  if (snapshot.plan.length > 1) {
    prims.push({
      kind: "polyline", tag: "plan",
      points: snapshot.plan.map((p) => worldToScreen(p, cam)),
      stroke: snapshot.feasible ? "#2c7fd1" : "#d17f2c", width: 2,
    });
  }

  // goals and agents
  const hg = worldToScreen(input.humanGoal, cam);
  const rg = worldToScreen(input.robotGoal, cam);
  prims.push({ kind: "circle", tag: "human-goal", x: hg[0], y: hg[1], r: 6, stroke: "#1a9641" });
  prims.push({ kind: "circle", tag: "robot-goal", x: rg[0], y: rg[1], r: 6, stroke: "#2c7fd1" });
  const h = worldToScreen(snapshot.human, cam);
  const r = worldToScreen(snapshot.robot, cam);
  prims.push({ kind: "circle", tag: "human", x: h[0], y: h[1], r: 7, fill: "#1a9641" });
  prims.push({ kind: "circle", tag: "robot", x: r[0], y: r[1], r: 7, fill: "#2c7fd1" });

  prims.push(...beliefGauge(snapshot.belief, cam));
  prims.push(...beliefSparkline(input.beliefHistory, cam));

  if (snapshot.done) {
    prims.push({
      kind: "text", tag: "done", x: cam.width / 2 - 40, y: 24,
      text: "episode done", fill: "#222", size: 16,
    });
  }
  return prims;
}

export const GAUGE = { x: 16, y: 16, w: 160, h: 14 };

/** Horizontal gauge for P(concerned); fill width is proportional. */
export function beliefGauge(belief: number, _cam: Camera): Primitive[] {
  const fillW = GAUGE.w * belief;
  return [
    { kind: "rect", tag: "gauge-bg", x: GAUGE.x, y: GAUGE.y, w: GAUGE.w, h: GAUGE.h,
      stroke: "#444", fill: "#eee" },
    { kind: "rect", tag: "gauge-fill", x: GAUGE.x, y: GAUGE.y, w: fillW, h: GAUGE.h,
      fill: "#b0399f" },
    { kind: "text", tag: "gauge-label", x: GAUGE.x + GAUGE.w + 8, y: GAUGE.y + GAUGE.h - 2,
      text: `P(concerned)=${belief.toFixed(2)}`, fill: "#333", size: 12 },
  ];
}

export const SPARK = { x: 16, y: 40, w: 160, h: 28 };

/** Time series of the belief so the operator can watch learning happen. */
export function beliefSparkline(history: number[], _cam: Camera): Primitive[] {
  if (history.length < 2) return [];
  const n = history.length;
  const points: [number, number][] = history.map((b, i) => [
    SPARK.x + (SPARK.w * i) / (n - 1),
    SPARK.y + SPARK.h * (1 - b),
  ]);
  return [
    { kind: "rect", tag: "spark-bg", x: SPARK.x, y: SPARK.y, w: SPARK.w, h: SPARK.h,
      stroke: "#ccc" },
    { kind: "polyline", tag: "spark", points, stroke: "#b0399f", width: 1.5 },
  ];
}

export function waitingOverlay(cam: Camera): Primitive[] {
  return [
    { kind: "text", tag: "waiting", x: cam.width / 2 - 60, y: cam.height / 2,
      text: "waiting for snapshots…", fill: "#666", size: 16 },
  ];
}
