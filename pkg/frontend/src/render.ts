// Thin canvas adapter: draws the pure primitives. Kept free of logic so
// everything testable lives in scene.ts.

import { Primitive } from "./scene.js";

export function drawScene(ctx: CanvasRenderingContext2D, prims: Primitive[],
                          width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  for (const p of prims) {
    ctx.globalAlpha = ("alpha" in p && p.alpha !== undefined) ? p.alpha : 1.0;
    switch (p.kind) {
      case "rect":
        if (p.fill) {
          ctx.fillStyle = p.fill;
          ctx.fillRect(p.x, p.y, p.w, p.h);
        }
        if (p.stroke) {
          ctx.strokeStyle = p.stroke;
          ctx.strokeRect(p.x, p.y, p.w, p.h);
        }
        break;
      case "circle":
        ctx.beginPath();
        ctx.arc(p.x, p.y, p.r, 0, Math.PI * 2);
        if (p.fill) {
          ctx.fillStyle = p.fill;
          ctx.fill();
        }
        if (p.stroke) {
          ctx.strokeStyle = p.stroke;
          ctx.stroke();
        }
        break;
      case "polyline":
        ctx.beginPath();
        ctx.lineWidth = p.width ?? 1;
        ctx.strokeStyle = p.stroke;
        p.points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
        ctx.stroke();
        ctx.lineWidth = 1;
        break;
      case "text":
        ctx.fillStyle = p.fill;
        ctx.font = `${p.size ?? 12}px sans-serif`;
        ctx.fillText(p.text, p.x, p.y);
        break;
    }
  }
  ctx.globalAlpha = 1.0;
}
