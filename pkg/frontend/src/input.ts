// Keyboard chords to steering commands. Arrow keys or WASD give the
// eight directions; holding Shift doubles the speed (walk vs run,
// matching the two speed rings of the human action lattice). The
// server projects whatever we send onto the action set, so diagonals
// are sent unnormalized and land on the lattice corners.

import { Vec2 } from "./protocol.js";

const LEFT = new Set(["ArrowLeft", "a", "A"]);
const RIGHT = new Set(["ArrowRight", "d", "D"]);
const UP = new Set(["ArrowUp", "w", "W"]);
const DOWN = new Set(["ArrowDown", "s", "S"]);

function axis(keys: Set<string>, neg: Set<string>, pos: Set<string>): number {
  let v = 0;
  for (const k of keys) {
    if (neg.has(k)) v -= 1;
    if (pos.has(k)) v += 1;
  }
  return Math.max(-1, Math.min(1, v));
}

export function inputToCommand(
  keys: Set<string>,
  speedMultiplier: 1 | 2,
  vNominal: number,
): Vec2 {
  const dx = axis(keys, LEFT, RIGHT);
  const dy = axis(keys, DOWN, UP);
  return [dx * vNominal * speedMultiplier, dy * vNominal * speedMultiplier];
}
