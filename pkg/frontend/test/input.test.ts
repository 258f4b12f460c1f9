import { describe, expect, it } from "vitest";

import { inputToCommand } from "../src/input.js";

const V = 0.5;

describe("keyboard chords to velocity commands", () => {
  it("right arrow at walk speed", () => {
    expect(inputToCommand(new Set(["ArrowRight"]), 1, V)).toEqual([0.5, 0]);
  });

  it("up+right at run speed lands on the lattice corner", () => {
    // unnormalized diagonal: the server projection keeps it at [1, 1]
    expect(inputToCommand(new Set(["ArrowUp", "ArrowRight"]), 2, V)).toEqual([1, 1]);
  });

  it("no keys means stay", () => {
    expect(inputToCommand(new Set(), 1, V)).toEqual([0, 0]);
  });

  it("wasd aliases the arrows", () => {
    expect(inputToCommand(new Set(["a"]), 1, V)).toEqual([-0.5, 0]);
    expect(inputToCommand(new Set(["s", "d"]), 1, V)).toEqual([0.5, -0.5]);
  });

  it("opposing keys cancel", () => {
    expect(inputToCommand(new Set(["ArrowLeft", "ArrowRight"]), 2, V)).toEqual([0, 0]);
  });
});
