import { describe, expect, it } from "vitest";

import {
  IDENTITY_TRANSFORM,
  layoutGraph,
  MAX_SCALE,
  MIN_SCALE,
  pan,
  parseGraphText,
  toViewCoords,
  zoomAt,
} from "../src/graphText.js";
import { isIsolated, SANDBOX_ATTRIBUTES } from "../src/sandbox.js";

const TEXT = [
  "graph LR",
  "    A[Alpha]",
  "    B[Beta Thing]",
  "    C[Gamma]",
  "    A -->|x| B",
  "    B -->|y| C",
].join("\n");

describe("display parser", () => {
  it("reads nodes, edges and direction", () => {
    const view = parseGraphText(TEXT);
    expect(view.direction).toBe("LR");
    expect(view.nodes).toEqual([
      { id: "A", label: "Alpha" },
      { id: "B", label: "Beta Thing" },
      { id: "C", label: "Gamma" },
    ]);
    expect(view.edges).toEqual([
      { source: "A", target: "B", label: "x" },
      { source: "B", target: "C", label: "y" },
    ]);
  });

  it("skips lines it cannot render instead of crashing", () => {
    const view = parseGraphText("graph TD\n    A[a]\n   garbage line\n    A -->|x| A");
    expect(view.direction).toBe("TD");
    expect(view.nodes).toHaveLength(1);
    expect(view.edges).toHaveLength(1);
  });
});

describe("layered layout", () => {
  it("ranks nodes along the flow direction", () => {
    const positions = layoutGraph(parseGraphText(TEXT));
    const byId = new Map(positions.map((p) => [p.id, p]));
    expect(byId.get("A")!.layer).toBe(0);
    expect(byId.get("B")!.layer).toBe(1);
    expect(byId.get("C")!.layer).toBe(2);
    // LR: layers advance along x
    expect(byId.get("A")!.x).toBeLessThan(byId.get("B")!.x);
    expect(byId.get("B")!.x).toBeLessThan(byId.get("C")!.x);
  });

  it("TD layouts advance along y and survive cycles", () => {
    const cyclic = parseGraphText("graph TD\n    A[a]\n    B[b]\n    A -->|x| B\n    B -->|y| A");
    const positions = layoutGraph(cyclic);
    expect(positions).toHaveLength(2);
    const byId = new Map(positions.map((p) => [p.id, p]));
    expect(byId.get("B")!.y).toBeGreaterThan(byId.get("A")!.y);
  });
});

describe("zoom and pan", () => {
  it("zooms about the pivot and clamps scale", () => {
    let t = zoomAt(IDENTITY_TRANSFORM, 2, 100, 100);
    expect(t.scale).toBe(2);
    // the pivot stays fixed in view coordinates
    const pivotBefore = toViewCoords(IDENTITY_TRANSFORM, 100, 100);
    const pivotAfter = toViewCoords(t, 100, 100);
    expect(pivotAfter.x).toBeCloseTo(pivotBefore.x);
    expect(pivotAfter.y).toBeCloseTo(pivotBefore.y);

    for (let i = 0; i < 20; i += 1) t = zoomAt(t, 2, 0, 0);
    expect(t.scale).toBe(MAX_SCALE);
    for (let i = 0; i < 40; i += 1) t = zoomAt(t, 0.5, 0, 0);
    expect(t.scale).toBe(MIN_SCALE);
  });

  it("pans by deltas", () => {
    const t = pan(pan(IDENTITY_TRANSFORM, 10, -5), 5, 5);
    expect(t.offsetX).toBe(15);
    expect(t.offsetY).toBe(0);
  });
});

describe("simulation preview sandbox", () => {
  it("allows scripts but never same-origin access", () => {
    expect(isIsolated(SANDBOX_ATTRIBUTES)).toBe(true);
    expect(isIsolated("allow-scripts allow-same-origin")).toBe(false);
    expect(isIsolated("")).toBe(false);
  });
});
