import { describe, expect, it } from "vitest";

import { sparklinePoints, sparklineSvg } from "../src/sparkline.js";

describe("sparklinePoints", () => {
  it("empty series yields no points", () => {
    expect(sparklinePoints([])).toBe("");
  });

  it("single value draws a midline", () => {
    expect(sparklinePoints([5], 100, 40, 2)).toBe("2,20 98,20");
  });

  it("flat series stays on the midline", () => {
    const points = sparklinePoints([3, 3, 3], 100, 40, 2);
    for (const pair of points.split(" ")) {
      expect(Number(pair.split(",")[1])).toBe(20);
    }
  });

  it("min maps to the bottom and max to the top", () => {
    const points = sparklinePoints([0, 10], 100, 40, 2).split(" ");
    expect(Number(points[0].split(",")[1])).toBe(38); // min -> bottom
    expect(Number(points[1].split(",")[1])).toBe(2); // max -> top
  });

  it("x advances monotonically", () => {
    const xs = sparklinePoints([1, 5, 2, 9], 120, 30)
      .split(" ")
      .map((p) => Number(p.split(",")[0]));
    for (let i = 1; i < xs.length; i += 1) {
      expect(xs[i]).toBeGreaterThan(xs[i - 1]);
    }
  });
});

describe("sparklineSvg", () => {
  it("emits an inline svg polyline", () => {
    const svg = sparklineSvg([1, 2, 3]);
    expect(svg).toContain("<svg");
    expect(svg).toContain("<polyline");
  });
});
