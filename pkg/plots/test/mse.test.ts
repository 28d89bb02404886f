import { existsSync, readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { buildMseFigure } from "../src/mse.js";
import { benchmarkCsv, circlesOf, defaultShapedCsv } from "./helpers.js";

describe("buildMseFigure", () => {
  it("renders the default-shaped sweep as two curves of six points", () => {
    const { svg, series } = buildMseFigure(defaultShapedCsv());
    expect(series.map((s) => s.label).sort()).toEqual(["mlsmc", "smc"]);
    for (const s of series) expect(s.points).toHaveLength(6);
    const circles = circlesOf(svg);
    expect(circles.filter((c) => c.series === "mlsmc")).toHaveLength(6);
    expect(circles.filter((c) => c.series === "smc")).toHaveLength(6);
  });

  it("draws the half-MSE multilevel curve strictly below the baseline", () => {
    const { svg } = buildMseFigure(defaultShapedCsv(true));
    const circles = circlesOf(svg);
    const ml = circles.filter((c) => c.series === "mlsmc").sort((a, b) => a.cx - b.cx);
    const sm = circles.filter((c) => c.series === "smc").sort((a, b) => a.cx - b.cx);
    expect(ml).toHaveLength(6);
    expect(sm).toHaveLength(6);
    for (let i = 0; i < 6; i++) {
      expect(ml[i].cx).toBeCloseTo(sm[i].cx, 5); // matched cost
      expect(ml[i].cy).toBeGreaterThan(sm[i].cy); // lower MSE sits lower (larger y)
    }
  });

  it("handles a single-method CSV without crashing", () => {
    const rows = [0.4, 0.2, 0.1].flatMap((eps, k) => [
      { method: "smc", eps, replicate: 0, squaredError: eps * eps, cost: 10 ** (k + 2) },
    ]);
    const { series } = buildMseFigure(benchmarkCsv(rows));
    expect(series).toHaveLength(1);
    expect(series[0].points).toHaveLength(3);
  });

  it("splits curves by horizon when several are present", () => {
    const rows = [
      { method: "mlsmc", eps: 0.4, replicate: 0, squaredError: 0.1, cost: 100, n: 10 },
      { method: "mlsmc", eps: 0.4, replicate: 0, squaredError: 0.2, cost: 300, n: 25 },
    ];
    const { series } = buildMseFigure(benchmarkCsv(rows));
    expect(series.map((s) => s.label).sort()).toEqual(["mlsmc n=10", "mlsmc n=25"]);
  });

  it("is a pure function of the CSV", () => {
    const text = defaultShapedCsv();
    expect(buildMseFigure(text).svg).toBe(buildMseFigure(text).svg);
  });

  it("rejects empty or column-deficient input", () => {
    expect(() => buildMseFigure("a,b\n")).toThrow(/missing column/);
    const headerOnly = benchmarkCsv([]);
    expect(() => buildMseFigure(headerOnly)).toThrow(/empty CSV|no benchmark rows/);
  });

  it("renders the real harness output when the fixture is present", () => {
    const path = join(__dirname, "fixtures", "benchmark_lgssm.csv");
    if (!existsSync(path)) return; // fixture is produced by the primary harness
    const { svg, series } = buildMseFigure(readFileSync(path, "utf-8"));
    expect(series).toHaveLength(2);
    for (const s of series) expect(s.points).toHaveLength(6);
    expect(circlesOf(svg)).toHaveLength(12);
  });
});
