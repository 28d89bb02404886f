/**
 * The benchmark figure: per-method mean squared error against mean cost, one
 * point per accuracy target, log-log axes.  Grouping means are the only
 * statistics computed here; everything else comes straight from the CSV.
 */

import { CsvTable, numeric, parseCsv, requireColumns } from "./csv.js";
import { mean } from "./stats.js";
import { renderLogLogChart, Series } from "./svg.js";

export interface MseFigure {
  svg: string;
  series: Series[];
}

const NEEDED = ["method", "n", "epsilon_target", "squared_error", "cost_units"];

export function buildMseFigure(csvText: string): MseFigure {
  const table = parseCsv(csvText);
  requireColumns(table, NEEDED);
  if (table.rows.length === 0) {
    throw new Error("empty CSV: no benchmark rows to plot");
  }
  const series = groupSeries(table);
  if (series.length === 0) {
    throw new Error("no plottable groups in the CSV");
  }
  const svg = renderLogLogChart({
    title: "Mean squared error against cost",
    xLabel: "cost (simulation + evaluation units)",
    yLabel: "mean squared error",
    series,
  });
  return { svg, series };
}

function groupSeries(table: CsvTable): Series[] {
  // one curve per (method, n); one point per accuracy target
  const horizons = new Set(table.rows.map((r) => r["n"]));
  const curveKey = (r: Record<string, string>) =>
    horizons.size > 1 ? `${r["method"]} n=${r["n"]}` : r["method"];
  const buckets = new Map<string, Map<string, { se: number[]; cost: number[] }>>();
  for (const row of table.rows) {
    const curve = curveKey(row);
    const eps = row["epsilon_target"];
    if (!buckets.has(curve)) buckets.set(curve, new Map());
    const byEps = buckets.get(curve)!;
    if (!byEps.has(eps)) byEps.set(eps, { se: [], cost: [] });
    const cell = byEps.get(eps)!;
    cell.se.push(numeric(row, "squared_error"));
    cell.cost.push(numeric(row, "cost_units"));
  }
  const series: Series[] = [];
  for (const [label, byEps] of [...buckets.entries()].sort()) {
    const points = [];
    for (const [eps, cell] of byEps.entries()) {
      if (cell.se.length === 0) {
        console.warn(`skipping empty group ${label} at epsilon ${eps}`);
        continue;
      }
      points.push({ x: mean(cell.cost), y: mean(cell.se) });
    }
    if (points.length === 0) {
      console.warn(`skipping series ${label}: no points`);
      continue;
    }
    series.push({ label, points });
  }
  return series;
}
