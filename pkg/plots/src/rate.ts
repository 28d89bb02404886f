/**
 * Rate-study figure: quantity against tolerance on log-log axes with the
 * fitted power law drawn through and its slope annotated.
 */

import { numeric, parseCsv, requireColumns } from "./csv.js";
import { fitLogLog } from "./stats.js";
import { renderLogLogChart } from "./svg.js";

export interface RateFigure {
  svg: string;
  slope: number;
}

const NEEDED = ["study", "level", "eps", "quantity", "replicates"];

export function buildRateFigure(csvText: string, expectedSlope?: number): RateFigure {
  const table = parseCsv(csvText);
  requireColumns(table, NEEDED);
  if (table.rows.length === 0) {
    throw new Error("empty CSV: no rate-study rows to plot");
  }
  const study = table.rows[0]["study"];
  const eps = table.rows.map((r) => numeric(r, "eps"));
  const quantity = table.rows.map((r) => numeric(r, "quantity"));
  const fit = fitLogLog(eps, quantity);

  const xs = [Math.min(...eps), Math.max(...eps)];
  const line = xs.map((x) => ({
    x,
    y: Math.exp(fit.intercept + fit.slope * Math.log(x)),
  }));
  const annotation =
    expectedSlope === undefined
      ? `slope=${fit.slope.toFixed(2)}`
      : `slope=${fit.slope.toFixed(2)} (expected ${expectedSlope.toFixed(2)})`;
  const svg = renderLogLogChart({
    title: `Rate study: ${study}`,
    xLabel: "tolerance",
    yLabel: "quantity",
    series: [{ label: study, points: eps.map((x, i) => ({ x, y: quantity[i] })) }],
    guide: { from: line[0], to: line[1], label: annotation },
  });
  return { svg, slope: fit.slope };
}
