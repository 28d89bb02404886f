/**
 * Deterministic log-log SVG charts: same input, byte-identical output.
 * Hand-built markup - no timestamps, no randomness, fixed number formatting.
 */

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  points: Point[];
}

export interface Annotation {
  text: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  /** straight guide line in data coordinates (drawn under the series) */
  guide?: { from: Point; to: Point; label: string };
  width?: number;
  height?: number;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARGIN = { top: 42, right: 24, bottom: 52, left: 72 };

function fmt(value: number): string {
  return value.toFixed(2);
}

function decadeTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let k = Math.ceil(lo); k <= Math.floor(hi); k++) ticks.push(k);
  if (ticks.length < 2) return [lo, hi];
  return ticks;
}

function tickLabel(exponent: number): string {
  return Number.isInteger(exponent) ? `1e${exponent}` : `1e${exponent.toFixed(1)}`;
}

export function renderLogLogChart(spec: ChartSpec): string {
  const width = spec.width ?? 640;
  const height = spec.height ?? 440;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const everyPoint = spec.series.flatMap((s) => s.points);
  if (spec.guide) everyPoint.push(spec.guide.from, spec.guide.to);
  if (everyPoint.length === 0) throw new Error("nothing to plot: no points");
  for (const p of everyPoint) {
    if (p.x <= 0 || p.y <= 0) {
      throw new Error(`log-log chart needs positive coordinates, got (${p.x}, ${p.y})`);
    }
  }
  const lx = everyPoint.map((p) => Math.log10(p.x));
  const ly = everyPoint.map((p) => Math.log10(p.y));
  const pad = 0.15;
  const xLo = Math.min(...lx) - pad;
  const xHi = Math.max(...lx) + pad;
  const yLo = Math.min(...ly) - pad;
  const yHi = Math.max(...ly) + pad;
  const sx = (v: number) =>
    MARGIN.left + ((Math.log10(v) - xLo) / (xHi - xLo || 1)) * plotW;
  const sy = (v: number) =>
    MARGIN.top + plotH - ((Math.log10(v) - yLo) / (yHi - yLo || 1)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="24" text-anchor="middle" font-size="15">${escapeXml(spec.title)}</text>`,
  );

  // frame and ticks
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#333" stroke-width="1"/>`,
  );
  for (const k of decadeTicks(xLo, xHi)) {
    const px = MARGIN.left + ((k - xLo) / (xHi - xLo || 1)) * plotW;
    parts.push(
      `<line x1="${fmt(px)}" y1="${MARGIN.top}" x2="${fmt(px)}" y2="${MARGIN.top + plotH}" ` +
        `stroke="#ddd" stroke-width="0.5"/>`,
    );
    parts.push(
      `<text x="${fmt(px)}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" ` +
        `font-size="11">${tickLabel(k)}</text>`,
    );
  }
  for (const k of decadeTicks(yLo, yHi)) {
    const py = MARGIN.top + plotH - ((k - yLo) / (yHi - yLo || 1)) * plotH;
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(py)}" x2="${MARGIN.left + plotW}" y2="${fmt(py)}" ` +
        `stroke="#ddd" stroke-width="0.5"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${fmt(py + 4)}" text-anchor="end" ` +
        `font-size="11">${tickLabel(k)}</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 14}" text-anchor="middle" ` +
      `font-size="13">${escapeXml(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="20" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="13" ` +
      `transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">${escapeXml(spec.yLabel)}</text>`,
  );

  if (spec.guide) {
    parts.push(
      `<line x1="${fmt(sx(spec.guide.from.x))}" y1="${fmt(sy(spec.guide.from.y))}" ` +
        `x2="${fmt(sx(spec.guide.to.x))}" y2="${fmt(sy(spec.guide.to.y))}" ` +
        `stroke="#888" stroke-width="1" stroke-dasharray="6 4"/>`,
    );
    parts.push(
      `<text x="${fmt(sx(spec.guide.to.x))}" y="${fmt(sy(spec.guide.to.y) - 8)}" ` +
        `text-anchor="end" font-size="12" fill="#555">${escapeXml(spec.guide.label)}</text>`,
    );
  }

  spec.series.forEach((series, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const sorted = [...series.points].sort((a, b) => a.x - b.x);
    if (sorted.length > 1) {
      const path = sorted
        .map((p) => `${fmt(sx(p.x))},${fmt(sy(p.y))}`)
        .join(" ");
      parts.push(
        `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.5" ` +
          `data-series="${escapeXml(series.label)}"/>`,
      );
    }
    for (const p of sorted) {
      parts.push(
        `<circle cx="${fmt(sx(p.x))}" cy="${fmt(sy(p.y))}" r="4" fill="${color}" ` +
          `data-series="${escapeXml(series.label)}"/>`,
      );
    }
    const ly0 = MARGIN.top + 16 + idx * 18;
    parts.push(
      `<rect x="${MARGIN.left + plotW - 150}" y="${ly0 - 10}" width="12" height="12" fill="${color}"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left + plotW - 132}" y="${ly0}" font-size="12">${escapeXml(series.label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
