/** Grouping means and the least-squares line; nothing fancier lives here. */

export function mean(values: number[]): number {
  if (values.length === 0) throw new Error("mean of an empty group");
  return values.reduce((a, b) => a + b, 0) / values.length;
}

export interface LineFit {
  slope: number;
  intercept: number;
}

/** Ordinary least squares of log(y) on log(x). */
export function fitLogLog(x: number[], y: number[]): LineFit {
  if (x.length !== y.length || x.length < 2) {
    throw new Error(`need >= 2 paired points, got ${x.length}/${y.length}`);
  }
  const lx = x.map((v) => {
    if (v <= 0) throw new Error(`log-log fit needs positive x, got ${v}`);
    return Math.log(v);
  });
  const ly = y.map((v) => {
    if (v <= 0) throw new Error(`log-log fit needs positive y, got ${v}`);
    return Math.log(v);
  });
  const mx = mean(lx);
  const my = mean(ly);
  let sxy = 0;
  let sxx = 0;
  for (let i = 0; i < lx.length; i++) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx === 0) throw new Error("degenerate fit: all x equal");
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx };
}
