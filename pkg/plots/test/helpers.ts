const HEADER =
  "method,model,n,epsilon_target,replicate_index,seed,estimate," +
  "exact_reference,squared_error,cost_units";

export interface BenchRow {
  method: string;
  eps: number;
  replicate: number;
  squaredError: number;
  cost: number;
  n?: number;
}

/** Assemble a benchmark CSV in the harness's column layout. */
export function benchmarkCsv(rows: BenchRow[]): string {
  const lines = ["# synthetic fixture", HEADER];
  rows.forEach((r, i) => {
    const estimate = Math.sqrt(r.squaredError);
    lines.push(
      `${r.method},lgssm,${r.n ?? 10},${r.eps},${r.replicate},${1000 + i},` +
        `${estimate},0.0,${r.squaredError},${r.cost}`,
    );
  });
  return lines.join("\n") + "\n";
}

/** The default-shaped sweep: 6 targets x 10 replicates x 2 methods. */
export function defaultShapedCsv(halfMse = false): string {
  const targets = [0.4, 0.2, 0.1, 0.05, 0.025, 0.0125];
  const rows: BenchRow[] = [];
  for (const [k, eps] of targets.entries()) {
    const cost = 1000 * 4 ** k;
    const smcMse = eps * eps * 3.0;
    const mlMse = halfMse ? smcMse / 2 : smcMse * (1.2 - 0.1 * k);
    for (let rep = 0; rep < 10; rep++) {
      // replicate scatter around each group mean, mean-preserving in pairs
      const wiggle = 1.0 + 0.2 * (rep % 2 === 0 ? 1 : -1);
      rows.push({ method: "mlsmc", eps, replicate: rep, squaredError: mlMse * wiggle, cost });
      rows.push({ method: "smc", eps, replicate: rep, squaredError: smcMse * wiggle, cost });
    }
  }
  return benchmarkCsv(rows);
}

export interface Circle {
  series: string;
  cx: number;
  cy: number;
}

export function circlesOf(svg: string): Circle[] {
  const out: Circle[] = [];
  const re = /<circle cx="([\d.]+)" cy="([\d.]+)" r="\d+" fill="[^"]+" data-series="([^"]+)"\/>/g;
  for (const m of svg.matchAll(re)) {
    out.push({ cx: Number(m[1]), cy: Number(m[2]), series: m[3] });
  }
  return out;
}
