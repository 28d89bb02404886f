/**
 * CSV reader for the harness outputs: '#'-prefixed metadata comment lines,
 * one header row, comma-separated UTF-8 body.
 */

export interface CsvTable {
  comments: string[];
  header: string[];
  rows: Record<string, string>[];
}

export function parseCsv(text: string): CsvTable {
  const comments: string[] = [];
  let header: string[] | null = null;
  const rows: Record<string, string>[] = [];
  for (const raw of text.split(/\r?\n/)) {
    const line = raw.trim();
    if (line.length === 0) continue;
    if (line.startsWith("#")) {
      comments.push(line.slice(1).trim());
      continue;
    }
    if (header === null) {
      header = line.split(",").map((h) => h.trim());
      continue;
    }
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new Error(
        `row has ${cells.length} cells but the header has ${header.length}: ${line}`,
      );
    }
    const row: Record<string, string> = {};
    header.forEach((name, i) => (row[name] = cells[i]));
    rows.push(row);
  }
  if (header === null) {
    throw new Error("empty CSV: no header row found");
  }
  return { comments, header, rows };
}

export function requireColumns(table: CsvTable, names: string[]): void {
  for (const name of names) {
    if (!table.header.includes(name)) {
      throw new Error(
        `missing column '${name}' (header: ${table.header.join(", ")})`,
      );
    }
  }
}

export function numeric(row: Record<string, string>, name: string): number {
  const value = Number(row[name]);
  if (!Number.isFinite(value)) {
    throw new Error(`non-numeric cell '${row[name]}' in column '${name}'`);
  }
  return value;
}
