/** Strict parsers for the recall-evaluation CSV interchange files. */
import Papa from "papaparse";

/** Parse failure carrying the 1-based line number of the offending row. */
export class CsvError extends Error {
  constructor(message: string, readonly line: number) {
    super(`line ${line}: ${message}`);
    this.name = "CsvError";
  }
}

export interface CurvePoint {
  n: number;
  recall: number;
}

export interface Curve {
  iou: number;
  points: CurvePoint[];
}

export interface SummaryRow {
  aggregation: string;
  nImages: number;
  meanProposals: number;
  meanRuntimeS: number;
  recalls: number[];
}

export interface Summary {
  thresholds: number[];
  rows: SummaryRow[];
}

function tokenize(text: string): string[][] {
  const parsed = Papa.parse<string[]>(text, { skipEmptyLines: false });
  const rows = parsed.data;
  // a trailing newline yields one empty trailing record; drop it
  while (rows.length > 0) {
    const last = rows[rows.length - 1];
    if (last !== undefined && last.length === 1 && last[0] === "") rows.pop();
    else break;
  }
  return rows;
}

function parseFinite(raw: string | undefined, what: string, line: number): number {
  const value = Number(raw === undefined ? NaN : raw.trim());
  if (raw === undefined || raw.trim() === "" || !Number.isFinite(value)) {
    throw new CsvError(`${what} must be a finite number, got ${JSON.stringify(raw ?? "")}`, line);
  }
  return value;
}

function parseUnit(raw: string | undefined, what: string, line: number): number {
  const value = parseFinite(raw, what, line);
  if (value < 0 || value > 1) {
    throw new CsvError(`${what} must lie in [0, 1], got ${value}`, line);
  }
  return value;
}

/**
 * Parse `iou,n,recall` rows into curves grouped by IoU threshold.
 *
 * Groups keep first-appearance order; points sort by budget. Any malformed
 * header, non-numeric cell, out-of-range value, or duplicate (iou, n) pair
 * raises a CsvError naming the line.
 */
export function parseCurvesCsv(text: string): Curve[] {
  const rows = tokenize(text);
  const header = rows[0];
  if (header === undefined) {
    throw new CsvError("empty file, expected header iou,n,recall", 1);
  }
  if (header.map((c) => c.trim()).join(",") !== "iou,n,recall") {
    throw new CsvError(`expected header iou,n,recall, got ${JSON.stringify(header.join(","))}`, 1);
  }
  if (rows.length === 1) {
    throw new CsvError("no data rows after the header", 2);
  }
  const groups = new Map<number, { points: CurvePoint[]; seen: Set<number> }>();
  const order: number[] = [];
  for (let i = 1; i < rows.length; i += 1) {
    const line = i + 1;
    const row = rows[i];
    if (row === undefined || row.length !== 3) {
      throw new CsvError(`expected 3 fields, got ${row === undefined ? 0 : row.length}`, line);
    }
    const iou = parseUnit(row[0], "iou", line);
    const n = parseFinite(row[1], "n", line);
    if (!Number.isInteger(n) || n < 1) {
      throw new CsvError(`n must be a positive integer, got ${row[1]}`, line);
    }
    const recall = parseUnit(row[2], "recall", line);
    let group = groups.get(iou);
    if (group === undefined) {
      group = { points: [], seen: new Set() };
      groups.set(iou, group);
      order.push(iou);
    }
    if (group.seen.has(n)) {
      throw new CsvError(`duplicate point for iou ${iou} at n ${n}`, line);
    }
    group.seen.add(n);
    group.points.push({ n, recall });
  }
  return order.map((iou) => {
    const group = groups.get(iou)!;
    return { iou, points: [...group.points].sort((a, b) => a.n - b.n) };
  });
}

/**
 * Parse the two-row (macro/micro) summary table. The header names the recall
 * thresholds (`recall_<t>` columns); every row must fill every column.
 */
export function parseSummaryCsv(text: string): Summary {
  const rows = tokenize(text);
  const header = rows[0];
  if (header === undefined) {
    throw new CsvError("empty file, expected a summary header", 1);
  }
  const cells = header.map((c) => c.trim());
  const fixed = ["aggregation", "n_images", "mean_proposals", "mean_runtime_s"];
  if (cells.length < 5 || fixed.some((name, i) => cells[i] !== name)) {
    throw new CsvError(
      `expected header aggregation,n_images,mean_proposals,mean_runtime_s,recall_<t>..., got ${JSON.stringify(header.join(","))}`,
      1,
    );
  }
  const thresholds = cells.slice(4).map((name, i) => {
    if (!name.startsWith("recall_")) {
      throw new CsvError(`column ${i + 5} must be recall_<t>, got ${JSON.stringify(name)}`, 1);
    }
    const value = Number(name.slice("recall_".length));
    if (!Number.isFinite(value)) {
      throw new CsvError(`column ${i + 5} has a non-numeric threshold: ${JSON.stringify(name)}`, 1);
    }
    return value;
  });
  if (rows.length === 1) {
    throw new CsvError("no data rows after the header", 2);
  }
  const out: SummaryRow[] = [];
  for (let i = 1; i < rows.length; i += 1) {
    const line = i + 1;
    const row = rows[i];
    if (row === undefined || row.length !== cells.length) {
      throw new CsvError(
        `expected ${cells.length} fields, got ${row === undefined ? 0 : row.length}`,
        line,
      );
    }
    const aggregation = (row[0] ?? "").trim();
    if (aggregation === "") {
      throw new CsvError("aggregation name must not be empty", line);
    }
    const nImages = parseFinite(row[1], "n_images", line);
    if (!Number.isInteger(nImages) || nImages < 0) {
      throw new CsvError(`n_images must be a non-negative integer, got ${row[1]}`, line);
    }
    out.push({
      aggregation,
      nImages,
      meanProposals: parseFinite(row[2], "mean_proposals", line),
      meanRuntimeS: parseFinite(row[3], "mean_runtime_s", line),
      recalls: row.slice(4).map((cell, j) => parseUnit(cell, `recall_${thresholds[j]}`, line)),
    });
  }
  return { thresholds, rows: out };
}
