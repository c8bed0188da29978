/**
 * Reader for the numeric CSV files the experiment runner emits.
 *
 * Every file is a single header line followed by rows of numbers
 * printed with full precision. Non-finite values appear as the
 * lowercase tokens `nan`, `inf` and `-inf`.
 */

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export interface Table {
  /** Column names in file order. */
  columns: string[];
  /** Number of data rows. */
  rows: number;
  /** Column name to values, one Float64Array per column. */
  data: Record<string, Float64Array>;
}

function parseNumber(token: string, file: string, line: number): number {
  switch (token) {
    case "nan":
      return NaN;
    case "inf":
      return Infinity;
    case "-inf":
      return -Infinity;
  }
  const v = Number(token);
  if (token === "" || Number.isNaN(v)) {
    throw new SchemaError(`${file}:${line}: not a number: '${token}'`);
  }
  return v;
}

export function parseCsv(text: string, file: string): Table {
  const lines = text.split("\n");
  while (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  if (lines.length === 0) {
    throw new SchemaError(`${file}: empty file`);
  }
  const columns = (lines[0] as string).split(",");
  const rows = lines.length - 1;
  const cols = columns.map(() => new Float64Array(rows));
  for (let i = 0; i < rows; i++) {
    const cells = (lines[i + 1] as string).split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `${file}:${i + 2}: expected ${columns.length} cells, got ${cells.length}`,
      );
    }
    for (let j = 0; j < columns.length; j++) {
      (cols[j] as Float64Array)[i] = parseNumber(cells[j] as string, file, i + 2);
    }
  }
  const data: Record<string, Float64Array> = {};
  columns.forEach((name, j) => {
    data[name] = cols[j] as Float64Array;
  });
  return { columns, rows, data };
}

/**
 * Checks that a table has exactly the expected columns.
 *
 * The match is strict in both directions: missing columns make a figure
 * impossible, and unexpected ones mean the producer changed its format
 * under us. The error message lists both sides of the diff.
 */
export function requireColumns(table: Table, expected: string[], file: string): void {
  const have = new Set(table.columns);
  const want = new Set(expected);
  const missing = expected.filter((c) => !have.has(c)).sort();
  const unexpected = table.columns.filter((c) => !want.has(c)).sort();
  if (missing.length === 0 && unexpected.length === 0) return;
  const parts: string[] = [];
  if (missing.length > 0) parts.push(`missing [${missing.join(", ")}]`);
  if (unexpected.length > 0) parts.push(`unexpected [${unexpected.join(", ")}]`);
  throw new SchemaError(`${file}: column mismatch: ${parts.join(", ")}`);
}
