import { readFileSync } from "node:fs";
import { join } from "node:path";
import { parseCsv, SchemaError, Table } from "../csv.js";
import { Manifest } from "../manifest.js";

export function loadTable(dir: string, file: string): Table {
  const path = join(dir, file);
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new SchemaError(`${path}: file not found`);
  }
  return parseCsv(text, path);
}

/**
 * Caption tying a figure back to the run that produced it: the config
 * hash plus the recorded digest of every CSV the figure was drawn from.
 */
export function hashCaption(m: Manifest, files: string[]): string {
  const parts = [`run ${m.config_hash.slice(0, 12)}`];
  for (const f of files) {
    const sha = m.outputs[f];
    parts.push(`${f} ${(sha ?? "unrecorded").slice(0, 12)}`);
  }
  return parts.join("  |  ");
}
