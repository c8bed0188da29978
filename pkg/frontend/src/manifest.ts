import { readFileSync } from "node:fs";
import { join } from "node:path";
import { SchemaError } from "./csv.js";

/** Run manifest written next to every experiment's CSV outputs. */
export interface Manifest {
  config: Record<string, unknown>;
  config_hash: string;
  seed: number;
  outputs: Record<string, string>;
  summary: Record<string, unknown>;
  versions: Record<string, string>;
  wall_time_s: number;
}

// Python's json module emits bare Infinity/NaN tokens for non-finite
// floats; JSON.parse rejects them, so quote the tokens before parsing.
function parseLoose(text: string): unknown {
  try {
    return JSON.parse(text);
  } catch {
    const patched = text.replace(/([:[,]\s*)(-?Infinity|NaN)\b/g, '$1"$2"');
    return JSON.parse(patched);
  }
}

export function loadManifest(dir: string): Manifest {
  const path = join(dir, "manifest.json");
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new SchemaError(`${path}: manifest not found`);
  }
  let raw: unknown;
  try {
    raw = parseLoose(text);
  } catch {
    throw new SchemaError(`${path}: invalid JSON`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new SchemaError(`${path}: manifest must be a JSON object`);
  }
  const m = raw as Record<string, unknown>;
  for (const key of ["config", "config_hash", "outputs", "summary"]) {
    if (!(key in m)) {
      throw new SchemaError(`${path}: manifest missing key '${key}'`);
    }
  }
  if (typeof m.config_hash !== "string") {
    throw new SchemaError(`${path}: config_hash must be a string`);
  }
  return m as unknown as Manifest;
}

/** The experiment kind recorded in the manifest, or null if absent. */
export function manifestKind(m: Manifest): string | null {
  const kind = m.config["experiment"];
  return typeof kind === "string" ? kind : null;
}
