import { existsSync, readdirSync, statSync } from "node:fs";
import { basename, join } from "node:path";
import { SchemaError } from "./csv.js";
import { Manifest, loadManifest, manifestKind } from "./manifest.js";

export interface RunDir {
  dir: string;
  /** Output stem: the subdirectory name, or the kind for a single run. */
  name: string;
  kind: string | null;
  manifest: Manifest;
}

/**
 * Finds experiment runs under a path: either the directory itself
 * (single run) or its immediate subdirectories (batch layout).
 */
export function discoverRuns(root: string): RunDir[] {
  let isDir = false;
  try {
    isDir = statSync(root).isDirectory();
  } catch {
    /* fall through */
  }
  if (!isDir) {
    throw new SchemaError(`${root}: not a directory`);
  }
  if (existsSync(join(root, "manifest.json"))) {
    const manifest = loadManifest(root);
    const kind = manifestKind(manifest);
    return [{ dir: root, name: kind ?? basename(root), kind, manifest }];
  }
  const runs: RunDir[] = [];
  for (const entry of readdirSync(root).sort()) {
    const dir = join(root, entry);
    if (!statSync(dir).isDirectory()) continue;
    if (!existsSync(join(dir, "manifest.json"))) continue;
    const manifest = loadManifest(dir);
    runs.push({ dir, name: entry, kind: manifestKind(manifest), manifest });
  }
  if (runs.length === 0) {
    throw new SchemaError(`${root}: no manifest.json here or in subdirectories`);
  }
  return runs;
}
