/**
 * Conductance bundle files: the interchange schema the selection pipeline
 * loads. Writing is canonical (fixed key order, one sample row per line)
 * and atomic (temp file + rename), so partially written bundles are never
 * visible to consumers.
 */

import { mkdtempSync, renameSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";

import { formatNumber } from "./network.js";

export const BUNDLE_FORMAT = "conductance-bundle@1";
export const OBJECTIVE_TAG = "l2norm";

export interface BundleMetadata {
  steps: number;
  baseline: "zero" | "explicit";
  extractor: string;
  [key: string]: unknown;
}

export interface Bundle {
  modelId: string;
  taskId: string;
  blockCount: number;
  samples: number[][];
  metadata: BundleMetadata;
}

export function validateBundle(bundle: Bundle): void {
  if (bundle.samples.length < 1) throw new Error("bundle needs at least one sample");
  bundle.samples.forEach((row, r) => {
    if (row.length !== bundle.blockCount) {
      throw new Error(
        `sample ${r} has ${row.length} entries, expected ${bundle.blockCount}`,
      );
    }
    row.forEach((v, c) => {
      if (!Number.isFinite(v)) throw new Error(`non-finite value at sample ${r}, block ${c}`);
      if (v < 0) throw new Error(`negative value at sample ${r}, block ${c}`);
    });
  });
}

export function bundleText(bundle: Bundle): string {
  validateBundle(bundle);
  const metadataKeys = Object.keys(bundle.metadata).sort();
  const metadata =
    "{" +
    metadataKeys
      .map((k) => `${JSON.stringify(k)}: ${JSON.stringify(bundle.metadata[k])}`)
      .join(", ") +
    "}";
  const rows = bundle.samples
    .map((row) => "    [" + row.map(formatNumber).join(", ") + "]")
    .join(",\n");
  return (
    "{\n" +
    `  "format": ${JSON.stringify(BUNDLE_FORMAT)},\n` +
    `  "model_id": ${JSON.stringify(bundle.modelId)},\n` +
    `  "task_id": ${JSON.stringify(bundle.taskId)},\n` +
    `  "block_count": ${bundle.blockCount},\n` +
    `  "objective": ${JSON.stringify(OBJECTIVE_TAG)},\n` +
    `  "metadata": ${metadata},\n` +
    `  "samples": [\n${rows}\n  ]\n` +
    "}\n"
  );
}

/** Write through a temp file in the destination directory, then rename. */
export function writeBundle(bundle: Bundle, path: string): void {
  const text = bundleText(bundle);
  const dir = mkdtempSync(join(dirname(path) || ".", ".bundle-"));
  const temp = join(dir, "bundle.json");
  try {
    writeFileSync(temp, text, "utf-8");
    renameSync(temp, path);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
