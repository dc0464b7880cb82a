/**
 * Extraction jobs: run block conductance over an image directory and emit
 * a bundle file for the selection pipeline.
 *
 * Model identifiers use a scheme prefix. `toy:<path>` loads a network in
 * the pipeline's toy format and treats each image as a JSON input vector;
 * it is the only backend available in this build. Identifiers for real
 * encoder checkpoints fail fast with an unsupported-backend error rather
 * than silently producing wrong numbers.
 */

import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

import { Bundle, writeBundle } from "./bundle.js";
import { BlockGroup, conductanceRow, parseGroups } from "./conductance.js";
import { ToyNetwork, loadNetwork } from "./network.js";

export const EXTRACTOR_VERSION = "condsel-extractor/0.1.0";

export interface ExtractionJob {
  /** `toy:<network.json>`; other schemes are rejected */
  model: string;
  /** recorded pretraining tag, free-form */
  pretrained?: string;
  /** directory of image files (JSON vectors for the toy backend) */
  imageDir: string;
  /** how many images to take, in sorted filename order */
  sampleCount: number;
  /** Riemann steps */
  steps: number;
  /** block boundary spec like "1-2,3"; default one group per block */
  blocks?: string;
  /** what to do when one image fails: abort the job or skip with a log */
  onError?: "abort" | "skip";
  modelId?: string;
  taskId?: string;
  outPath: string;
}

export interface ExtractionResult {
  bundle: Bundle;
  skipped: string[];
}

function loadToyModel(model: string): ToyNetwork {
  if (!model.startsWith("toy:")) {
    throw new Error(
      `unsupported model backend '${model}': only toy:<network.json> is ` +
        "available in this build",
    );
  }
  return loadNetwork(model.slice("toy:".length));
}

function readInputVector(path: string, expected: number): number[] {
  const doc = JSON.parse(readFileSync(path, "utf-8"));
  const vector = Array.isArray(doc) ? doc : doc.input;
  if (!Array.isArray(vector) || vector.some((v) => typeof v !== "number")) {
    throw new Error(`${path}: not a numeric vector`);
  }
  if (vector.length !== expected) {
    throw new Error(`${path}: ${vector.length} entries, expected ${expected}`);
  }
  return vector as number[];
}

export function listImages(dir: string): string[] {
  return readdirSync(dir)
    .filter((name) => name.endsWith(".json"))
    .sort();
}

export function runExtraction(job: ExtractionJob): ExtractionResult {
  if (job.sampleCount < 1) throw new Error("sample count must be >= 1");
  const net = loadToyModel(job.model);
  const groups: BlockGroup[] = parseGroups(job.blocks, net.blocks.length);
  const files = listImages(job.imageDir);
  if (files.length < job.sampleCount) {
    throw new Error(
      `only ${files.length} images in ${job.imageDir}, need ${job.sampleCount}`,
    );
  }
  const onError = job.onError ?? "abort";
  const rows: number[][] = [];
  const skipped: string[] = [];
  for (const name of files) {
    if (rows.length === job.sampleCount) break;
    try {
      const x = readInputVector(join(job.imageDir, name), net.inputDim);
      rows.push(conductanceRow(net, x, { steps: job.steps, groups }));
    } catch (err) {
      if (onError === "abort") throw err;
      skipped.push(name);
      console.error(`skip ${name}: ${(err as Error).message}`);
    }
  }
  if (rows.length < job.sampleCount) {
    throw new Error(
      `collected only ${rows.length} of ${job.sampleCount} samples ` +
        `(${skipped.length} skipped)`,
    );
  }
  const bundle: Bundle = {
    modelId: job.modelId ?? job.model.replace(/^toy:/, ""),
    taskId: job.taskId ?? "unnamed-task",
    blockCount: groups.length,
    samples: rows,
    metadata: {
      steps: job.steps,
      baseline: "zero",
      extractor: EXTRACTOR_VERSION,
      model: job.model,
      pretrained: job.pretrained ?? "",
      blocks: groups.map((g) => `${g.first}-${g.last}`).join(","),
    },
  };
  writeBundle(bundle, job.outPath);
  return { bundle, skipped };
}
