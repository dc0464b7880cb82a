/**
 * The reference network and input set used for cross-component parity:
 * a small seeded affine+tanh stack written in the pipeline's network
 * format, plus matching input vectors. Fixed seeds make every exported
 * file byte-identical run to run.
 */

import { writeFileSync } from "node:fs";

import { Rng } from "./rng.js";
import { Block, ToyNetwork, formatNumber, saveNetwork } from "./network.js";

export const REFERENCE_SEED = "condsel-extractor-reference-v1";
export const REFERENCE_DIMS = [4, 6, 3];

export function referenceNetwork(seed: string = REFERENCE_SEED): ToyNetwork {
  const rng = new Rng(`${seed}/weights`);
  const blocks: Block[] = [];
  for (let i = 0; i < REFERENCE_DIMS.length - 1; i++) {
    const rows = REFERENCE_DIMS[i + 1];
    const cols = REFERENCE_DIMS[i];
    const scale = 0.5 / Math.sqrt(cols);
    const weight = Array.from({ length: rows }, () => rng.normals(cols, scale));
    const bias = rng.normals(rows, 0.1);
    blocks.push({
      kind: i < REFERENCE_DIMS.length - 2 ? "affine+tanh" : "affine",
      weight,
      bias,
    });
  }
  return { inputDim: REFERENCE_DIMS[0], blocks };
}

export function exportReferenceNet(path: string, seed: string = REFERENCE_SEED): void {
  saveNetwork(referenceNetwork(seed), path);
}

export function referenceInputs(
  count: number,
  dim: number,
  seed: string = REFERENCE_SEED,
): number[][] {
  const rng = new Rng(`${seed}/inputs`);
  return Array.from({ length: count }, () => rng.normals(dim, 0.5));
}

/** One JSON vector file per input, named for deterministic ordering. */
export function writeInputDir(dir: string, inputs: number[][]): string[] {
  const names: string[] = [];
  inputs.forEach((vector, i) => {
    const name = `input-${String(i).padStart(3, "0")}.json`;
    writeFileSync(
      `${dir}/${name}`,
      "[" + vector.map(formatNumber).join(", ") + "]\n",
      "utf-8",
    );
    names.push(name);
  });
  return names;
}

/** The same inputs in the shape the pipeline's extract-toy command reads. */
export function writeInputsFile(path: string, inputs: number[][]): void {
  const rows = inputs
    .map((v) => "    [" + v.map(formatNumber).join(", ") + "]")
    .join(",\n");
  writeFileSync(path, `{\n  "inputs": [\n${rows}\n  ]\n}\n`, "utf-8");
}
