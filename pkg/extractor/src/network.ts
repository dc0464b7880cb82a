/**
 * Toy differentiable networks in the selection pipeline's file format.
 *
 * A network is a stack of affine blocks, optionally followed by tanh, with
 * composing dimensions. Forward evaluation and the analytic backward pass
 * are all that conductance extraction needs; there is no training here.
 */

import { readFileSync, writeFileSync } from "node:fs";

export const NETWORK_FORMAT = "toy-network@1";

export type BlockKind = "affine" | "affine+tanh";

export interface Block {
  kind: BlockKind;
  /** weight[row][col], rows = output width */
  weight: number[][];
  bias: number[];
}

export interface ToyNetwork {
  inputDim: number;
  blocks: Block[];
}

export function validateNetwork(net: ToyNetwork): void {
  if (net.blocks.length === 0) throw new Error("network has no blocks");
  let width = net.inputDim;
  net.blocks.forEach((block, i) => {
    if (block.kind !== "affine" && block.kind !== "affine+tanh") {
      throw new Error(`block ${i + 1}: unknown kind '${block.kind}'`);
    }
    if (block.weight.some((row) => row.length !== width)) {
      throw new Error(`block ${i + 1}: weight columns do not match input width ${width}`);
    }
    if (block.bias.length !== block.weight.length) {
      throw new Error(`block ${i + 1}: bias length does not match weight rows`);
    }
    width = block.weight.length;
  });
}

export function loadNetwork(path: string): ToyNetwork {
  const doc = JSON.parse(readFileSync(path, "utf-8"));
  if (doc.format !== NETWORK_FORMAT) {
    throw new Error(`${path}: unsupported format '${doc.format}'`);
  }
  const net: ToyNetwork = { inputDim: doc.input_dim, blocks: doc.blocks };
  validateNetwork(net);
  return net;
}

export function saveNetwork(net: ToyNetwork, path: string): void {
  validateNetwork(net);
  const blocks = net.blocks
    .map((b) => {
      const weight = b.weight
        .map((row) => "[" + row.map(formatNumber).join(", ") + "]")
        .join(", ");
      const bias = b.bias.map(formatNumber).join(", ");
      return (
        "    {\n" +
        `      "kind": ${JSON.stringify(b.kind)},\n` +
        `      "weight": [${weight}],\n` +
        `      "bias": [${bias}]\n` +
        "    }"
      );
    })
    .join(",\n");
  const text =
    "{\n" +
    `  "format": ${JSON.stringify(NETWORK_FORMAT)},\n` +
    `  "input_dim": ${net.inputDim},\n` +
    `  "blocks": [\n${blocks}\n  ]\n` +
    "}\n";
  writeFileSync(path, text, "utf-8");
}

/** JSON number text; JSON.stringify already emits shortest round-trip form. */
export function formatNumber(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`cannot serialize non-finite ${x}`);
  return JSON.stringify(x);
}

function affine(block: Block, x: number[]): number[] {
  return block.weight.map(
    (row, r) => row.reduce((acc, w, c) => acc + w * x[c], block.bias[r]),
  );
}

/** Activations after every block; the last one is the embedding. */
export function forward(net: ToyNetwork, x: number[]): number[][] {
  if (x.length !== net.inputDim) {
    throw new Error(`input has ${x.length} entries, network expects ${net.inputDim}`);
  }
  const activations: number[][] = [];
  let h = x;
  for (const block of net.blocks) {
    h = affine(block, h);
    if (block.kind === "affine+tanh") h = h.map(Math.tanh);
    activations.push(h);
  }
  return activations;
}

export function embeddingNorm(embedding: number[]): number {
  return Math.sqrt(embedding.reduce((acc, v) => acc + v * v, 0));
}

/**
 * Gradient of the embedding-norm objective w.r.t. every block output, in
 * one reverse sweep over the given activations (zero at the origin, where
 * the norm has no gradient).
 */
export function objectiveGradients(net: ToyNetwork, activations: number[][]): number[][] {
  const embedding = activations[activations.length - 1];
  const norm = embeddingNorm(embedding);
  let grad = embedding.map((v) => (norm === 0 ? 0 : v / norm));
  const grads: number[][] = new Array(net.blocks.length);
  grads[net.blocks.length - 1] = grad;
  for (let j = net.blocks.length - 1; j > 0; j--) {
    const block = net.blocks[j];
    let upstream = grad;
    if (block.kind === "affine+tanh") {
      const y = activations[j];
      upstream = upstream.map((g, r) => g * (1 - y[r] * y[r]));
    }
    const below = new Array(block.weight[0].length).fill(0);
    block.weight.forEach((row, r) => {
      row.forEach((w, c) => {
        below[c] += upstream[r] * w;
      });
    });
    grad = below;
    grads[j - 1] = grad;
  }
  return grads;
}
