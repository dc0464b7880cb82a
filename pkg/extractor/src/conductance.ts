/**
 * Block conductance on toy networks: an n-step Riemann sum of objective
 * gradients at each block output against that output's increments, along
 * the straight path from the baseline (zero by default) to the input.
 *
 * Block boundaries may group consecutive blocks into stages; a group's
 * attribution is taken at its last block's output, and its scalar score is
 * the mean absolute attribution over that output's entries.
 */

import {
  ToyNetwork,
  embeddingNorm,
  forward,
  objectiveGradients,
} from "./network.js";

export interface BlockGroup {
  /** 1-based inclusive range of network blocks forming one stage */
  first: number;
  last: number;
}

export interface ConductanceOptions {
  steps: number;
  baseline?: number[];
  groups?: BlockGroup[];
}

/** "1-2,3" style boundary spec; defaults to one group per block. */
export function parseGroups(spec: string | undefined, depth: number): BlockGroup[] {
  if (!spec) {
    return Array.from({ length: depth }, (_, i) => ({ first: i + 1, last: i + 1 }));
  }
  const groups = spec.split(",").map((part) => {
    const m = part.trim().match(/^(\d+)(?:-(\d+))?$/);
    if (!m) throw new Error(`bad block group '${part}'`);
    const first = parseInt(m[1], 10);
    const last = m[2] ? parseInt(m[2], 10) : first;
    return { first, last };
  });
  let expected = 1;
  for (const g of groups) {
    if (g.first !== expected || g.last < g.first) {
      throw new Error(`block groups must partition 1..${depth} in order`);
    }
    expected = g.last + 1;
  }
  if (expected !== depth + 1) {
    throw new Error(`block groups must cover all ${depth} blocks`);
  }
  return groups;
}

/** Signed per-neuron conductance at every group output. */
export function groupConductances(
  net: ToyNetwork,
  x: number[],
  options: ConductanceOptions,
): number[][] {
  const { steps } = options;
  if (steps < 1) throw new Error("steps must be >= 1");
  const baseline = options.baseline ?? new Array(net.inputDim).fill(0);
  if (baseline.length !== net.inputDim) {
    throw new Error("baseline length does not match input dimension");
  }
  const groups = options.groups ??
    parseGroups(undefined, net.blocks.length);
  const cuts = groups.map((g) => g.last - 1); // block index carrying each group's output

  let previous = forward(net, baseline);
  const totals = cuts.map((c) => new Array(previous[c].length).fill(0));
  for (let k = 1; k <= steps; k++) {
    const point = x.map(
      (v, i) => baseline[i] + (k / steps) * (v - baseline[i]),
    );
    const activations = forward(net, point);
    const gradients = objectiveGradients(net, activations);
    cuts.forEach((c, gi) => {
      const target = totals[gi];
      const now = activations[c];
      const before = previous[c];
      const grad = gradients[c];
      for (let j = 0; j < target.length; j++) {
        target[j] += grad[j] * (now[j] - before[j]);
      }
    });
    previous = activations;
  }
  for (const total of totals) {
    if (total.some((v) => !Number.isFinite(v))) {
      throw new Error("non-finite attribution along the path");
    }
  }
  return totals;
}

/** Mean absolute attribution per group: the bundle's per-image row. */
export function conductanceRow(
  net: ToyNetwork,
  x: number[],
  options: ConductanceOptions,
): number[] {
  return groupConductances(net, x, options).map(
    (per) => per.reduce((acc, v) => acc + Math.abs(v), 0) / per.length,
  );
}

/** Objective change along the path, for completeness checks. */
export function objectiveSpan(
  net: ToyNetwork,
  x: number[],
  baseline?: number[],
): number {
  const base = baseline ?? new Array(net.inputDim).fill(0);
  const top = forward(net, x);
  const bottom = forward(net, base);
  return (
    embeddingNorm(top[top.length - 1]) - embeddingNorm(bottom[bottom.length - 1])
  );
}
