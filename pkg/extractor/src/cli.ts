#!/usr/bin/env node
/**
 * condsel-extract: produce conductance bundles for the selection pipeline.
 *
 *   extract --model toy:net.json --images DIR --n 25 --steps 50 \
 *           [--blocks 1-2,3] [--pretrained TAG] [--model-id ID] \
 *           [--task-id ID] [--on-error abort|skip] --out FILE
 *   export-reference-net --out FILE
 *   gen-inputs --dim 4 --n 10 --out DIR [--seed LABEL]
 */

import { mkdirSync } from "node:fs";
import process from "node:process";

import { runExtraction } from "./extract.js";
import {
  REFERENCE_SEED,
  exportReferenceNet,
  referenceInputs,
  writeInputDir,
} from "./reference.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`bad arguments near '${key}'`);
    }
    flags.set(key.slice(2), value);
  }
  return flags;
}

function required(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new Error(`missing --${name}`);
  return value;
}

function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (!command) {
    console.error("usage: condsel-extract <extract|export-reference-net|gen-inputs> ...");
    return 2;
  }
  const flags = parseFlags(rest);
  if (command === "extract") {
    const result = runExtraction({
      model: required(flags, "model"),
      pretrained: flags.get("pretrained"),
      imageDir: required(flags, "images"),
      sampleCount: parseInt(flags.get("n") ?? "25", 10),
      steps: parseInt(flags.get("steps") ?? "50", 10),
      blocks: flags.get("blocks"),
      onError: (flags.get("on-error") as "abort" | "skip") ?? "abort",
      modelId: flags.get("model-id"),
      taskId: flags.get("task-id"),
      outPath: required(flags, "out"),
    });
    console.log(
      `wrote ${result.bundle.samples.length}x${result.bundle.blockCount} ` +
        `bundle to ${required(flags, "out")}` +
        (result.skipped.length ? ` (${result.skipped.length} skipped)` : ""),
    );
    return 0;
  }
  if (command === "export-reference-net") {
    exportReferenceNet(required(flags, "out"), flags.get("seed") ?? REFERENCE_SEED);
    console.log(`wrote reference network to ${flags.get("out")}`);
    return 0;
  }
  if (command === "gen-inputs") {
    const dim = parseInt(required(flags, "dim"), 10);
    const count = parseInt(flags.get("n") ?? "10", 10);
    const dir = required(flags, "out");
    mkdirSync(dir, { recursive: true });
    const names = writeInputDir(
      dir,
      referenceInputs(count, dim, flags.get("seed") ?? REFERENCE_SEED),
    );
    console.log(`wrote ${names.length} input vectors to ${dir}`);
    return 0;
  }
  console.error(`unknown command '${command}'`);
  return 2;
}

try {
  process.exit(main(process.argv.slice(2)));
} catch (err) {
  console.error(`error: ${(err as Error).message}`);
  process.exit(1);
}
