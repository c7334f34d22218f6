#!/usr/bin/env node
/**
 * Exporter CLI.
 *
 *   gen-weights --out <file> [--seed n] [--layers n] [--vocab n]
 *               [--intermediate n]
 *   export --input <jsonl> --out <dir> --weights <file> [--max-docs n]
 *
 * Exit codes: 0 success, 1 usage error, 2 data/export error.
 */

import { ExportError } from "./format.js";
import { exportCorpus } from "./export.js";
import {
  DEFAULT_CONFIG,
  WeightsError,
  generateWeights,
  saveWeights,
} from "./weights.js";

interface Flags {
  [key: string]: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) throw new UsageError(`unexpected argument ${arg}`);
    const key = arg.slice(2);
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) {
      throw new UsageError(`flag --${key} needs a value`);
    }
    flags[key] = value;
    i++;
  }
  return flags;
}

class UsageError extends Error {}

function requireFlag(flags: Flags, name: string): string {
  const value = flags[name];
  if (value === undefined) throw new UsageError(`missing required flag --${name}`);
  return value;
}

function intFlag(flags: Flags, name: string, fallback: number): number {
  if (flags[name] === undefined) return fallback;
  const value = Number.parseInt(flags[name], 10);
  if (Number.isNaN(value) || value < 1) throw new UsageError(`--${name} must be a positive integer`);
  return value;
}

function cmdGenWeights(argv: string[]): number {
  const flags = parseFlags(argv);
  const out = requireFlag(flags, "out");
  const config = {
    ...DEFAULT_CONFIG,
    layers: intFlag(flags, "layers", DEFAULT_CONFIG.layers),
    vocab: intFlag(flags, "vocab", DEFAULT_CONFIG.vocab),
    intermediate: intFlag(flags, "intermediate", DEFAULT_CONFIG.intermediate),
  };
  const seed = intFlag(flags, "seed", 1);
  const bytes = saveWeights(generateWeights(config, seed), out);
  console.log(
    `wrote ${bytes} bytes: ${config.layers} layers, hidden ${config.hidden}, ` +
    `${config.heads} heads, vocab ${config.vocab}, seed ${seed} -> ${out}`
  );
  return 0;
}

function cmdExport(argv: string[]): number {
  const flags = parseFlags(argv);
  const report = exportCorpus({
    inputPath: requireFlag(flags, "input"),
    outDir: requireFlag(flags, "out"),
    weightsPath: requireFlag(flags, "weights"),
    maxDocs: flags["max-docs"] !== undefined ? intFlag(flags, "max-docs", 0) : undefined,
  });
  for (const doc of report.documents) {
    const dropped = doc.droppedSentences > 0
      ? `  (dropped ${doc.droppedSentences} past the position limit)`
      : "";
    console.log(`${doc.docId}: ${doc.sentences} sentences, ${doc.bytes} bytes${dropped}`);
  }
  console.log(`exported ${report.documents.length} bundles to ${report.outDir}`);
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case "gen-weights":
        return cmdGenWeights(rest);
      case "export":
        return cmdExport(rest);
      default:
        console.error(
          "usage: attnsum-export <gen-weights|export> [flags]\n" +
          "  gen-weights --out <file> [--seed n] [--layers n] [--vocab n] [--intermediate n]\n" +
          "  export --input <jsonl> --out <dir> --weights <file> [--max-docs n]"
        );
        return 1;
    }
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    if (err instanceof ExportError || err instanceof WeightsError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    if (err instanceof Error && "code" in err) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

process.exit(main(process.argv.slice(2)));
