/**
 * ATSW encoder-weights file: the frozen transformer the exporter runs.
 *
 * Layout (integers little-endian uint32, tensors little-endian float32,
 * row-major):
 *
 *   "ATSW" | version=1 | vocab | hidden | heads | layers | intermediate
 *         | maxPositions
 *   tokEmb[vocab*hidden] | segEmb[2*hidden] | posEmb[maxPositions*hidden]
 *   embLnGamma[hidden] | embLnBeta[hidden]
 *   then per layer:
 *     wq,bq | wk,bk | wv,bv | wo,bo        (each w: hidden*hidden)
 *     attnLnGamma, attnLnBeta              (hidden)
 *     w1[hidden*intermediate], b1 | w2[intermediate*hidden], b2
 *     ffnLnGamma, ffnLnBeta                (hidden)
 *
 * `generateWeights` fills this structure from a seeded PRNG (gaussian
 * sigma 0.02, biases zero, layernorm gamma 1/beta 0). Pre-trained
 * weights converted into this layout behave identically to generated
 * ones as far as the exporter is concerned.
 */

import * as fs from "node:fs";
import { Rng } from "./rng.js";

export const WEIGHTS_MAGIC = "ATSW";
export const WEIGHTS_VERSION = 1;

export interface EncoderConfig {
  vocab: number;
  hidden: number;
  heads: number;
  layers: number;
  intermediate: number;
  maxPositions: number;
}

export const DEFAULT_CONFIG: EncoderConfig = {
  vocab: 8192,
  hidden: 768,
  heads: 12,
  layers: 12,
  intermediate: 3072,
  maxPositions: 512,
};

export interface LayerWeights {
  wq: Float32Array; bq: Float32Array;
  wk: Float32Array; bk: Float32Array;
  wv: Float32Array; bv: Float32Array;
  wo: Float32Array; bo: Float32Array;
  attnLnGamma: Float32Array; attnLnBeta: Float32Array;
  w1: Float32Array; b1: Float32Array;
  w2: Float32Array; b2: Float32Array;
  ffnLnGamma: Float32Array; ffnLnBeta: Float32Array;
}

export interface EncoderWeights {
  config: EncoderConfig;
  tokEmb: Float32Array;
  segEmb: Float32Array;
  posEmb: Float32Array;
  embLnGamma: Float32Array;
  embLnBeta: Float32Array;
  layers: LayerWeights[];
}

export class WeightsError extends Error {}

function layerTensorSpecs(c: EncoderConfig): Array<[keyof LayerWeights, number]> {
  const h = c.hidden;
  return [
    ["wq", h * h], ["bq", h],
    ["wk", h * h], ["bk", h],
    ["wv", h * h], ["bv", h],
    ["wo", h * h], ["bo", h],
    ["attnLnGamma", h], ["attnLnBeta", h],
    ["w1", h * c.intermediate], ["b1", c.intermediate],
    ["w2", c.intermediate * h], ["b2", h],
    ["ffnLnGamma", h], ["ffnLnBeta", h],
  ];
}

export function totalFloats(c: EncoderConfig): number {
  let total = c.vocab * c.hidden + 2 * c.hidden + c.maxPositions * c.hidden + 2 * c.hidden;
  for (const [, size] of layerTensorSpecs(c)) total += size * c.layers;
  return total;
}

export function generateWeights(config: EncoderConfig, seed: number): EncoderWeights {
  if (config.hidden % config.heads !== 0) {
    throw new WeightsError(`hidden ${config.hidden} not divisible by ${config.heads} heads`);
  }
  const rng = new Rng(seed);
  const sigma = 0.02;
  const ones = (n: number) => new Float32Array(n).fill(1);
  const zeros = (n: number) => new Float32Array(n);

  const weights: EncoderWeights = {
    config,
    tokEmb: rng.gaussArray(config.vocab * config.hidden, sigma),
    segEmb: rng.gaussArray(2 * config.hidden, sigma),
    posEmb: rng.gaussArray(config.maxPositions * config.hidden, sigma),
    embLnGamma: ones(config.hidden),
    embLnBeta: zeros(config.hidden),
    layers: [],
  };
  for (let l = 0; l < config.layers; l++) {
    const layer = {} as LayerWeights;
    for (const [name, size] of layerTensorSpecs(config)) {
      if (name.startsWith("b") || name.endsWith("Beta")) layer[name] = zeros(size);
      else if (name.endsWith("Gamma")) layer[name] = ones(size);
      else layer[name] = rng.gaussArray(size, sigma);
    }
    weights.layers.push(layer);
  }
  return weights;
}

export function saveWeights(weights: EncoderWeights, path: string): number {
  const c = weights.config;
  const header = Buffer.alloc(4 + 7 * 4);
  header.write(WEIGHTS_MAGIC, 0, "ascii");
  const fields = [WEIGHTS_VERSION, c.vocab, c.hidden, c.heads, c.layers, c.intermediate, c.maxPositions];
  fields.forEach((value, i) => header.writeUInt32LE(value, 4 + 4 * i));

  const parts: Buffer[] = [header];
  const push = (arr: Float32Array) =>
    parts.push(Buffer.from(arr.buffer, arr.byteOffset, arr.byteLength));
  push(weights.tokEmb);
  push(weights.segEmb);
  push(weights.posEmb);
  push(weights.embLnGamma);
  push(weights.embLnBeta);
  for (const layer of weights.layers) {
    for (const [name] of layerTensorSpecs(c)) push(layer[name]);
  }
  const blob = Buffer.concat(parts);
  fs.writeFileSync(path, blob);
  return blob.length;
}

export function loadWeights(path: string): EncoderWeights {
  let raw: Buffer;
  try {
    raw = fs.readFileSync(path);
  } catch (err) {
    throw new WeightsError(`cannot read encoder weights at ${path}: ${err}`);
  }
  if (raw.length < 32 || raw.toString("ascii", 0, 4) !== WEIGHTS_MAGIC) {
    throw new WeightsError(`${path}: not an ATSW weights file`);
  }
  const version = raw.readUInt32LE(4);
  if (version !== WEIGHTS_VERSION) {
    throw new WeightsError(`${path}: unsupported ATSW version ${version}`);
  }
  const config: EncoderConfig = {
    vocab: raw.readUInt32LE(8),
    hidden: raw.readUInt32LE(12),
    heads: raw.readUInt32LE(16),
    layers: raw.readUInt32LE(20),
    intermediate: raw.readUInt32LE(24),
    maxPositions: raw.readUInt32LE(28),
  };
  const expected = 32 + 4 * totalFloats(config);
  if (raw.length !== expected) {
    throw new WeightsError(
      `${path}: expected ${expected} bytes for this config, found ${raw.length}`
    );
  }

  // re-home the payload in an aligned ArrayBuffer so Float32Array views work
  const aligned = new ArrayBuffer(raw.length - 32);
  new Uint8Array(aligned).set(raw.subarray(32));
  let offset = 0;
  const take = (count: number): Float32Array => {
    const view = new Float32Array(aligned, offset, count);
    offset += count * 4;
    return view;
  };

  const weights: EncoderWeights = {
    config,
    tokEmb: take(config.vocab * config.hidden),
    segEmb: take(2 * config.hidden),
    posEmb: take(config.maxPositions * config.hidden),
    embLnGamma: take(config.hidden),
    embLnBeta: take(config.hidden),
    layers: [],
  };
  for (let l = 0; l < config.layers; l++) {
    const layer = {} as LayerWeights;
    for (const [name, size] of layerTensorSpecs(config)) layer[name] = take(size);
    weights.layers.push(layer);
  }
  return weights;
}
