/**
 * Frozen transformer-encoder forward pass.
 *
 * Standard bidirectional architecture: summed token/segment/position
 * embeddings with layer norm, then per layer multi-head scaled
 * dot-product self-attention (softmax over keys), residual + layer norm,
 * and a GELU feed-forward block with its own residual + layer norm.
 *
 * The pass exposes exactly what the export needs: the first layer's
 * post-softmax attention probabilities for every head (each row a
 * distribution over all tokens) and the final hidden state per token.
 * Inference only; fully deterministic.
 */

import {
  addBias,
  addInPlace,
  geluInPlace,
  layerNormRows,
  matmul,
  softmaxRows,
} from "./linalg.js";
import { EncoderWeights, LayerWeights } from "./weights.js";

export interface EncoderOutput {
  /** heads x [T*T] row-major attention probabilities from layer 1 */
  layer1Attention: Float64Array[];
  /** [T*hidden] final hidden states */
  finalHidden: Float64Array;
  seqLen: number;
}

function toF64(src: Float32Array): Float64Array {
  const out = new Float64Array(src.length);
  for (let i = 0; i < src.length; i++) out[i] = src[i];
  return out;
}

/** Per-head attention probabilities for one layer's (q, k) pair. */
function attentionProbs(
  q: Float64Array, k: Float64Array, seqLen: number, heads: number, headDim: number
): Float64Array[] {
  const hidden = heads * headDim;
  const scale = 1.0 / Math.sqrt(headDim);
  const perHead: Float64Array[] = [];
  for (let h = 0; h < heads; h++) {
    const base = h * headDim;
    const scores = new Float64Array(seqLen * seqLen);
    for (let t = 0; t < seqLen; t++) {
      const qRow = t * hidden + base;
      for (let u = 0; u < seqLen; u++) {
        const kRow = u * hidden + base;
        let dot = 0;
        for (let c = 0; c < headDim; c++) dot += q[qRow + c] * k[kRow + c];
        scores[t * seqLen + u] = dot * scale;
      }
    }
    softmaxRows(scores, seqLen, seqLen);
    perHead.push(scores);
  }
  return perHead;
}

function attentionBlock(
  x: Float64Array, layer: LayerWeights, seqLen: number, heads: number, hidden: number
): { probs: Float64Array[]; context: Float64Array } {
  const headDim = hidden / heads;
  const q = matmul(x, toF64(layer.wq), seqLen, hidden, hidden);
  addBias(q, layer.bq, seqLen, hidden);
  const k = matmul(x, toF64(layer.wk), seqLen, hidden, hidden);
  addBias(k, layer.bk, seqLen, hidden);
  const v = matmul(x, toF64(layer.wv), seqLen, hidden, hidden);
  addBias(v, layer.bv, seqLen, hidden);

  const probs = attentionProbs(q, k, seqLen, heads, headDim);

  const merged = new Float64Array(seqLen * hidden);
  for (let h = 0; h < heads; h++) {
    const base = h * headDim;
    const p = probs[h];
    for (let t = 0; t < seqLen; t++) {
      const outRow = t * hidden + base;
      for (let u = 0; u < seqLen; u++) {
        const weight = p[t * seqLen + u];
        if (weight === 0) continue;
        const vRow = u * hidden + base;
        for (let c = 0; c < headDim; c++) merged[outRow + c] += weight * v[vRow + c];
      }
    }
  }
  const context = matmul(merged, toF64(layer.wo), seqLen, hidden, hidden);
  addBias(context, layer.bo, seqLen, hidden);
  return { probs, context };
}

export function encode(
  weights: EncoderWeights, tokenIds: number[], segmentIds: number[]
): EncoderOutput {
  const { hidden, heads, vocab, maxPositions, intermediate } = weights.config;
  const seqLen = tokenIds.length;
  if (seqLen === 0) throw new Error("empty token sequence");
  if (seqLen > maxPositions) {
    throw new Error(`sequence length ${seqLen} exceeds position limit ${maxPositions}`);
  }
  if (segmentIds.length !== seqLen) {
    throw new Error("token and segment sequences differ in length");
  }

  // embedding sum + layer norm
  let x: Float64Array = new Float64Array(seqLen * hidden);
  for (let t = 0; t < seqLen; t++) {
    const id = tokenIds[t];
    if (id < 0 || id >= vocab) throw new Error(`token id ${id} outside vocab ${vocab}`);
    const seg = segmentIds[t];
    const tokRow = id * hidden;
    const segRow = seg * hidden;
    const posRow = t * hidden;
    const outRow = t * hidden;
    for (let c = 0; c < hidden; c++) {
      x[outRow + c] =
        weights.tokEmb[tokRow + c] + weights.segEmb[segRow + c] + weights.posEmb[posRow + c];
    }
  }
  layerNormRows(x, seqLen, hidden, weights.embLnGamma, weights.embLnBeta);

  let layer1Attention: Float64Array[] | null = null;
  for (let l = 0; l < weights.layers.length; l++) {
    const layer = weights.layers[l];
    const { probs, context } = attentionBlock(x, layer, seqLen, heads, hidden);
    if (l === 0) layer1Attention = probs;

    addInPlace(context, x);
    layerNormRows(context, seqLen, hidden, layer.attnLnGamma, layer.attnLnBeta);

    const inner = matmul(context, toF64(layer.w1), seqLen, hidden, intermediate);
    addBias(inner, layer.b1, seqLen, intermediate);
    geluInPlace(inner);
    const ffn = matmul(inner, toF64(layer.w2), seqLen, intermediate, hidden);
    addBias(ffn, layer.b2, seqLen, hidden);

    addInPlace(ffn, context);
    layerNormRows(ffn, seqLen, hidden, layer.ffnLnGamma, layer.ffnLnBeta);
    x = ffn;
  }

  if (layer1Attention === null) throw new Error("encoder has no layers");
  return { layer1Attention, finalHidden: x, seqLen };
}
