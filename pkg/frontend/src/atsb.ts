/**
 * ATSB bundle writer: the byte contract consumed by the downstream
 * summarizer. Integers are little-endian uint32, reals little-endian
 * float32, tensors row-major:
 *
 *   "ATSB" | version=1 | N | d | H | id_len | id utf-8
 *   embeddings N*d | attention H*N*N
 *   labels_flag (0|1) | [N bytes of 0/1]
 *   ref_flag (0|1)    | [ref_len | utf-8]
 *   N x (len | utf-8 sentence)
 *
 * The exporter never writes labels or references; both flags stay 0 and
 * labeling happens downstream.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface BundlePayload {
  docId: string;
  sentences: string[];
  /** [N * d] row-major */
  embeddings: Float32Array;
  /** [H * N * N] row-major */
  attention: Float32Array;
  d: number;
  heads: number;
}

export function encodeBundle(bundle: BundlePayload): Buffer {
  const n = bundle.sentences.length;
  if (n === 0) throw new Error("bundle needs at least one sentence");
  if (bundle.embeddings.length !== n * bundle.d) {
    throw new Error(`embeddings length ${bundle.embeddings.length} != N*d`);
  }
  if (bundle.attention.length !== bundle.heads * n * n) {
    throw new Error(`attention length ${bundle.attention.length} != H*N*N`);
  }
  for (let i = 0; i < bundle.attention.length; i++) {
    const value = bundle.attention[i];
    if (!(value >= 0 && value <= 1)) {
      throw new Error(`attention entry ${value} outside [0, 1]`);
    }
  }

  const u32 = (value: number): Buffer => {
    const b = Buffer.alloc(4);
    b.writeUInt32LE(value >>> 0, 0);
    return b;
  };
  const idBytes = Buffer.from(bundle.docId, "utf-8");
  const parts: Buffer[] = [
    Buffer.from("ATSB", "ascii"),
    u32(1),
    u32(n),
    u32(bundle.d),
    u32(bundle.heads),
    u32(idBytes.length),
    idBytes,
    Buffer.from(bundle.embeddings.buffer, bundle.embeddings.byteOffset, bundle.embeddings.byteLength),
    Buffer.from(bundle.attention.buffer, bundle.attention.byteOffset, bundle.attention.byteLength),
    u32(0), // labels absent
    u32(0), // reference absent
  ];
  for (const sentence of bundle.sentences) {
    const s = Buffer.from(sentence, "utf-8");
    parts.push(u32(s.length), s);
  }
  return Buffer.concat(parts);
}

export function writeBundleFile(bundle: BundlePayload, directory: string): string {
  const file = path.join(directory, `${bundle.docId}.atsb`);
  fs.writeFileSync(file, encodeBundle(bundle));
  return file;
}

export function writeManifest(directory: string, docIds: string[]): void {
  fs.writeFileSync(path.join(directory, "manifest.txt"), docIds.map((id) => id + "\n").join(""));
}
