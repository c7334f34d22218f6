/**
 * Corpus export: JSONL documents -> one ATSB bundle each.
 *
 * Per document the frozen encoder runs once; the first layer's per-head
 * attention is sliced at the [CLS] rows and columns into the raw
 * [H x N x N] inter-sentence tensor (no re-normalization here - each full
 * row is a distribution over the whole token sequence, and the slices
 * are what downstream graph building expects), and the final-layer [CLS]
 * hidden vectors become the [N x d] sentence embeddings.
 */

import * as fs from "node:fs";
import { writeBundleFile, writeManifest } from "./atsb.js";
import { ExportError, formatInput } from "./format.js";
import { encode } from "./model.js";
import { splitSentences } from "./split.js";
import { EncoderWeights, loadWeights } from "./weights.js";

export interface DocumentRecord {
  doc_id: string;
  text?: string;
  sentences?: string[];
}

export interface DocumentReport {
  docId: string;
  sentences: number;
  droppedSentences: number;
  bytes: number;
}

export interface ExportReport {
  documents: DocumentReport[];
  outDir: string;
}

export function parseJsonl(content: string): DocumentRecord[] {
  const records: DocumentRecord[] = [];
  const lines = content.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    let record: unknown;
    try {
      record = JSON.parse(line);
    } catch (err) {
      throw new ExportError(`line ${i + 1}: invalid JSON: ${err}`);
    }
    const doc = record as DocumentRecord;
    if (typeof doc.doc_id !== "string" || doc.doc_id.length === 0) {
      throw new ExportError(`line ${i + 1}: missing doc_id`);
    }
    const hasText = typeof doc.text === "string";
    const hasSentences = Array.isArray(doc.sentences);
    if (!hasText && !hasSentences) {
      throw new ExportError(`line ${i + 1} (${doc.doc_id}): need text or sentences`);
    }
    records.push(doc);
  }
  return records;
}

export function documentSentences(doc: DocumentRecord): string[] {
  if (doc.sentences) {
    return doc.sentences.map((s) => s.trim()).filter((s) => s.length > 0);
  }
  return splitSentences(doc.text ?? "");
}

export function exportDocument(
  weights: EncoderWeights, docId: string, sentences: string[], outDir: string
): DocumentReport {
  if (sentences.length === 0) {
    throw new ExportError(`${docId}: document has no sentences`);
  }
  const { vocab, maxPositions, hidden, heads } = weights.config;
  const formatted = formatInput(sentences, vocab, maxPositions);
  const output = encode(weights, formatted.tokenIds, formatted.segmentIds);

  const n = formatted.clsPositions.length;
  const t = output.seqLen;
  const attention = new Float32Array(heads * n * n);
  for (let h = 0; h < heads; h++) {
    const probs = output.layer1Attention[h];
    for (let i = 0; i < n; i++) {
      const row = formatted.clsPositions[i] * t;
      for (let j = 0; j < n; j++) {
        attention[(h * n + i) * n + j] = Math.fround(probs[row + formatted.clsPositions[j]]);
      }
    }
  }
  const embeddings = new Float32Array(n * hidden);
  for (let i = 0; i < n; i++) {
    const srcRow = formatted.clsPositions[i] * hidden;
    for (let c = 0; c < hidden; c++) {
      embeddings[i * hidden + c] = Math.fround(output.finalHidden[srcRow + c]);
    }
  }

  const kept = sentences.slice(0, formatted.keptSentences);
  const file = writeBundleFile(
    { docId, sentences: kept, embeddings, attention, d: hidden, heads }, outDir
  );
  return {
    docId,
    sentences: n,
    droppedSentences: formatted.droppedSentences,
    bytes: fs.statSync(file).size,
  };
}

export interface ExportOptions {
  inputPath: string;
  outDir: string;
  weightsPath: string;
  maxDocs?: number;
}

export function exportCorpus(options: ExportOptions): ExportReport {
  // weights load first: a bad encoder must fail before any file appears
  const weights = loadWeights(options.weightsPath);
  const content = fs.readFileSync(options.inputPath, "utf-8");
  let records = parseJsonl(content);
  if (options.maxDocs !== undefined) records = records.slice(0, options.maxDocs);
  if (records.length === 0) {
    throw new ExportError(`${options.inputPath}: no documents to export`);
  }

  fs.mkdirSync(options.outDir, { recursive: true });
  const report: ExportReport = { documents: [], outDir: options.outDir };
  for (const doc of records) {
    const sentences = documentSentences(doc);
    report.documents.push(exportDocument(weights, doc.doc_id, sentences, options.outDir));
  }
  writeManifest(options.outDir, report.documents.map((d) => d.docId));
  return report;
}
