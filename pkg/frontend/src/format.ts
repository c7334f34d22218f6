/**
 * Encoder input formatting: every sentence is wrapped as
 * [CLS] tokens... [SEP], the wrapped sentences are concatenated, and the
 * segment id alternates 0/1 per sentence. The sequence is cut at the
 * encoder's position limit; a sentence whose [CLS] would land past the
 * limit is dropped (and reported), and a sentence cut mid-way keeps its
 * head with the final position rewritten as [SEP] so every kept sentence
 * stays delimited.
 */

import { CLS_ID, SEP_ID, encodeSentence } from "./tokenizer.js";

export interface FormattedInput {
  tokenIds: number[];
  segmentIds: number[];
  clsPositions: number[]; // one per surviving sentence, in order
  keptSentences: number; // leading sentences that survived
  droppedSentences: number;
}

export class ExportError extends Error {}

export function formatInput(
  sentences: string[], vocabSize: number, maxPositions: number
): FormattedInput {
  if (sentences.length === 0) {
    throw new ExportError("cannot format a document with no sentences");
  }
  const tokenIds: number[] = [];
  const segmentIds: number[] = [];
  const clsPositions: number[] = [];
  let dropped = 0;

  for (let index = 0; index < sentences.length; index++) {
    const segment = index % 2;
    // the [CLS] must fit AND leave room for at least one token + [SEP]
    if (tokenIds.length + 3 > maxPositions) {
      dropped = sentences.length - index;
      break;
    }
    clsPositions.push(tokenIds.length);
    tokenIds.push(CLS_ID);
    segmentIds.push(segment);
    const body = encodeSentence(sentences[index], vocabSize);
    for (const id of body) {
      if (tokenIds.length >= maxPositions - 1) break; // reserve the [SEP] slot
      tokenIds.push(id);
      segmentIds.push(segment);
    }
    tokenIds.push(SEP_ID);
    segmentIds.push(segment);
  }

  if (clsPositions.length === 0) {
    throw new ExportError("no sentence fits inside the position limit");
  }
  return {
    tokenIds,
    segmentIds,
    clsPositions,
    keptSentences: clsPositions.length,
    droppedSentences: dropped,
  };
}
