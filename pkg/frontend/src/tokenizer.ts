/**
 * Deterministic stand-in tokenizer with a hashed vocabulary.
 *
 * Lowercases, splits words from punctuation (every punctuation mark is
 * its own token), and maps each surface form into a fixed id range with
 * FNV-1a. This replaces a learned WordPiece vocabulary, which cannot be
 * fetched in this environment; the id layout (specials below, hashed
 * buckets above) is stable so exports are reproducible. Swapping in a
 * real subword tokenizer only requires honoring the same special ids.
 */

export const PAD_ID = 0;
export const CLS_ID = 1;
export const SEP_ID = 2;
export const UNK_ID = 3;
export const FIRST_HASH_ID = 4;

const WORD_OR_PUNCT = /[a-z0-9]+|[^\sa-z0-9]/g;

export function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

export function wordTokens(text: string): string[] {
  return text.toLowerCase().match(WORD_OR_PUNCT) ?? [];
}

export function tokenToId(token: string, vocabSize: number): number {
  const buckets = vocabSize - FIRST_HASH_ID;
  if (buckets <= 0) return UNK_ID;
  return FIRST_HASH_ID + (fnv1a(token) % buckets);
}

/** Token ids for one sentence (no specials). */
export function encodeSentence(sentence: string, vocabSize: number): number[] {
  return wordTokens(sentence).map((token) => tokenToId(token, vocabSize));
}
