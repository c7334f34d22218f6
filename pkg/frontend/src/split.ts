/**
 * Rule-based sentence splitter: break after terminal punctuation (.!?,
 * optionally followed by closing quotes/brackets) when whitespace
 * follows, and on newlines. Pre-split inputs (a `sentences` array in the
 * JSONL) bypass this entirely.
 */

const BOUNDARY = /(?<=[.!?]["')\]]?)\s+|\n+/;

export function splitSentences(text: string): string[] {
  return text
    .split(BOUNDARY)
    .map((part) => part.trim())
    .filter((part) => part.length > 0);
}
