import { describe, expect, it } from "vitest";

import { ExportError, formatInput } from "../src/format.js";
import { CLS_ID, SEP_ID, FIRST_HASH_ID, encodeSentence, tokenToId, wordTokens } from "../src/tokenizer.js";
import { splitSentences } from "../src/split.js";

const VOCAB = 512;
const MAX = 512;

describe("splitSentences", () => {
  it("splits on terminal punctuation plus whitespace", () => {
    expect(splitSentences("One here. Two there! Three now?")).toEqual([
      "One here.",
      "Two there!",
      "Three now?",
    ]);
  });

  it("splits on newlines and trims", () => {
    expect(splitSentences("alpha line\n beta line \n")).toEqual([
      "alpha line",
      "beta line",
    ]);
  });

  it("keeps abbreviations glued to their sentence when no space follows", () => {
    expect(splitSentences("Costs rose 3.5 percent. Then fell.")).toEqual([
      "Costs rose 3.5 percent.",
      "Then fell.",
    ]);
  });

  it("returns empty for whitespace-only text", () => {
    expect(splitSentences("   \n  ")).toEqual([]);
  });
});

describe("tokenizer", () => {
  it("separates words and punctuation, lowercased", () => {
    expect(wordTokens("The storm closed, badly.")).toEqual([
      "the", "storm", "closed", ",", "badly", ".",
    ]);
  });

  it("is deterministic and in range", () => {
    for (const token of ["harbor", "Harbor", "x", "népszerű", "42"]) {
      const id = tokenToId(token.toLowerCase(), VOCAB);
      expect(id).toBe(tokenToId(token.toLowerCase(), VOCAB));
      expect(id).toBeGreaterThanOrEqual(FIRST_HASH_ID);
      expect(id).toBeLessThan(VOCAB);
    }
  });

  it("never emits special ids for body tokens", () => {
    const ids = encodeSentence("a b c d e f g.", VOCAB);
    for (const id of ids) expect(id).toBeGreaterThanOrEqual(FIRST_HASH_ID);
  });
});

describe("formatInput", () => {
  it("wraps two sentences with alternating segments", () => {
    const out = formatInput(["Short one.", "Short two."], VOCAB, MAX);
    expect(out.clsPositions).toHaveLength(2);
    expect(out.tokenIds[out.clsPositions[0]]).toBe(CLS_ID);
    expect(out.tokenIds[out.clsPositions[1]]).toBe(CLS_ID);
    // segment pattern: a run of 0s then a run of 1s
    const seg = out.segmentIds;
    const boundary = out.clsPositions[1];
    expect(seg.slice(0, boundary).every((s) => s === 0)).toBe(true);
    expect(seg.slice(boundary).every((s) => s === 1)).toBe(true);
    // every sentence ends with its separator
    expect(out.tokenIds[boundary - 1]).toBe(SEP_ID);
    expect(out.tokenIds[out.tokenIds.length - 1]).toBe(SEP_ID);
  });

  it("puts a single sentence's CLS at position 0", () => {
    const out = formatInput(["Only one."], VOCAB, MAX);
    expect(out.clsPositions).toEqual([0]);
    expect(out.tokenIds[0]).toBe(CLS_ID);
  });

  it("third segment returns to 0", () => {
    const out = formatInput(["A one.", "B two.", "C three."], VOCAB, MAX);
    expect(out.segmentIds[out.clsPositions[0]]).toBe(0);
    expect(out.segmentIds[out.clsPositions[1]]).toBe(1);
    expect(out.segmentIds[out.clsPositions[2]]).toBe(0);
  });

  it("drops sentences whose CLS falls past the limit", () => {
    const sentences = Array.from({ length: 40 }, (_, i) => `sentence number ${i} with some words.`);
    const out = formatInput(sentences, VOCAB, 64);
    expect(out.keptSentences).toBeLessThan(40);
    expect(out.droppedSentences).toBe(40 - out.keptSentences);
    expect(out.tokenIds.length).toBeLessThanOrEqual(64);
    expect(out.clsPositions.length).toBe(out.keptSentences);
  });

  it("errors when nothing fits", () => {
    expect(() => formatInput([], VOCAB, MAX)).toThrow(ExportError);
  });

  it("token and segment sequences stay aligned", () => {
    const out = formatInput(["One and two.", "Three and four and five."], VOCAB, MAX);
    expect(out.segmentIds).toHaveLength(out.tokenIds.length);
  });
});
