"""Self-contained ROUGE-1/2/L scorer reporting precision/recall/F1.

N-gram overlap uses clipped (multiset) matching; ROUGE-L uses the longest
common subsequence over the full token sequences. No stemming, no
stopword removal, single reference per candidate.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, n_candidate: int, n_reference: int) -> "RougeScore":
        if n_candidate == 0 or n_reference == 0:
            return cls(0.0, 0.0, 0.0)
        p = overlap / n_candidate
        r = overlap / n_reference
        f1 = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f1)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: list[str], reference: list[str], n: int) -> RougeScore:
    """Clipped n-gram overlap between token lists.

    Either side having no n-grams (too short or empty) scores zero.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    cand_grams = _ngrams(candidate, n)
    ref_grams = _ngrams(reference, n)
    overlap = sum(min(count, ref_grams[gram]) for gram, count in cand_grams.items())
    return RougeScore.from_counts(
        overlap, sum(cand_grams.values()), sum(ref_grams.values())
    )


def _lcs_length(a: list[str], b: list[str]) -> int:
    # rolling single-row DP
    if not a or not b:
        return 0
    row = [0] * (len(b) + 1)
    for x in a:
        prev_diag = 0
        for j, y in enumerate(b, start=1):
            prev_row = row[j]
            if x == y:
                row[j] = prev_diag + 1
            else:
                row[j] = max(row[j], row[j - 1])
            prev_diag = prev_row
    return row[-1]


def rouge_l(candidate: list[str], reference: list[str]) -> RougeScore:
    """LCS-based score over the full (concatenated) token sequences."""
    lcs = _lcs_length(candidate, reference)
    return RougeScore.from_counts(lcs, len(candidate), len(reference))


def rouge_1_text(candidate: str, reference: str) -> RougeScore:
    return rouge_n(tokenize(candidate), tokenize(reference), 1)


def rouge_2_text(candidate: str, reference: str) -> RougeScore:
    return rouge_n(tokenize(candidate), tokenize(reference), 2)


def rouge_l_text(candidate: str, reference: str) -> RougeScore:
    return rouge_l(tokenize(candidate), tokenize(reference))
