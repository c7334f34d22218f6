"""Extractive ground-truth labeling.

Each sentence is scored individually with ROUGE-2 F1 against the
reference summary and the top-k sentences get label 1 (ties broken toward
the earlier sentence). The per-corpus k can be fixed or derived from the
average number of reference sentences ("avg" policy), rounded half-up
with a floor of 1 - e.g. an average of 3.72 reference sentences gives
k=4, an average of 1.33 gives k=1.
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from . import bundle_io
from .errors import ConfigError, DataError
from .rouge import rouge_2_text

_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?])\s+|\n+")


def count_sentences(text: str) -> int:
    """Reference sentence count: split on terminal punctuation followed
    by whitespace (or newlines); at least 1 for non-empty text."""
    segments = [seg for seg in _SENTENCE_BOUNDARY.split(text) if seg.strip()]
    if segments:
        return len(segments)
    return 1 if text.strip() else 0


def label_document(sentences: list[str], reference: str, k: int) -> np.ndarray:
    """Binary label vector marking the min(k, N) best-scoring sentences."""
    if not sentences:
        raise DataError("cannot label a document with no sentences")
    if not reference:
        raise DataError("reference summary is empty")
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    scores = [rouge_2_text(sentence, reference).f1 for sentence in sentences]
    order = sorted(range(len(sentences)), key=lambda i: (-scores[i], i))
    labels = np.zeros(len(sentences), dtype=np.uint8)
    labels[order[: min(k, len(sentences))]] = 1
    return labels


def read_references(path: str | os.PathLike) -> dict[str, str]:
    """Parse the JSON-lines references file: one object per line with
    ``doc_id`` and ``reference`` fields."""
    refs = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{line_no}: not valid JSON: {exc}") from None
            if "doc_id" not in record or "reference" not in record:
                raise DataError(f"{path}:{line_no}: need doc_id and reference fields")
            refs[record["doc_id"]] = record["reference"]
    return refs


def parse_k_policy(policy: str) -> tuple[str, int | None]:
    """"avg" or "fixed:<n>" -> ("avg", None) or ("fixed", n)."""
    if policy == "avg":
        return "avg", None
    if policy.startswith("fixed:"):
        try:
            k = int(policy.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad k policy {policy!r}") from None
        if k < 1:
            raise ConfigError("fixed k must be at least 1")
        return "fixed", k
    raise ConfigError(f"k policy must be 'avg' or 'fixed:<n>', got {policy!r}")


def resolve_k(references: list[str]) -> int:
    """Corpus-average reference sentence count, rounded half-up, >= 1."""
    if not references:
        raise DataError("no references to average")
    mean = sum(count_sentences(ref) for ref in references) / len(references)
    return max(1, int(math.floor(mean + 0.5)))


@dataclass
class LabelReport:
    k: int
    documents: int = 0
    label_histogram: dict[int, int] = field(default_factory=dict)

    def format(self) -> str:
        lines = [f"labeled {self.documents} documents with k={self.k}"]
        lines.append("positive-label histogram:")
        for count in sorted(self.label_histogram):
            lines.append(f"  {count} labels: {self.label_histogram[count]} docs")
        return "\n".join(lines)


def label_corpus(
    corpus_dir: str | os.PathLike,
    references_path: str | os.PathLike,
    k_policy: str = "avg",
) -> LabelReport:
    """Label every bundle in place (labels + reference embedded).

    Idempotent: rewriting an already-labeled corpus produces byte-identical
    files. Raises DataError listing the doc_ids that lack a reference.
    """
    refs = read_references(references_path)
    paths = bundle_io.corpus_paths(corpus_dir)
    if not paths:
        raise DataError(f"no bundles found under {corpus_dir}")

    bundles = [bundle_io.load_bundle(path) for path in paths]
    missing = [b.doc_id for b in bundles if b.doc_id not in refs]
    if missing:
        raise DataError(f"no reference for doc_ids: {', '.join(sorted(missing))}")

    mode, fixed_k = parse_k_policy(k_policy)
    if mode == "fixed":
        k = fixed_k
    else:
        k = resolve_k([refs[b.doc_id] for b in bundles])

    report = LabelReport(k=k)
    for path, bundle in zip(paths, bundles):
        bundle.reference = refs[bundle.doc_id]
        bundle.labels = label_document(bundle.sentences, bundle.reference, k)
        bundle_io.save_bundle(bundle, path)
        positives = int(bundle.labels.sum())
        report.label_histogram[positives] = report.label_histogram.get(positives, 0) + 1
        report.documents += 1
    return report
