"""Inference-time selection, the Lead-N baseline, and mean-ROUGE reports.

A summary candidate is always the selected sentences joined in document
order with single spaces, scored against the document's reference with
ROUGE-1/2/L F1. The report carries the arithmetic means scaled by 100
plus a per-document CSV (``doc_id,r1,r2,rl``, values x100 with 4
decimals, newline line endings) that is byte-stable across reruns.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import bundle_io
from .bundle_io import DocumentBundle
from .errors import ConfigError, DataError
from .gcn_core import forward, load_params
from .graph_extract import UNIFORM, ThresholdPolicy, build_graphs
from .oracle import read_references, resolve_k
from .rouge import rouge_1_text, rouge_2_text, rouge_l_text

DEFAULT_MIN_SENTS = 5
DEFAULT_MAX_SENTS = 50


def select_top_k(y_hat: np.ndarray, k: int) -> list[int]:
    """Indices of the min(k, N) highest scores, ties toward the smaller
    index, returned ascending (document order)."""
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    y_hat = np.asarray(y_hat)
    order = sorted(range(len(y_hat)), key=lambda i: (-y_hat[i], i))
    return sorted(order[: min(k, len(y_hat))])


def lead_k(n: int, k: int) -> list[int]:
    """The Lead-k baseline: the first min(k, n) sentence indices."""
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    return list(range(min(k, n)))


def filter_corpus(
    corpus_dir: str | os.PathLike,
    min_sents: int = DEFAULT_MIN_SENTS,
    max_sents: int = DEFAULT_MAX_SENTS,
    manifest_path: str | os.PathLike | None = None,
) -> list[str]:
    """doc_ids whose sentence count lies in [min_sents, max_sents].

    Pure: no bundle is touched; optionally writes the retained ids to
    ``manifest_path`` (one per line).
    """
    if min_sents > max_sents:
        raise ConfigError(f"min_sents {min_sents} exceeds max_sents {max_sents}")
    retained = []
    for path in bundle_io.corpus_paths(corpus_dir):
        doc_id, n, _, _ = bundle_io.read_header(path)
        if min_sents <= n <= max_sents:
            retained.append(doc_id)
    if manifest_path is not None:
        with open(manifest_path, "w", encoding="utf-8") as fh:
            for doc_id in retained:
                fh.write(doc_id + "\n")
    return retained


@dataclass
class DocScore:
    doc_id: str
    r1: float  # F1 fractions in [0, 1]
    r2: float
    rl: float


@dataclass
class EvalReport:
    k: int
    rows: list[DocScore] = field(default_factory=list)

    @property
    def mean_r1(self) -> float:
        return 100.0 * float(np.mean([row.r1 for row in self.rows]))

    @property
    def mean_r2(self) -> float:
        return 100.0 * float(np.mean([row.r2 for row in self.rows]))

    @property
    def mean_rl(self) -> float:
        return 100.0 * float(np.mean([row.rl for row in self.rows]))

    def format_summary(self) -> str:
        lines = [f"ROUGE F1 (x100), {len(self.rows)} documents, k={self.k}"]
        lines.append(f"  ROUGE-1  {self.mean_r1:6.2f}")
        lines.append(f"  ROUGE-2  {self.mean_r2:6.2f}")
        lines.append(f"  ROUGE-L  {self.mean_rl:6.2f}")
        return "\n".join(lines)

    def csv_text(self) -> str:
        lines = ["doc_id,r1,r2,rl"]
        for row in self.rows:
            lines.append(
                f"{row.doc_id},{100 * row.r1:.4f},{100 * row.r2:.4f},{100 * row.rl:.4f}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | os.PathLike):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.csv_text())


def model_scorer(
    model_path: str | os.PathLike, threshold: ThresholdPolicy = UNIFORM
) -> Callable[[DocumentBundle], np.ndarray]:
    """Per-bundle score function backed by a saved ATSM model."""
    params = load_params(model_path)
    def score(bundle: DocumentBundle) -> np.ndarray:
        graph = build_graphs(bundle, threshold)
        return forward(graph, bundle.embeddings.astype(np.float64), params)
    return score


def evaluate(
    corpus_dir: str | os.PathLike,
    references_path: str | os.PathLike,
    k: Optional[int] = None,
    *,
    scorer: Optional[Callable[[DocumentBundle], np.ndarray]] = None,
    lead: Optional[int] = None,
    min_sents: Optional[int] = None,
    max_sents: Optional[int] = None,
    csv_path: str | os.PathLike | None = None,
    jobs: int = 1,
) -> EvalReport:
    """Score a corpus with a model (``scorer``) or the Lead baseline.

    Exactly one of ``scorer`` and ``lead`` must be given. ``k`` defaults
    to the corpus-average reference sentence count (the labeling "avg"
    rule); Lead mode selects its own first-``lead`` sentences. All
    references are resolved before any document is scored.
    """
    if (scorer is None) == (lead is None):
        raise ConfigError("need exactly one of scorer/model and lead")

    refs = read_references(references_path)
    paths = bundle_io.corpus_paths(corpus_dir)
    bundles = [bundle_io.load_bundle(path) for path in paths]
    if min_sents is not None or max_sents is not None:
        lo = min_sents if min_sents is not None else 1
        hi = max_sents if max_sents is not None else max(b.n_sentences for b in bundles)
        bundles = [b for b in bundles if lo <= b.n_sentences <= hi]
    if not bundles:
        raise DataError(f"no bundles to evaluate under {corpus_dir}")

    missing = sorted(b.doc_id for b in bundles if b.doc_id not in refs)
    if missing:
        raise DataError(f"no reference for doc_ids: {', '.join(missing)}")

    if lead is not None:
        k = lead
    elif k is None:
        k = resolve_k([refs[b.doc_id] for b in bundles])

    def score_one(bundle: DocumentBundle) -> DocScore:
        if lead is not None:
            indices = lead_k(bundle.n_sentences, lead)
        else:
            indices = select_top_k(scorer(bundle), min(k, bundle.n_sentences))
        candidate = " ".join(bundle.sentences[i] for i in indices)
        reference = refs[bundle.doc_id]
        return DocScore(
            doc_id=bundle.doc_id,
            r1=rouge_1_text(candidate, reference).f1,
            r2=rouge_2_text(candidate, reference).f1,
            rl=rouge_l_text(candidate, reference).f1,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(score_one, bundles))
    else:
        rows = [score_one(bundle) for bundle in bundles]

    report = EvalReport(k=k, rows=rows)
    if csv_path is not None:
        report.write_csv(csv_path)
    return report
