import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))  # makes `oracles` importable

from attnsum import DocumentBundle, save_bundle
from attnsum.bundle_io import write_manifest


def make_bundle(rng, n=4, d=6, heads=2, doc_id="doc", labels=None, reference=None):
    """Random but always-valid bundle: attention uniform in [0, 1]."""
    embeddings = rng.standard_normal((n, d)).astype(np.float32)
    attention = rng.uniform(0.0, 1.0, size=(heads, n, n)).astype(np.float32)
    sentences = [f"{doc_id} sentence {i} body" for i in range(n)]
    return DocumentBundle(
        doc_id=doc_id,
        sentences=sentences,
        embeddings=embeddings,
        raw_attention=attention,
        labels=labels,
        reference=reference,
    )


def write_separable_corpus(
    directory, n_docs=10, n=8, d=16, heads=2, seed=123, k=3
):
    """Labeled corpus whose labels are the top-k of a fixed linear score
    of the embeddings; learnable by construction."""
    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(d)
    doc_ids = []
    for idx in range(n_docs):
        embeddings = rng.standard_normal((n, d)).astype(np.float32)
        scores = embeddings.astype(np.float64) @ direction
        top = np.argsort(-scores)[:k]
        labels = np.zeros(n, dtype=np.uint8)
        labels[top] = 1
        attention = rng.uniform(0.0, 1.0, size=(heads, n, n)).astype(np.float32)
        sentences = [f"document {idx} sentence {j} text" for j in range(n)]
        doc_id = f"doc{idx:02d}"
        bundle = DocumentBundle(
            doc_id=doc_id,
            sentences=sentences,
            embeddings=embeddings,
            raw_attention=attention,
            labels=labels,
            reference=" ".join(sentences[i] for i in sorted(top)),
        )
        save_bundle(bundle, os.path.join(directory, doc_id + ".atsb"))
        doc_ids.append(doc_id)
    write_manifest(directory, doc_ids)
    return doc_ids


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def memo_corpus(tmp_path):
    directory = tmp_path / "memo"
    write_separable_corpus(str(directory))
    return str(directory)
