"""Cross-component check: the TypeScript exporter's bundles must satisfy
this package's format contract.

Skipped unless ``frontend/dist`` exists (build with ``npm install && npm
run build`` inside frontend/). The primary suite never needs it.
"""

import os
import shutil
import subprocess

import numpy as np
import pytest

from attnsum import load_bundle, validate_corpus
from attnsum.bundle_io import corpus_paths

FRONTEND = os.path.join(os.path.dirname(__file__), "..", "frontend")
CLI = os.path.join(FRONTEND, "dist", "cli.js")
SAMPLES = os.path.join(FRONTEND, "samples", "docs.jsonl")

pytestmark = pytest.mark.skipif(
    not (os.path.exists(CLI) and shutil.which("node")),
    reason="frontend not built (run npm install && npm run build in frontend/)",
)


def _run(*argv):
    return subprocess.run(
        ["node", CLI, *argv], capture_output=True, text=True, check=False
    )


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    root = tmp_path_factory.mktemp("secondary")
    weights = root / "enc.atsw"
    result = _run("gen-weights", "--out", str(weights), "--layers", "2",
                  "--vocab", "256", "--intermediate", "256", "--seed", "1")
    assert result.returncode == 0, result.stderr
    out_dir = root / "bundles"
    result = _run("export", "--input", SAMPLES, "--out", str(out_dir),
                  "--weights", str(weights))
    assert result.returncode == 0, result.stderr
    return root, weights, out_dir


class TestExportedBundles:
    def test_validate_corpus_zero_diagnostics(self, exported):
        _, _, out_dir = exported
        report = validate_corpus(out_dir)
        assert report.count == 5
        assert report.ok, report.format()

    def test_shapes_are_bert_base(self, exported):
        _, _, out_dir = exported
        for path in corpus_paths(out_dir):
            bundle = load_bundle(path)
            n = bundle.n_sentences
            assert bundle.raw_attention.shape == (12, n, n)
            assert bundle.embeddings.shape == (n, 768)

    def test_attention_rows_are_distribution_slices(self, exported):
        """Entries in [0, 1]; row sums at most 1 (plus float slack),
        since each row is a slice of a distribution over more tokens."""
        _, _, out_dir = exported
        for path in corpus_paths(out_dir):
            bundle = load_bundle(path)
            att = bundle.raw_attention.astype(np.float64)
            assert att.min() >= 0.0 and att.max() <= 1.0
            assert att.sum(axis=2).max() <= 1.0 + 1e-6

    def test_reexport_byte_identical(self, exported):
        root, weights, out_dir = exported
        again = root / "again"
        result = _run("export", "--input", SAMPLES, "--out", str(again),
                      "--weights", str(weights))
        assert result.returncode == 0, result.stderr
        for path in corpus_paths(out_dir):
            name = os.path.basename(path)
            with open(path, "rb") as first, open(again / name, "rb") as second:
                assert first.read() == second.read(), name

    def test_missing_weights_fails_before_output(self, exported, tmp_path):
        root, _, _ = exported
        out_dir = tmp_path / "never"
        result = _run("export", "--input", SAMPLES, "--out", str(out_dir),
                      "--weights", str(root / "absent.atsw"))
        assert result.returncode == 2
        assert not out_dir.exists()
