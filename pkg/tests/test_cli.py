import json
import os

import numpy as np
import pytest

from attnsum import save_bundle
from attnsum.cli import dispatch

from conftest import make_bundle, write_separable_corpus

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures", "golden_eval")


def run(capsys, *argv):
    code = dispatch(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestUsageErrors:
    def test_unknown_flag_exits_1(self, capsys):
        code, _, err = run(capsys, "count-params", "--bogus")
        assert code == 1
        assert "usage" in err.lower() or "error" in err.lower()

    def test_no_command_exits_1(self, capsys):
        code, _, _ = run(capsys)
        assert code == 1

    def test_eval_requires_model_or_lead(self, capsys):
        code, _, _ = run(capsys, "eval", "somedir", "--refs", "x.jsonl")
        assert code == 1


class TestCountParams:
    def test_default_prints_393729(self, capsys):
        code, out, _ = run(capsys, "count-params")
        assert code == 0
        assert out.strip() == "393729"

    def test_config_override(self, capsys, tmp_path):
        config = tmp_path / "c.json"
        config.write_text(json.dumps({"d": 4, "heads": 2, "d1": 2, "d2": 2, "dr": 3}))
        code, out, _ = run(capsys, "count-params", "--config", str(config))
        assert code == 0
        assert out.strip() == "66"


class TestGradcheck:
    def test_pass_line(self, capsys):
        code, out, _ = run(capsys, "gradcheck", "--seed", "7")
        assert code == 0
        assert "PASS" in out
        assert "max relative error" in out

    def test_env_seed_fallback(self, capsys, monkeypatch):
        monkeypatch.setenv("ATTNSUM_SEED", "11")
        code, out, _ = run(capsys, "gradcheck")
        assert code == 0
        assert "PASS" in out


class TestValidate:
    def test_clean_corpus(self, capsys, rng, tmp_path):
        for i in range(3):
            save_bundle(make_bundle(rng, doc_id=f"v{i}"), tmp_path / f"v{i}.atsb")
        code, out, _ = run(capsys, "validate", str(tmp_path))
        assert code == 0
        assert "bundles: 3" in out
        assert "problems: 0" in out

    def test_corrupt_corpus_exits_2(self, capsys, rng, tmp_path):
        save_bundle(make_bundle(rng, doc_id="ok"), tmp_path / "ok.atsb")
        (tmp_path / "bad.atsb").write_bytes(b"garbage")
        code, out, _ = run(capsys, "validate", str(tmp_path))
        assert code == 2
        assert "bad.atsb" in out


class TestLabelTrainInferEval:
    @pytest.fixture
    def corpus(self, tmp_path):
        directory = tmp_path / "corpus"
        write_separable_corpus(str(directory), n_docs=6)
        refs = tmp_path / "refs.jsonl"
        from attnsum import load_bundle
        from attnsum.bundle_io import corpus_paths

        with open(refs, "w") as fh:
            for path in corpus_paths(directory):
                bundle = load_bundle(path)
                fh.write(json.dumps(
                    {"doc_id": bundle.doc_id, "reference": bundle.reference}
                ) + "\n")
        return directory, refs

    def _config(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "d": 16, "heads": 2, "d1": 8, "d2": 8, "dr": 12,
            "epochs": 5, "seed": 7, "patience": None,
        }))
        return config

    def test_label_train_infer_eval_pipeline(self, capsys, tmp_path, corpus):
        directory, refs = corpus
        code, out, _ = run(capsys, "label", str(directory), "--refs", str(refs),
                           "--k", "fixed:2")
        assert code == 0
        assert "k=2" in out

        model = tmp_path / "model.atsm"
        config = self._config(tmp_path)
        code, out, _ = run(capsys, "--quiet", "train", str(directory),
                           "--out", str(model), "--config", str(config))
        assert code == 0
        assert model.exists()
        assert (tmp_path / "model.atsm.history.csv").exists()
        assert "[time]" not in out

        bundle_path = next(directory.glob("*.atsb"))
        code, out, _ = run(capsys, "infer", "--model", str(model),
                           "--bundle", str(bundle_path), "--k", "2")
        assert code == 0
        assert len(out.strip().splitlines()) == 2

        csv_out = tmp_path / "eval.csv"
        code, out, _ = run(capsys, "--quiet", "eval", "--model", str(model),
                           str(directory), "--refs", str(refs), "--csv", str(csv_out))
        assert code == 0
        assert "ROUGE-1" in out and "ROUGE-2" in out and "ROUGE-L" in out
        assert csv_out.exists()

    def test_train_determinism_via_cli(self, capsys, tmp_path, corpus):
        directory, refs = corpus
        run(capsys, "label", str(directory), "--refs", str(refs), "--k", "fixed:2")
        config = self._config(tmp_path)
        a, b = tmp_path / "a.atsm", tmp_path / "b.atsm"
        for out_path in (a, b):
            code, _, _ = run(capsys, "--quiet", "train", str(directory),
                             "--out", str(out_path), "--config", str(config),
                             "--seed", "7")
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_train_on_unlabeled_corpus_exits_2(self, capsys, tmp_path, rng):
        directory = tmp_path / "raw"
        directory.mkdir()
        save_bundle(make_bundle(rng, doc_id="u0"), directory / "u0.atsb")
        code, _, err = run(capsys, "train", str(directory),
                           "--out", str(tmp_path / "m.atsm"))
        assert code == 2
        assert "u0" in err


class TestEvalLead:
    def test_lead_summary_and_golden_csv(self, capsys, tmp_path):
        csv_out = tmp_path / "out.csv"
        code, out, _ = run(
            capsys, "--quiet", "eval", "--lead", "2",
            os.path.join(FIXTURE_DIR, "bundles"),
            "--refs", os.path.join(FIXTURE_DIR, "refs.jsonl"),
            "--csv", str(csv_out),
        )
        assert code == 0
        lines = [l for l in out.splitlines() if l.strip().startswith("ROUGE-")]
        assert len(lines) == 3
        golden = open(os.path.join(FIXTURE_DIR, "golden_lead2.csv"), "rb").read()
        assert csv_out.read_bytes() == golden

    def test_quiet_suppresses_timing(self, capsys):
        _, loud, _ = run(
            capsys, "eval", "--lead", "2",
            os.path.join(FIXTURE_DIR, "bundles"),
            "--refs", os.path.join(FIXTURE_DIR, "refs.jsonl"),
        )
        _, quiet, _ = run(
            capsys, "--quiet", "eval", "--lead", "2",
            os.path.join(FIXTURE_DIR, "bundles"),
            "--refs", os.path.join(FIXTURE_DIR, "refs.jsonl"),
        )
        assert "[time]" in loud
        assert "[time]" not in quiet


class TestInspect:
    def test_edge_counts_and_dot(self, capsys, rng, tmp_path):
        bundle = make_bundle(rng, n=4, heads=2, doc_id="ins")
        path = tmp_path / "ins.atsb"
        save_bundle(bundle, path)
        dot = tmp_path / "g.dot"
        code, out, _ = run(capsys, "inspect", str(path), "--head", "0",
                           "--dot", str(dot))
        assert code == 0
        assert "head 0:" in out
        assert "edges" in out
        text = dot.read_text()
        assert text.startswith("graph attention_head_0 {")
        assert text.rstrip().endswith("}")

    def test_missing_bundle_exits_2(self, capsys, tmp_path):
        code, _, err = run(capsys, "inspect", str(tmp_path / "nope.atsb"))
        assert code == 2

    def test_bad_threshold_exits_1(self, capsys, rng, tmp_path):
        path = tmp_path / "t.atsb"
        save_bundle(make_bundle(rng, doc_id="t"), path)
        code, _, _ = run(capsys, "inspect", str(path), "--threshold", "1.5")
        assert code == 1
