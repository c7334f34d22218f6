import io
import struct

import numpy as np
import pytest

from attnsum import (
    DataError,
    DocumentBundle,
    FormatError,
    TruncationError,
    ValidationError,
    load_bundle,
    read_bundle,
    save_bundle,
    validate_corpus,
    write_bundle,
)
from attnsum.bundle_io import read_header, write_manifest

from conftest import make_bundle


def roundtrip(bundle):
    sink = io.BytesIO()
    write_bundle(bundle, sink)
    sink.seek(0)
    return read_bundle(sink)


class TestWriteBundle:
    def test_minimal_bundle_size(self):
        """N=1, d=2, H=1: header + 8 embedding bytes + 4 attention bytes
        + flags + one sentence record."""
        bundle = DocumentBundle(
            doc_id="x",
            sentences=["Hi."],
            embeddings=np.zeros((1, 2), dtype=np.float32),
            raw_attention=np.ones((1, 1, 1), dtype=np.float32),
        )
        sink = io.BytesIO()
        count = write_bundle(bundle, sink)
        header = 4 + 4 + 4 + 4 + 4 + 4 + 1  # magic, version, N, d, H, id_len, id
        tensors = 1 * 2 * 4 + 1 * 1 * 1 * 4
        flags = 4 + 4
        text = 4 + len("Hi.")
        assert count == header + tensors + flags + text
        assert count == len(sink.getvalue())
        n, d, h = struct.unpack("<3I", sink.getvalue()[8:20])
        assert (n, d, h) == (1, 2, 1)

    def test_roundtrip_identity(self, rng):
        bundle = make_bundle(rng, labels=np.array([1, 0, 1, 0], dtype=np.uint8),
                             reference="the summary text.")
        assert roundtrip(bundle) == bundle

    def test_roundtrip_without_optionals(self, rng):
        bundle = make_bundle(rng)
        out = roundtrip(bundle)
        assert out == bundle
        assert out.labels is None and out.reference is None

    def test_roundtrip_bit_exact_floats(self, rng):
        bundle = make_bundle(rng, n=3, d=5, heads=2)
        out = roundtrip(bundle)
        assert out.embeddings.tobytes() == bundle.embeddings.tobytes()
        assert out.raw_attention.tobytes() == bundle.raw_attention.tobytes()

    def test_determinism(self, rng):
        bundle = make_bundle(rng, labels=np.array([0, 1, 0, 0], dtype=np.uint8))
        a, b = io.BytesIO(), io.BytesIO()
        write_bundle(bundle, a)
        write_bundle(bundle, b)
        assert a.getvalue() == b.getvalue()

    def test_doc_id_localized_byte_diff(self, rng):
        """Two bundles differing only in (same-length) doc_id differ only
        inside the id record's byte range."""
        state = rng.bit_generator.state
        bundle_a = make_bundle(rng, doc_id="aaaa")
        rng.bit_generator.state = state
        bundle_b = make_bundle(rng, doc_id="bbbb")
        bundle_b.sentences = list(bundle_a.sentences)  # ids seed sentence text
        a, b = io.BytesIO(), io.BytesIO()
        write_bundle(bundle_a, a)
        write_bundle(bundle_b, b)
        bytes_a, bytes_b = a.getvalue(), b.getvalue()
        assert len(bytes_a) == len(bytes_b)
        id_range = range(24, 24 + 4)
        diffs = [i for i, (x, y) in enumerate(zip(bytes_a, bytes_b)) if x != y]
        assert diffs and all(i in id_range for i in diffs)

    def test_unicode_text_survives(self, rng):
        bundle = make_bundle(rng, n=2)
        bundle.sentences = ["Špatná zpráva.", "Εξαιρετικά καλό."]
        bundle.reference = "naïve résumé"
        assert roundtrip(bundle) == bundle

    @pytest.mark.parametrize(
        "mutate,field",
        [
            (lambda b: setattr(b, "embeddings", b.embeddings[:-1]), "embeddings"),
            (lambda b: setattr(b, "labels", np.array([1, 0], dtype=np.uint8)), "labels"),
            (lambda b: b.raw_attention.__setitem__((0, 0, 0), 1.5), "raw_attention"),
            (lambda b: b.embeddings.__setitem__((0, 0), np.nan), "embeddings"),
            (lambda b: setattr(b, "doc_id", ""), "doc_id"),
        ],
    )
    def test_invariant_violations_name_the_field(self, rng, mutate, field):
        bundle = make_bundle(rng, labels=np.array([0, 0, 1, 1], dtype=np.uint8))
        mutate(bundle)
        with pytest.raises(ValidationError, match=field):
            write_bundle(bundle, io.BytesIO())


class TestReadBundle:
    def test_bad_magic(self):
        with pytest.raises(FormatError, match="magic"):
            read_bundle(io.BytesIO(b"XXXX" + b"\x00" * 64))

    def test_bad_version(self, rng):
        sink = io.BytesIO()
        write_bundle(make_bundle(rng), sink)
        data = bytearray(sink.getvalue())
        data[4:8] = struct.pack("<I", 9)
        with pytest.raises(FormatError, match="version"):
            read_bundle(io.BytesIO(bytes(data)))

    def test_truncation_mid_tensor(self, rng):
        sink = io.BytesIO()
        write_bundle(make_bundle(rng), sink)
        data = sink.getvalue()
        with pytest.raises(TruncationError):
            read_bundle(io.BytesIO(data[: 24 + 3 + 10]))  # inside embeddings

    def test_trailing_garbage_rejected(self, rng):
        sink = io.BytesIO()
        write_bundle(make_bundle(rng), sink)
        with pytest.raises(FormatError, match="trailing"):
            read_bundle(io.BytesIO(sink.getvalue() + b"\x00"))

    def test_nan_tensor_rejected(self, rng):
        bundle = make_bundle(rng)
        sink = io.BytesIO()
        write_bundle(bundle, sink)
        data = bytearray(sink.getvalue())
        # first embedding float lives right after the 3-byte id
        offset = 24 + len(bundle.doc_id)
        data[offset : offset + 4] = struct.pack("<f", float("nan"))
        with pytest.raises(DataError, match="non-finite"):
            read_bundle(io.BytesIO(bytes(data)))

    def test_header_flip_rejection_completeness(self, rng):
        """Any single header size integer changed by +-1 must be rejected."""
        bundle = make_bundle(rng, n=3, d=4, heads=2,
                             labels=np.array([1, 0, 1], dtype=np.uint8),
                             reference="ref text.")
        sink = io.BytesIO()
        write_bundle(bundle, sink)
        data = sink.getvalue()
        # offsets of every u32 that declares a size
        id_len = len(bundle.doc_id.encode())
        offsets = [8, 12, 16, 20]  # N, d, H, id_len
        pos = 24 + id_len + 4 * (3 * 4) + 4 * (2 * 3 * 3)
        pos += 4 + 3  # labels flag + labels
        pos += 4  # ref flag
        offsets.append(pos)  # ref_len
        pos += 4 + len(bundle.reference.encode())
        for sentence in bundle.sentences:
            offsets.append(pos)  # sentence len
            pos += 4 + len(sentence.encode())
        assert pos == len(data)

        for offset in offsets:
            (value,) = struct.unpack_from("<I", data, offset)
            for delta in (-1, 1):
                if value + delta < 0:
                    continue
                corrupt = bytearray(data)
                struct.pack_into("<I", corrupt, offset, value + delta)
                with pytest.raises((FormatError, DataError, ValidationError)):
                    read_bundle(io.BytesIO(bytes(corrupt)))


class TestCorpusHelpers:
    def test_read_header(self, rng, tmp_path):
        bundle = make_bundle(rng, n=5, d=7, heads=3, doc_id="peek")
        path = tmp_path / "peek.atsb"
        save_bundle(bundle, path)
        assert read_header(path) == ("peek", 5, 7, 3)

    def test_validate_corpus_all_good(self, rng, tmp_path):
        for i in range(3):
            save_bundle(make_bundle(rng, n=2 + i, doc_id=f"d{i}"), tmp_path / f"d{i}.atsb")
        report = validate_corpus(tmp_path)
        assert report.count == 3
        assert report.ok
        assert report.n_histogram == {2: 1, 3: 1, 4: 1}

    def test_validate_corpus_flags_corrupt_file(self, rng, tmp_path):
        for i in range(2):
            save_bundle(make_bundle(rng, doc_id=f"d{i}"), tmp_path / f"d{i}.atsb")
        (tmp_path / "bad.atsb").write_bytes(b"XXXXjunk")
        report = validate_corpus(tmp_path)
        assert report.count == 3
        assert len(report.diagnostics) == 1
        assert report.diagnostics[0][0] == "bad.atsb"

    def test_validate_corpus_empty_dir(self, tmp_path):
        report = validate_corpus(tmp_path)
        assert report.count == 0
        assert report.ok

    def test_manifest_fixes_order(self, rng, tmp_path):
        for name in ("zz", "aa"):
            save_bundle(make_bundle(rng, doc_id=name), tmp_path / f"{name}.atsb")
        write_manifest(tmp_path, ["zz", "aa"])
        report = validate_corpus(tmp_path)
        assert report.count == 2

    def test_load_bundle_roundtrip(self, rng, tmp_path):
        bundle = make_bundle(rng, reference="r.")
        path = tmp_path / "b.atsb"
        save_bundle(bundle, path)
        assert load_bundle(path) == bundle
