"""Reader/writer for the ATSB document-bundle format.

One ATSB file carries everything downstream stages need for one document:
its sentences, one encoder embedding per sentence, and the raw per-head
CLS-to-CLS attention slices. Keeping this on disk decouples the (expensive,
frozen) encoder pass from graph building, training, and evaluation.

Byte layout, in order (integers are little-endian uint32, reals are
little-endian IEEE-754 float32, tensors row-major):

    magic b"ATSB" | version=1 | N | d | H | id_len | id (UTF-8)
    embeddings: N*d reals
    attention:  H*N*N reals
    labels_flag (0|1) | if 1: N bytes, each 0 or 1
    ref_flag    (0|1) | if 1: ref_len | reference (UTF-8)
    N sentence records, each: len | sentence (UTF-8)

A reader must consume the stream exactly: any trailing bytes are an error.
Attention entries live in [0, 1]; rows need not sum to 1 (they are slices
of a distribution over a longer token sequence).

A corpus is a directory of ``*.atsb`` files, one per document, with an
optional plain-text ``manifest.txt`` sidecar listing doc_ids one per line
to fix ordering.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Optional

import numpy as np

from .errors import DataError, FormatError, TruncationError, ValidationError

MAGIC = b"ATSB"
VERSION = 1
MANIFEST_NAME = "manifest.txt"
BUNDLE_SUFFIX = ".atsb"

_U32 = struct.Struct("<I")


@dataclass
class DocumentBundle:
    """One document's sentences, embeddings, and raw CLS attention.

    ``embeddings`` is [N, d] float32, ``raw_attention`` is [H, N, N]
    float32 with entries in [0, 1]. ``labels`` (optional) is a uint8
    vector of {0, 1} marking summary sentences; ``reference`` (optional)
    is the reference-summary string.
    """

    doc_id: str
    sentences: list[str]
    embeddings: np.ndarray
    raw_attention: np.ndarray
    labels: Optional[np.ndarray] = None
    reference: Optional[str] = None

    def __post_init__(self):
        self.embeddings = np.ascontiguousarray(self.embeddings, dtype=np.float32)
        self.raw_attention = np.ascontiguousarray(self.raw_attention, dtype=np.float32)
        if self.labels is not None:
            self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)

    @property
    def n_sentences(self) -> int:
        return len(self.sentences)

    def validate(self):
        """Raise ValidationError naming the offending field."""
        n = len(self.sentences)
        if not self.doc_id:
            raise ValidationError("doc_id: must be non-empty")
        if n < 1:
            raise ValidationError("sentences: need at least one sentence")
        if self.embeddings.ndim != 2 or self.embeddings.shape[0] != n:
            raise ValidationError(
                f"embeddings: expected [N={n}, d] matrix, got shape {self.embeddings.shape}"
            )
        if not np.isfinite(self.embeddings).all():
            raise ValidationError("embeddings: non-finite entries")
        a = self.raw_attention
        if a.ndim != 3 or a.shape[1] != n or a.shape[2] != n:
            raise ValidationError(
                f"raw_attention: expected [H, N={n}, N={n}] tensor, got shape {a.shape}"
            )
        if a.shape[0] < 1:
            raise ValidationError("raw_attention: need at least one head")
        if not np.isfinite(a).all():
            raise ValidationError("raw_attention: non-finite entries")
        if a.min(initial=0.0) < 0.0 or a.max(initial=0.0) > 1.0:
            raise ValidationError("raw_attention: entries outside [0, 1]")
        if self.labels is not None:
            if self.labels.shape != (n,):
                raise ValidationError(
                    f"labels: expected length {n}, got shape {self.labels.shape}"
                )
            if not np.isin(self.labels, (0, 1)).all():
                raise ValidationError("labels: values outside {0, 1}")

    def __eq__(self, other):
        if not isinstance(other, DocumentBundle):
            return NotImplemented
        if (self.doc_id, self.sentences, self.reference) != (
            other.doc_id,
            other.sentences,
            other.reference,
        ):
            return False
        if self.embeddings.shape != other.embeddings.shape:
            return False
        if self.raw_attention.shape != other.raw_attention.shape:
            return False
        # bit-exact comparison of the float payloads
        if self.embeddings.tobytes() != other.embeddings.tobytes():
            return False
        if self.raw_attention.tobytes() != other.raw_attention.tobytes():
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None and not np.array_equal(self.labels, other.labels):
            return False
        return True


def write_bundle(bundle: DocumentBundle, sink: BinaryIO) -> int:
    """Serialize ``bundle`` to ``sink``; returns the byte count written.

    Deterministic: equal bundles produce identical byte streams. Raises
    ValidationError before writing anything if the bundle is invalid.
    """
    bundle.validate()
    n = bundle.n_sentences
    d = bundle.embeddings.shape[1]
    h = bundle.raw_attention.shape[0]
    id_bytes = bundle.doc_id.encode("utf-8")

    parts = [
        MAGIC,
        _U32.pack(VERSION),
        _U32.pack(n),
        _U32.pack(d),
        _U32.pack(h),
        _U32.pack(len(id_bytes)),
        id_bytes,
        bundle.embeddings.astype("<f4", copy=False).tobytes(),
        bundle.raw_attention.astype("<f4", copy=False).tobytes(),
    ]
    if bundle.labels is None:
        parts.append(_U32.pack(0))
    else:
        parts.append(_U32.pack(1))
        parts.append(bundle.labels.tobytes())
    if bundle.reference is None:
        parts.append(_U32.pack(0))
    else:
        ref_bytes = bundle.reference.encode("utf-8")
        parts.append(_U32.pack(1))
        parts.append(_U32.pack(len(ref_bytes)))
        parts.append(ref_bytes)
    for sentence in bundle.sentences:
        s_bytes = sentence.encode("utf-8")
        parts.append(_U32.pack(len(s_bytes)))
        parts.append(s_bytes)

    blob = b"".join(parts)
    sink.write(blob)
    return len(blob)


class _Cursor:
    """Sequential reader over a byte string with truncation checking."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int, what: str) -> bytes:
        end = self.pos + count
        if end > len(self.data):
            raise TruncationError(
                f"stream ends inside {what}: need {count} bytes at offset "
                f"{self.pos}, have {len(self.data) - self.pos}"
            )
        chunk = self.data[self.pos : end]
        self.pos = end
        return chunk

    def u32(self, what: str) -> int:
        return _U32.unpack(self.take(4, what))[0]

    def text(self, count: int, what: str) -> str:
        raw = self.take(count, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{what} is not valid UTF-8: {exc}") from None

    def flag(self, what: str) -> int:
        value = self.u32(what)
        if value not in (0, 1):
            raise FormatError(f"{what} must be 0 or 1, got {value}")
        return value


def read_bundle(source: BinaryIO) -> DocumentBundle:
    """Parse one ATSB stream; the stream must contain exactly one bundle.

    Raises FormatError on bad magic/version or malformed records,
    TruncationError when declared sizes overrun the stream, and DataError
    when tensors carry non-finite or out-of-range values.
    """
    cur = _Cursor(source.read())

    if cur.take(4, "magic") != MAGIC:
        raise FormatError("bad magic: not an ATSB stream")
    version = cur.u32("version")
    if version != VERSION:
        raise FormatError(f"unsupported ATSB version {version}")
    n = cur.u32("sentence count")
    d = cur.u32("embedding width")
    h = cur.u32("head count")
    if n < 1 or d < 1 or h < 1:
        raise FormatError(f"header dimensions must be positive, got N={n} d={d} H={h}")
    id_len = cur.u32("id length")
    doc_id = cur.text(id_len, "doc id")

    emb_raw = cur.take(4 * n * d, "embeddings")
    embeddings = np.frombuffer(emb_raw, dtype="<f4").reshape(n, d).copy()
    att_raw = cur.take(4 * h * n * n, "attention")
    raw_attention = np.frombuffer(att_raw, dtype="<f4").reshape(h, n, n).copy()

    labels = None
    if cur.flag("labels flag"):
        label_bytes = cur.take(n, "labels")
        labels = np.frombuffer(label_bytes, dtype=np.uint8).copy()
        if not np.isin(labels, (0, 1)).all():
            raise DataError("labels carry values outside {0, 1}")

    reference = None
    if cur.flag("reference flag"):
        ref_len = cur.u32("reference length")
        reference = cur.text(ref_len, "reference")

    sentences = []
    for i in range(n):
        s_len = cur.u32(f"sentence {i} length")
        sentences.append(cur.text(s_len, f"sentence {i}"))

    if cur.pos != len(cur.data):
        raise FormatError(f"{len(cur.data) - cur.pos} trailing bytes after bundle")

    if not np.isfinite(embeddings).all():
        raise DataError("embeddings carry non-finite values")
    if not np.isfinite(raw_attention).all():
        raise DataError("attention carries non-finite values")
    if raw_attention.min() < 0.0 or raw_attention.max() > 1.0:
        raise DataError("attention carries values outside [0, 1]")

    bundle = DocumentBundle(
        doc_id=doc_id,
        sentences=sentences,
        embeddings=embeddings,
        raw_attention=raw_attention,
        labels=labels,
        reference=reference,
    )
    bundle.validate()
    return bundle


def save_bundle(bundle: DocumentBundle, path: str | os.PathLike) -> int:
    with open(path, "wb") as sink:
        return write_bundle(bundle, sink)


def load_bundle(path: str | os.PathLike) -> DocumentBundle:
    with open(path, "rb") as source:
        return read_bundle(source)


def read_header(path: str | os.PathLike) -> tuple[str, int, int, int]:
    """Cheap peek at (doc_id, N, d, H) without parsing the tensors."""
    with open(path, "rb") as fh:
        head = fh.read(24)
        if len(head) < 24:
            raise TruncationError(f"{path}: too short for an ATSB header")
        if head[:4] != MAGIC:
            raise FormatError(f"{path}: bad magic")
        version, n, d, h, id_len = struct.unpack("<5I", head[4:24])
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        id_raw = fh.read(id_len)
        if len(id_raw) < id_len:
            raise TruncationError(f"{path}: stream ends inside doc id")
        try:
            doc_id = id_raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: doc id is not valid UTF-8: {exc}") from None
    return doc_id, n, d, h


def bundle_path(directory: str | os.PathLike, doc_id: str) -> str:
    return os.path.join(directory, doc_id + BUNDLE_SUFFIX)


def corpus_paths(directory: str | os.PathLike) -> list[str]:
    """Bundle files in ``directory``, manifest order when one exists,
    otherwise sorted by file name."""
    manifest = read_manifest(directory)
    if manifest is not None:
        return [bundle_path(directory, doc_id) for doc_id in manifest]
    names = sorted(
        name for name in os.listdir(directory) if name.endswith(BUNDLE_SUFFIX)
    )
    return [os.path.join(directory, name) for name in names]


def write_manifest(directory: str | os.PathLike, doc_ids: list[str]):
    with open(os.path.join(directory, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        for doc_id in doc_ids:
            fh.write(doc_id + "\n")


def read_manifest(directory: str | os.PathLike) -> Optional[list[str]]:
    path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(path):
        return None
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


@dataclass
class CorpusReport:
    """Result of scanning a corpus directory; never mutates any file."""

    count: int = 0
    diagnostics: list[tuple[str, str]] = field(default_factory=list)
    n_histogram: dict[int, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def format(self) -> str:
        lines = [f"bundles: {self.count}"]
        if self.n_histogram:
            lines.append("sentence-count histogram:")
            for n in sorted(self.n_histogram):
                lines.append(f"  N={n}: {self.n_histogram[n]}")
        if self.diagnostics:
            lines.append(f"problems: {len(self.diagnostics)}")
            for name, reason in self.diagnostics:
                lines.append(f"  {name}: {reason}")
        else:
            lines.append("problems: 0")
        return "\n".join(lines)


def validate_corpus(directory: str | os.PathLike) -> CorpusReport:
    """Read every bundle under ``directory`` and report what's wrong.

    Unreadable or invariant-violating bundles become diagnostics naming
    the file; valid ones feed the sentence-count histogram.
    """
    report = CorpusReport()
    for path in corpus_paths(directory):
        report.count += 1
        name = os.path.basename(path)
        try:
            bundle = load_bundle(path)
        except (OSError, FormatError, DataError, ValidationError) as exc:
            report.diagnostics.append((name, f"{type(exc).__name__}: {exc}"))
            continue
        n = bundle.n_sentences
        report.n_histogram[n] = report.n_histogram.get(n, 0) + 1
    return report
