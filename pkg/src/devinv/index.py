"""Embedding index: one vector per record, similarity math, hybrid retrieval.

Search is an exact brute-force scan (corpus scale is tens to thousands);
the scoring inner loops live in `kernels` with numba/numpy backends. The
on-disk index format is binary, versioned, and checksummed.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from . import kernels
from .corpus import Corpus, DeviationRecord, normalize_text
from .errors import (
    ChecksumMismatch,
    DimensionMismatch,
    EmptyIndex,
    InconsistentIndex,
    IndexFormatError,
    MissingDescription,
    ZeroVector,
)
from .gateway import ProviderConfig, embed_batch

MAGIC = b"DVIX"
FORMAT_VERSION = 1


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a, b) / (|a|·|b|), clamped to [-1, 1] to absorb rounding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(a.shape[0], b.shape[0])
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector()
    return float(np.clip(np.dot(a, b) / (norm_a * norm_b), -1.0, 1.0))


@dataclass(frozen=True)
class IndexEntry:
    record_id: str
    vector: np.ndarray
    norm: float


@dataclass(frozen=True)
class Index:
    ids: tuple[str, ...]
    vectors: np.ndarray  # (n, dimension) float64
    norms: np.ndarray  # (n,) float64, all > 0
    provider_id: str
    dimension: int

    def __len__(self) -> int:
        return len(self.ids)

    def entries(self) -> Iterator[IndexEntry]:
        for i, record_id in enumerate(self.ids):
            yield IndexEntry(record_id, self.vectors[i], float(self.norms[i]))


@dataclass(frozen=True)
class SimilarityMatrix:
    ids: tuple[str, ...]
    values: np.ndarray  # (n, n) float64


@dataclass(frozen=True)
class RetrievalQuery:
    text: str
    top_k: int = 3
    phrase_filters: tuple[str, ...] = ()
    metadata_filters: tuple[tuple[str, str], ...] = ()
    min_similarity: float | None = None
    metric: str = "cosine"

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.metric not in ("cosine", "l2"):
            raise ValueError(f"unknown metric {self.metric!r}")
        object.__setattr__(self, "phrase_filters", tuple(self.phrase_filters))
        object.__setattr__(
            self, "metadata_filters", tuple(tuple(f) for f in self.metadata_filters)
        )


@dataclass(frozen=True)
class RetrievalHit:
    record_id: str
    similarity: float
    rank: int


def build_index(
    corpus: Corpus, embed_provider: ProviderConfig, transport=None
) -> Index:
    """Embed every record's normalized description into one index entry."""
    for record in corpus:
        if not record.description.strip():
            raise MissingDescription(record.id)
    texts = [normalize_text(r.description) for r in corpus]
    vectors = embed_batch(texts, embed_provider, transport=transport)
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector()
    return Index(
        ids=tuple(corpus.ids()),
        vectors=vectors,
        norms=norms,
        provider_id=embed_provider.provider_id,
        dimension=int(vectors.shape[1]),
    )


def pairwise_matrix(index: Index, backend: str | None = None) -> SimilarityMatrix:
    """All-pairs cosine map: unit diagonal, exact mirror symmetry."""
    if len(index) == 0:
        raise EmptyIndex()
    values = kernels.pairwise_cosine(index.vectors, index.norms, backend=backend)
    return SimilarityMatrix(ids=index.ids, values=values)


# --- hybrid filtering ---------------------------------------------------------

def matches_filters(
    record: DeviationRecord,
    phrase_filters: tuple[str, ...],
    metadata_filters: tuple[tuple[str, str], ...],
) -> bool:
    """True iff the record passes every phrase and metadata predicate.

    Phrases are matched as exact substrings of the record's normalized_text
    (the phrase itself is normalized first). Metadata fields: site,
    product_line, quality_impact, root_cause, occurrence_date (ISO string),
    batches (membership), extra.<key>; string comparisons are on normalized
    text.
    """
    for phrase in phrase_filters:
        if normalize_text(phrase) not in record.normalized_text:
            return False
    meta = record.metadata
    for fieldname, required in metadata_filters:
        if fieldname == "occurrence_date":
            if meta.occurrence_date.isoformat() != required.strip():
                return False
        elif fieldname == "batches":
            if required not in meta.batches:
                return False
        elif fieldname in ("site", "product_line", "quality_impact", "root_cause"):
            if normalize_text(getattr(meta, fieldname)) != normalize_text(required):
                return False
        elif fieldname.startswith("extra."):
            key = fieldname[len("extra.") :]
            value = meta.extra.get(key)
            if value is None or normalize_text(value) != normalize_text(required):
                return False
        else:
            raise ValueError(f"unknown metadata filter field {fieldname!r}")
    return True


# Scores are quantized to 12 decimal places before ranking. Two candidates
# whose similarities agree at that precision are a tie (broken by id), no
# matter which backend computed them; this keeps rankings reproducible
# across summation orders, well inside every stated tolerance.
SCORE_DECIMALS = 12


def _ranked_hits(
    ids: list[str], scores: np.ndarray, query: RetrievalQuery
) -> list[RetrievalHit]:
    ids_arr = np.asarray(ids)
    scores = np.round(scores, SCORE_DECIMALS)
    if query.metric == "cosine":
        order = np.lexsort((ids_arr, -scores))
        sims = scores
    else:
        order = np.lexsort((ids_arr, scores))
        sims = -scores  # rank by distance ascending; expose negated distance
    hits: list[RetrievalHit] = []
    for position in order:
        sim = float(sims[position])
        if query.min_similarity is not None and sim < query.min_similarity:
            continue
        hits.append(RetrievalHit(str(ids_arr[position]), sim, rank=len(hits) + 1))
        if len(hits) == query.top_k:
            break
    return hits


def search(
    index: Index,
    corpus: Corpus,
    query: RetrievalQuery,
    embed_provider: ProviderConfig,
    transport=None,
    backend: str | None = None,
) -> list[RetrievalHit]:
    """Embed the query, filter candidates, and rank by similarity.

    Hits come back sorted by similarity descending, ties broken by
    record_id ascending; similarity is reported at SCORE_DECIMALS
    precision, which is also what defines a tie. An empty candidate set
    returns an empty list.
    """
    if set(index.ids) != set(corpus.ids()) or len(index.ids) != len(corpus):
        raise InconsistentIndex("record id sets differ")

    query_vec = embed_batch([query.text], embed_provider, transport=transport)[0]
    if query_vec.shape[0] != index.dimension:
        raise DimensionMismatch(index.dimension, query_vec.shape[0])
    qnorm = float(np.linalg.norm(query_vec))
    if qnorm == 0.0:
        raise ZeroVector()

    by_id = {record.id: record for record in corpus}
    keep = [
        i
        for i, record_id in enumerate(index.ids)
        if matches_filters(by_id[record_id], query.phrase_filters, query.metadata_filters)
    ]
    if not keep:
        return []

    candidates = index.vectors[keep]
    if query.metric == "cosine":
        scores = kernels.cosine_scores(
            candidates, index.norms[keep], query_vec, qnorm, backend=backend
        )
    else:
        scores = kernels.l2_distances(candidates, query_vec, backend=backend)
    return _ranked_hits([index.ids[i] for i in keep], scores, query)


# --- persistence ----------------------------------------------------------------

def save_index(index: Index, path: str | Path) -> None:
    """Write the versioned, checksummed binary index format."""
    provider = index.provider_id.encode("utf-8")
    body = bytearray()
    body += struct.pack("<II", index.dimension, len(index))
    body += struct.pack("<H", len(provider)) + provider
    vectors = np.ascontiguousarray(index.vectors, dtype="<f8")
    for i, record_id in enumerate(index.ids):
        encoded = record_id.encode("utf-8")
        body += struct.pack("<H", len(encoded)) + encoded
        body += vectors[i].tobytes()
    checksum = hashlib.sha256(bytes(body)).digest()
    with Path(path).open("wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<I", FORMAT_VERSION))
        handle.write(checksum)
        handle.write(bytes(body))


def load_index(path: str | Path) -> Index:
    """Load an index file; reject corruption instead of partially loading."""
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC) + 4 + 32 or blob[: len(MAGIC)] != MAGIC:
        raise IndexFormatError("not an index file (bad magic)")
    offset = len(MAGIC)
    (version,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported format version {version}")
    checksum = blob[offset : offset + 32]
    offset += 32
    body = blob[offset:]
    if hashlib.sha256(body).digest() != checksum:
        raise ChecksumMismatch()

    try:
        pos = 0
        dimension, count = struct.unpack_from("<II", body, pos)
        pos += 8
        (plen,) = struct.unpack_from("<H", body, pos)
        pos += 2
        provider_id = body[pos : pos + plen].decode("utf-8")
        pos += plen
        ids: list[str] = []
        vectors = np.empty((count, dimension), dtype=np.float64)
        vec_bytes = dimension * 8
        for i in range(count):
            (idlen,) = struct.unpack_from("<H", body, pos)
            pos += 2
            ids.append(body[pos : pos + idlen].decode("utf-8"))
            pos += idlen
            if pos + vec_bytes > len(body):
                raise IndexFormatError("entry data shorter than declared dimension")
            vectors[i] = np.frombuffer(body, dtype="<f8", count=dimension, offset=pos)
            pos += vec_bytes
        if pos != len(body):
            raise IndexFormatError("trailing bytes after final entry")
    except (struct.error, UnicodeDecodeError):
        raise IndexFormatError("entry data shorter than declared layout")

    norms = np.linalg.norm(vectors, axis=1)
    if count and np.any(norms == 0.0):
        raise IndexFormatError("index contains a zero vector")
    return Index(
        ids=tuple(ids),
        vectors=vectors,
        norms=norms,
        provider_id=provider_id,
        dimension=dimension,
    )


def matrix_to_csv(matrix: SimilarityMatrix) -> str:
    """CSV export with a header row of ids; floats use round-trip repr."""
    lines = ["id," + ",".join(matrix.ids)]
    for i, record_id in enumerate(matrix.ids):
        cells = ",".join(repr(float(v)) for v in matrix.values[i])
        lines.append(f"{record_id},{cells}")
    return "\n".join(lines) + "\n"
