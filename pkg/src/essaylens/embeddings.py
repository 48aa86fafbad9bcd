"""Sentence segmentation, embedding providers, and the embedding file format.

Real encoder outputs (512-dim universal sentence vectors, 768-dim SBERT)
enter the pipeline through JSONL embedding files produced elsewhere. The
built-in provider is a deterministic hashed bag-of-tokens projection so the
whole pipeline runs without any pretrained model: adequate for tests and
demos, blind to word order by construction.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_M64 = (1 << 64) - 1

# fixed list; the trailing period of these tokens never ends a sentence
ABBREVIATIONS = frozenset({"mr.", "mrs.", "dr.", "st.", "etc.", "e.g.", "i.e.", "vs."})

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EmbeddingError(ValueError):
    pass


class ProviderUnavailable(EmbeddingError):
    pass


class DimensionMismatch(EmbeddingError):
    pass


class MalformedLine(EmbeddingError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class SentenceSplit:
    sentences: tuple[str, ...]
    offsets: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.sentences)


def segment_sentences(text: str) -> SentenceSplit:
    """Split text into sentences with character offsets into the source.

    Boundaries: '.', '?' or '!' followed by whitespace and an uppercase
    letter (or end of text), except after a known abbreviation; a newline
    ending a non-empty line also splits. Whitespace-only segments vanish,
    so every non-whitespace character lands in exactly one sentence.
    """
    n = len(text)
    cuts = []
    seg_start = 0
    for j, ch in enumerate(text):
        if ch == "\n":
            if text[seg_start:j].strip():
                cuts.append(j)
                seg_start = j
            continue
        if ch not in ".?!":
            continue
        k = j + 1
        while k < n and text[k].isspace():
            k += 1
        at_end = k == n
        starts_upper = k > j + 1 and k < n and text[k].isupper()
        if not (at_end or starts_upper):
            continue
        if ch == "." and _ends_with_abbreviation(text, j):
            continue
        cuts.append(j + 1)
        seg_start = j + 1

    sentences = []
    offsets = []
    start = 0
    for cut in [*cuts, n]:
        raw = text[start:cut]
        stripped = raw.strip()
        if stripped:
            lead = len(raw) - len(raw.lstrip())
            s = start + lead
            sentences.append(stripped)
            offsets.append((s, s + len(stripped)))
        start = cut
    return SentenceSplit(tuple(sentences), tuple(offsets))


def _ends_with_abbreviation(text: str, dot_index: int) -> bool:
    i = dot_index
    while i > 0 and not text[i - 1].isspace():
        i -= 1
    return text[i:dot_index + 1].lower() in ABBREVIATIONS


def _fnv1a64(data: bytes, seed: int) -> int:
    h = (_FNV_OFFSET ^ (seed & _M64)) & _M64
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _M64
    return h


class HashedEmbedder:
    """Hashed bag-of-tokens random projection, L2-normalized per sentence.

    Tokens are lowercased alphanumeric runs; each hashes (FNV-1a, seeded)
    to one coordinate and a sign. Identical token multisets embed
    identically regardless of order; that limitation is the price of a
    dependency-free deterministic provider.
    """

    def __init__(self, dim: int = 512, seed: int = 0):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed

    @property
    def provider_id(self) -> str:
        return f"hashed-d{self.dim}-s{self.seed}"

    def embed(self, sentences) -> np.ndarray:
        out = np.zeros((len(sentences), self.dim))
        for row, sentence in enumerate(sentences):
            for token in _TOKEN_RE.findall(sentence.lower()):
                h = _fnv1a64(token.encode("utf-8"), self.seed)
                sign = 1.0 if (h >> 63) == 0 else -1.0
                out[row, h % self.dim] += sign
            norm = np.linalg.norm(out[row])
            if norm > 0.0:
                out[row] /= norm
        return out


def provider_from_id(provider_id: str) -> HashedEmbedder:
    """Reconstruct a live provider from its recorded id string."""
    m = re.fullmatch(r"hashed-d(\d+)-s(\d+)", provider_id)
    if m:
        return HashedEmbedder(dim=int(m.group(1)), seed=int(m.group(2)))
    if provider_id == "hashed":
        return HashedEmbedder()
    raise ProviderUnavailable(
        f"no live provider for {provider_id!r}; external embeddings must be "
        f"supplied through an embedding file")


def embed_sentences(provider, sentences) -> np.ndarray:
    """One embedding row per sentence via the given provider."""
    if provider is None:
        raise ProviderUnavailable("no embedding provider configured")
    matrix = np.asarray(provider.embed(list(sentences)), dtype=float)
    if matrix.shape != (len(sentences), provider.dim):
        raise DimensionMismatch(
            f"provider returned {matrix.shape}, expected ({len(sentences)}, "
            f"{provider.dim})")
    if not np.isfinite(matrix).all():
        raise EmbeddingError("provider produced non-finite values")
    return matrix


@dataclass
class EmbeddedDocument:
    doc_id: str
    sentences: list[str]
    vectors: np.ndarray
    provider: str

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1]) if self.vectors.size else 0


def write_embedding_file(documents, target) -> None:
    """JSON Lines, one document per line; float repr round-trips exactly."""
    own = isinstance(target, str)
    fh = open(target, "w", encoding="utf-8") if own else target
    try:
        for doc in documents:
            vectors = np.asarray(doc.vectors, dtype=float)
            if vectors.shape[0] != len(doc.sentences):
                raise EmbeddingError(
                    f"document {doc.doc_id!r}: {vectors.shape[0]} vectors for "
                    f"{len(doc.sentences)} sentences")
            line = json.dumps({
                "id": doc.doc_id,
                "sentences": list(doc.sentences),
                "vectors": vectors.tolist(),
                "dim": int(vectors.shape[1]) if vectors.size else 0,
                "provider": doc.provider,
            }, ensure_ascii=False)
            fh.write(line + "\n")
    finally:
        if own:
            fh.close()


def read_embedding_file(source) -> list[EmbeddedDocument]:
    own = isinstance(source, str)
    fh = open(source, encoding="utf-8") if own else source
    try:
        documents = []
        expected_dim = None
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from exc
            try:
                vectors = np.asarray(row["vectors"], dtype=float)
                doc = EmbeddedDocument(doc_id=row["id"],
                                       sentences=list(row["sentences"]),
                                       vectors=vectors,
                                       provider=row["provider"])
                declared = int(row["dim"])
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedLine(line_no, f"bad record ({exc})") from exc
            if vectors.ndim != 2 and vectors.size:
                raise MalformedLine(line_no, "vectors must be a matrix")
            if vectors.size and vectors.shape[0] != len(doc.sentences):
                raise MalformedLine(
                    line_no, f"{vectors.shape[0]} vectors for "
                             f"{len(doc.sentences)} sentences")
            dim = doc.dim
            if declared != dim:
                raise MalformedLine(line_no, f"declared dim {declared} != {dim}")
            if expected_dim is None and dim:
                expected_dim = dim
            elif dim and expected_dim != dim:
                raise DimensionMismatch(
                    f"line {line_no}: dim {dim} != file dim {expected_dim}")
            documents.append(doc)
        return documents
    finally:
        if own:
            fh.close()


def attach_embeddings(records, documents) -> None:
    """Fill records' sentences/embedding fields from embedded documents by id."""
    by_id = {doc.doc_id: doc for doc in documents}
    missing = [r.essay_id for r in records if r.essay_id not in by_id]
    if missing:
        raise EmbeddingError(
            f"{len(missing)} records without embeddings (first: {missing[:3]})")
    for record in records:
        doc = by_id[record.essay_id]
        record.sentences = list(doc.sentences)
        record.embedding = doc.vectors
