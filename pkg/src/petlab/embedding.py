"""Word and sentence vectors: TSV vector tables, cosine, embedder backends.

Vector tables are TSV files, one entry per line::

    token<TAB>c1 c2 ... cD

The key may contain spaces (multiword PETs, full sentences for the file-based
sentence embedder) but not tabs. All components are parsed as floats and every
row must have the same dimensionality.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BackendUnavailableError, EmbeddingError, VectorTableError
from .textnorm import nfc, normalize_token, tokenize


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise EmbeddingError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise EmbeddingError("cosine undefined for zero-norm vector")
    return float(np.dot(u, v) / (nu * nv))


class VectorTable:
    """In-memory token -> vector map with a fixed dimensionality."""

    def __init__(self, vectors: dict[str, np.ndarray]):
        if not vectors:
            raise VectorTableError("empty vector table")
        dims = {v.shape for v in vectors.values()}
        if len(dims) != 1 or len(next(iter(dims))) != 1:
            raise VectorTableError(f"inconsistent vector shapes: {sorted(dims)}")
        self._vectors = vectors
        self.dim = next(iter(dims))[0]

    def __contains__(self, token: str) -> bool:
        return token in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def get(self, token: str) -> np.ndarray | None:
        return self._vectors.get(token)

    def tokens(self) -> list[str]:
        return sorted(self._vectors)


def load_vector_table(path: str | Path) -> VectorTable:
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise VectorTableError(f"{path.name}:{lineno}: missing tab delimiter")
            token, _, rest = line.partition("\t")
            token = nfc(token)
            if not token:
                raise VectorTableError(f"{path.name}:{lineno}: empty token")
            if token in vectors:
                raise VectorTableError(f"{path.name}:{lineno}: duplicate token {token!r}")
            try:
                vec = np.array([float(x) for x in rest.split()], dtype=float)
            except ValueError:
                raise VectorTableError(f"{path.name}:{lineno}: non-numeric component") from None
            if vec.size == 0:
                raise VectorTableError(f"{path.name}:{lineno}: no vector components")
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise VectorTableError(
                    f"{path.name}:{lineno}: expected {dim} components, got {vec.size}"
                )
            vectors[token] = vec
    if not vectors:
        raise VectorTableError(f"{path}: no vector rows")
    return VectorTable(vectors)


def embed_word(table: VectorTable, token: str) -> np.ndarray | None:
    """Look up a word vector; falls back to the punctuation-stripped,
    Latin-case-folded form. Returns None for out-of-vocabulary tokens."""
    vec = table.get(nfc(token))
    if vec is not None:
        return vec
    norm = normalize_token(token)
    if norm and norm != token:
        return table.get(norm)
    return None


def embed_tokens(table: VectorTable, text: str) -> tuple[list[str], list[np.ndarray], list[str]]:
    """Tokenize ``text`` and embed each token.

    Returns (tokens, in-vocabulary vectors, OOV tokens); OOV tokens are
    skipped but still counted by callers via the full token list.
    """
    tokens = tokenize(text)
    vecs: list[np.ndarray] = []
    oov: list[str] = []
    for tok in tokens:
        vec = embed_word(table, tok)
        if vec is None:
            oov.append(tok)
        else:
            vecs.append(vec)
    return tokens, vecs, oov


@dataclass(frozen=True)
class EmbedderSpec:
    """Which sentence embedder to use and where it lives.

    ``kind="file"`` reads a precomputed text->vector TSV (exact NFC lookup).
    ``kind="sentence-transformers"`` loads the named model if the package is
    installed; otherwise construction raises BackendUnavailableError.
    """

    kind: str
    resource: str


class SentenceEmbedder:
    dim: int

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        raise NotImplementedError

    def embed_one(self, text: str) -> np.ndarray:
        return self.embed([text])[0]


class FileSentenceEmbedder(SentenceEmbedder):
    """Exact-lookup sentence embedder backed by a precomputed TSV table."""

    def __init__(self, path: str | Path):
        self.table = load_vector_table(path)
        self.dim = self.table.dim

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dim), dtype=float)
        for i, text in enumerate(texts):
            key = nfc(text).strip()
            vec = self.table.get(key)
            if vec is None:
                raise EmbeddingError(f"no precomputed vector for text {key[:60]!r}")
            out[i] = vec
        return out


class TransformerSentenceEmbedder(SentenceEmbedder):
    """Adapter over sentence-transformers; optional, never required by tests."""

    def __init__(self, model_name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise BackendUnavailableError(
                "sentence-transformers is not installed; use a file embedder "
                "or install the package"
            ) from exc
        self._model = SentenceTransformer(model_name)
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(self._model.encode(list(texts)), dtype=float)


def make_sentence_embedder(spec: EmbedderSpec) -> SentenceEmbedder:
    if spec.kind == "file":
        return FileSentenceEmbedder(spec.resource)
    if spec.kind == "sentence-transformers":
        return TransformerSentenceEmbedder(spec.resource)
    raise EmbeddingError(f"unknown sentence embedder kind {spec.kind!r}")
