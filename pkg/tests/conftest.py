"""Shared test fixtures and tiny deterministic embedders."""

from __future__ import annotations

import numpy as np
import pytest

from petlab.corpus import Corpus, Example
from petlab.embedding import SentenceEmbedder, VectorTable
from petlab.errors import EmbeddingError


def make_example(
    id: str = "e1",
    language: str = "en",
    text: str = "he is <between jobs> now",
    pet: str = "between jobs",
    euph_label: int = 1,
    vague_label: int | None = None,
    **kwargs,
) -> Example:
    return Example(
        id=id,
        language=language,
        text=text,
        pet=pet,
        euph_label=euph_label,
        vague_label=vague_label,
        **kwargs,
    )


class DictSentenceEmbedder(SentenceEmbedder):
    """Sentence embedder backed by an in-memory text -> vector map."""

    def __init__(self, mapping: dict[str, list[float]]):
        self._map = {k: np.asarray(v, dtype=float) for k, v in mapping.items()}
        self.dim = len(next(iter(self._map.values())))

    def embed(self, texts):
        out = []
        for t in texts:
            if t not in self._map:
                raise EmbeddingError(f"no vector for {t!r}")
            out.append(self._map[t])
        return np.vstack(out)


def table_from(mapping: dict[str, list[float]]) -> VectorTable:
    return VectorTable({k: np.asarray(v, dtype=float) for k, v in mapping.items()})


@pytest.fixture
def jobs_corpus() -> Corpus:
    """Four uses of one PET, two euphemistic and two literal."""
    return Corpus(
        (
            make_example(id="a1", text="sadly he is <between jobs> since march", euph_label=1),
            make_example(id="a2", text="she drives <between jobs> across town", euph_label=0),
            make_example(id="a3", text="my uncle has been <between jobs> a while", euph_label=1),
            make_example(id="a4", text="parking <between jobs> saves the crew time", euph_label=0),
        )
    )
