"""Sensitive-topic scoring of PET sentences against a small lexicon.

An example's raw score counts (token, lexicon word) pairs whose word vectors
have cosine strictly above the lexicon threshold; the normalized score
divides by the total token count, out-of-vocabulary tokens included. PET
tokens are scored like any other token.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import SUBGROUP_ORDER, Corpus, Example
from .embedding import VectorTable, cosine, embed_word
from .errors import AnalysisError
from .textnorm import normalize_token, tokenize

DEFAULT_SENSITIVE_WORDS = (
    "politics",
    "death",
    "kill",
    "crime",
    "drugs",
    "alcohol",
    "fat",
    "old",
    "poor",
    "cheap",
    "sex",
    "sexual",
    "employment",
    "job",
    "disability",
    "pregnant",
    "bathroom",
    "sickness",
    "race",
    "racial",
    "religion",
    "government",
)

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class SensitiveLexicon:
    words: tuple[str, ...]
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        if not self.words:
            raise ValueError("empty sensitive lexicon")
        if not (0.0 < self.threshold < 1.0):
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")


def default_lexicon(threshold: float = DEFAULT_THRESHOLD) -> SensitiveLexicon:
    return SensitiveLexicon(DEFAULT_SENSITIVE_WORDS, threshold)


def load_lexicon(path: str | Path, threshold: float = DEFAULT_THRESHOLD) -> SensitiveLexicon:
    """Read a lexicon file: one word per line, ``#`` starts a comment."""
    words: list[str] = []
    seen: set[str] = set()
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            word = normalize_token(line.split("#", 1)[0].strip())
            if word and word not in seen:
                seen.add(word)
                words.append(word)
    return SensitiveLexicon(tuple(words), threshold)


@dataclass(frozen=True)
class SensitivityResult:
    example_id: str
    raw_score: int
    token_count: int
    norm_score: float
    oov_tokens: tuple[str, ...]


class Scorer:
    """Scores texts against one lexicon over one word-vector table.

    Lexicon words absent from the table cannot participate in any pair; they
    are kept in ``missing_lexicon`` so callers can see the scorer is running
    partially blind rather than silently at full strength.
    """

    def __init__(self, table: VectorTable, lexicon: SensitiveLexicon):
        self.table = table
        self.lexicon = lexicon
        vectors: list[tuple[str, np.ndarray]] = []
        missing: list[str] = []
        for word in lexicon.words:
            vec = embed_word(table, word)
            if vec is None:
                missing.append(word)
            else:
                vectors.append((word, vec))
        self._lexicon_vectors = tuple(vectors)
        self.missing_lexicon = tuple(missing)

    def pair_hits(self, token: str) -> int:
        """Number of lexicon words whose cosine with ``token`` exceeds the
        threshold; 0 for out-of-vocabulary tokens."""
        vec = embed_word(self.table, token)
        if vec is None:
            return 0
        return sum(
            1 for _, lvec in self._lexicon_vectors if cosine(vec, lvec) > self.lexicon.threshold
        )

    def score_text(self, text: str, example_id: str = "") -> SensitivityResult:
        tokens = tokenize(text)
        if not tokens:
            raise AnalysisError(f"{example_id or text!r}: no tokens to score")
        raw = 0
        oov: list[str] = []
        for tok in tokens:
            if embed_word(self.table, tok) is None:
                oov.append(tok)
            else:
                raw += self.pair_hits(tok)
        return SensitivityResult(
            example_id=example_id,
            raw_score=raw,
            token_count=len(tokens),
            norm_score=raw / len(tokens),
            oov_tokens=tuple(oov),
        )

    def score_example(self, example: Example) -> SensitivityResult:
        # PET tokens are part of the sentence, so score the marker-free text.
        return self.score_text(example.clean_text, example.id)

    def score_corpus(self, corpus: Corpus | Iterable[Example]) -> dict[str, SensitivityResult]:
        return {ex.id: self.score_example(ex) for ex in corpus}


@dataclass(frozen=True)
class SubgroupScoreRow:
    """Mean scores for one (euphemistic, vague) subgroup.

    Empty subgroups keep ``mean_raw``/``mean_norm`` as None and ``defined``
    False; they are reported, never silently zeroed.
    """

    euph_label: int
    vague_label: int
    dataset: str
    n: int
    mean_raw: float | None
    mean_norm: float | None

    @property
    def defined(self) -> bool:
        return self.n > 0


def subgroup_means(
    examples: Sequence[Example],
    results: Mapping[str, SensitivityResult],
    dataset: str = "Full",
) -> list[SubgroupScoreRow]:
    """Mean raw/normalized scores per (euph, vague) subgroup, fixed row order."""
    missing_vague = sorted(ex.id for ex in examples if ex.vague_label is None)
    if missing_vague:
        raise AnalysisError(f"examples without vague labels: {missing_vague[:5]}")
    missing_scores = sorted(ex.id for ex in examples if ex.id not in results)
    if missing_scores:
        raise AnalysisError(f"examples without sensitivity scores: {missing_scores[:5]}")
    rows: list[SubgroupScoreRow] = []
    for euph, vague in SUBGROUP_ORDER:
        member = [results[ex.id] for ex in examples if (ex.euph_label, ex.vague_label) == (euph, vague)]
        if member:
            mean_raw = float(np.mean([r.raw_score for r in member]))
            mean_norm = float(np.mean([r.norm_score for r in member]))
        else:
            mean_raw = mean_norm = None
        rows.append(
            SubgroupScoreRow(
                euph_label=euph,
                vague_label=vague,
                dataset=dataset,
                n=len(member),
                mean_raw=mean_raw,
                mean_norm=mean_norm,
            )
        )
    return rows
