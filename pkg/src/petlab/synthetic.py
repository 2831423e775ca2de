"""Synthetic corpora and vector tables for tests and demos.

Three generators:

* ``corpus_from_stats`` builds a corpus that reproduces a declared statistics
  row exactly, or raises when the row is internally inconsistent.
* ``corpus_with_subgroups`` builds a corpus with exact (euph, vague)
  subgroup sizes for exercising the split arithmetic.
* ``planted_signal_corpus`` builds a labeled corpus plus word vectors where
  the euphemistic class is separable through lexicon-similar planted tokens,
  strongly in the vague half and only partially in the non-vague half.

Everything is driven by ``numpy.random.default_rng(seed)`` and is fully
deterministic per seed.
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .corpus import SUBGROUP_ORDER, Corpus, Example
from .embedding import VectorTable
from .errors import InfeasibleStatsError
from .sensitivity import DEFAULT_SENSITIVE_WORDS, SensitiveLexicon

STATS_KEYS = ("language", "code", "total", "euph", "non_euph", "total_pets", "always_euph_pets", "ambiguous_pets")


def load_stats_rows(path: str | Path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        payload = json.load(fh)
    rows = payload["rows"] if isinstance(payload, dict) else payload
    for row in rows:
        missing = [k for k in STATS_KEYS if k not in row]
        if missing:
            raise KeyError(f"stats row for {row.get('language', '?')!r} missing keys {missing}")
    return list(rows)


def check_stats_feasible(row: Mapping[str, int]) -> int:
    """Validate a stats row; returns the implied never-euphemistic PET count."""
    total, euph, non_euph = row["total"], row["euph"], row["non_euph"]
    pets, always, ambiguous = row["total_pets"], row["always_euph_pets"], row["ambiguous_pets"]
    name = row.get("language", "?")
    if euph + non_euph != total:
        raise InfeasibleStatsError(f"{name}: euph {euph} + non_euph {non_euph} != total {total}")
    if always + ambiguous > pets:
        raise InfeasibleStatsError(
            f"{name}: always ({always}) + ambiguous ({ambiguous}) PETs exceed total_pets ({pets})"
        )
    never = pets - always - ambiguous
    if euph < always + ambiguous:
        raise InfeasibleStatsError(f"{name}: {always + ambiguous} PETs need a euphemistic example but euph={euph}")
    if non_euph < ambiguous + never:
        raise InfeasibleStatsError(
            f"{name}: {ambiguous + never} PETs need a non-euphemistic example but non_euph={non_euph}"
        )
    if pets > total:
        raise InfeasibleStatsError(f"{name}: more PETs ({pets}) than examples ({total})")
    if pets == 0 and total > 0:
        raise InfeasibleStatsError(f"{name}: {total} examples but no PETs")
    return never


def corpus_from_stats(row: Mapping[str, int], seed: int = 0) -> Corpus:
    """Build a corpus whose computed statistics match ``row`` exactly."""
    never = check_stats_feasible(row)
    always, ambiguous = row["always_euph_pets"], row["ambiguous_pets"]
    code = str(row.get("code") or "xx")
    rng = np.random.default_rng(seed)

    pet_names = [f"{code}_pet_{i:03d}" for i in range(row["total_pets"])]
    always_pets = pet_names[:always]
    ambiguous_pets = pet_names[always : always + ambiguous]
    never_pets = pet_names[always + ambiguous :]

    # one mandatory example per (pet, required label), then spread the rest
    jobs: list[tuple[str, int]] = [(p, 1) for p in always_pets + ambiguous_pets]
    jobs += [(p, 0) for p in ambiguous_pets + never_pets]
    euph_pool = always_pets + ambiguous_pets
    non_euph_pool = ambiguous_pets + never_pets
    for _ in range(row["euph"] - (always + ambiguous)):
        jobs.append((euph_pool[int(rng.integers(len(euph_pool)))], 1))
    extra_non = row["non_euph"] - (ambiguous + never)
    for _ in range(extra_non):
        jobs.append((non_euph_pool[int(rng.integers(len(non_euph_pool)))], 0))

    examples = [
        Example(
            id=f"{code}-{i:05d}",
            language=code,
            text=f"w{int(rng.integers(1000)):03d} <{pet}> w{int(rng.integers(1000)):03d}",
            pet=pet,
            euph_label=label,
        )
        for i, (pet, label) in enumerate(jobs)
    ]
    return Corpus(tuple(examples), language_tag=code)


def corpus_with_subgroups(
    sizes: Mapping[tuple[int, int], int],
    seed: int = 0,
    language: str = "xx",
    per_pet: int = 30,
) -> Corpus:
    """Exact subgroup sizes with vague labels set; PET groups stay small
    enough that the default per-PET cap never trims anything."""
    rng = np.random.default_rng(seed)
    examples: list[Example] = []
    for euph, vague in SUBGROUP_ORDER:
        n = int(sizes.get((euph, vague), 0))
        for i in range(n):
            pet = f"{language}_p{euph}{vague}_{i // per_pet:03d}"
            examples.append(
                Example(
                    id=f"{language}-sg{euph}{vague}-{i:04d}",
                    language=language,
                    text=f"w{int(rng.integers(1000)):03d} <{pet}> w{int(rng.integers(1000)):03d}",
                    pet=pet,
                    euph_label=euph,
                    vague_label=vague,
                )
            )
    return Corpus(tuple(examples), language_tag=language)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _sample_away(rng: np.random.Generator, dim: int, anchors: np.ndarray, limit: float = 0.45) -> np.ndarray:
    for _ in range(500):
        v = _unit(rng.normal(size=dim))
        if anchors.size == 0 or float(np.max(np.abs(anchors @ v))) < limit:
            return v
    raise RuntimeError("could not sample a vector away from the anchors")


def _sample_near(
    rng: np.random.Generator,
    anchor: np.ndarray,
    others: np.ndarray,
    lo: float = 0.55,
    cross: float = 0.45,
) -> np.ndarray:
    for _ in range(500):
        v = _unit(anchor + 0.55 * _unit(rng.normal(size=anchor.size)))
        near = float(v @ anchor) > lo
        clear = others.size == 0 or float(np.max(np.abs(others @ v))) < cross
        if near and clear:
            return v
    raise RuntimeError("could not sample a vector near the anchor")


def _planted_count(rng: np.random.Generator, euph: int, vague: int) -> int:
    # vague half: clean separation; non-vague half: overlapping counts
    if vague == 1:
        return 4 if euph == 1 else 0
    if euph == 1:
        return 1 if rng.random() < 0.3 else 2
    return 1 if rng.random() < 0.3 else 0


def planted_signal_corpus(
    seed: int = 0,
    n_per_subgroup: int = 500,
    dim: int = 32,
    language: str = "xx",
    text_tokens: int = 12,
    n_pets: int = 40,
) -> tuple[Corpus, VectorTable, SensitiveLexicon]:
    """Labeled corpus plus word vectors with a planted lexicon signal.

    Euphemistic examples carry tokens whose vectors sit close to sensitive
    lexicon words. In the vague subgroups the planted counts separate the
    classes perfectly; in the non-vague subgroups the count distributions
    overlap, so errors concentrate there by construction.
    """
    rng = np.random.default_rng(seed)
    lexicon = SensitiveLexicon(DEFAULT_SENSITIVE_WORDS)
    vectors: dict[str, np.ndarray] = {}

    lex_rows = []
    for word in lexicon.words:
        v = _sample_away(rng, dim, np.array(lex_rows) if lex_rows else np.empty(0))
        lex_rows.append(v)
        vectors[word] = v
    lex_matrix = np.array(lex_rows)

    planted: list[str] = []
    for j, word in enumerate(lexicon.words):
        others = np.delete(lex_matrix, j, axis=0)
        for k in range(3):
            name = f"p{j:02d}v{k}"
            vectors[name] = _sample_near(rng, lex_matrix[j], others)
            planted.append(name)

    neutral = [f"n{i:03d}" for i in range(200)]
    for name in neutral:
        vectors[name] = _sample_away(rng, dim, lex_matrix)
    pets = [f"pet{i:02d}" for i in range(n_pets)]
    for name in pets:
        vectors[name] = _sample_away(rng, dim, lex_matrix)

    examples: list[Example] = []
    for euph, vague in SUBGROUP_ORDER:
        for i in range(n_per_subgroup):
            k = _planted_count(rng, euph, vague)
            content = [planted[int(rng.integers(len(planted)))] for _ in range(k)]
            content += [neutral[int(rng.integers(len(neutral)))] for _ in range(text_tokens - k)]
            content = [content[j] for j in rng.permutation(len(content))]
            pet = pets[int(rng.integers(len(pets)))]
            pos = int(rng.integers(len(content) + 1))
            content.insert(pos, f"<{pet}>")
            examples.append(
                Example(
                    id=f"{language}-s{euph}{vague}-{i:04d}",
                    language=language,
                    text=" ".join(content),
                    pet=pet,
                    euph_label=euph,
                    vague_label=vague,
                )
            )
    return Corpus(tuple(examples), language_tag=language), VectorTable(vectors), lexicon


def shuffle_labels(corpus: Corpus, seed: int = 0) -> Corpus:
    """Random permutation of the euphemism labels across examples; the
    control corpus for any real-signal claim."""
    rng = np.random.default_rng(seed)
    labels = [ex.euph_label for ex in corpus]
    perm = rng.permutation(len(labels))
    shuffled = tuple(
        replace(ex, euph_label=labels[perm[i]]) for i, ex in enumerate(corpus)
    )
    return Corpus(shuffled, language_tag=corpus.language_tag)
