"""Paraphrase-agreement vagueness labeling.

Each annotated example carries several independent paraphrases of its PET
sentence. Agreement is the mean pairwise cosine over sentence embeddings of
the paraphrases: high agreement means the PET was read the same way by
everyone (not vague), low agreement means readings diverged (vague), and the
band between the two thresholds goes to a manual review queue. Pair-level
labels are then generalized to every occurrence of the same (PET, euphemistic
label) pair.
"""

from __future__ import annotations

import csv
import enum
import itertools
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Corpus, Example
from .embedding import SentenceEmbedder, cosine
from .errors import AnnotationError
from .textnorm import collapse_ws, nfc

DEFAULT_HI = 0.65
DEFAULT_LO = 0.50


@dataclass(frozen=True)
class VaguenessConfig:
    """Decision thresholds on the agreement score, both exclusive."""

    hi: float = DEFAULT_HI
    lo: float = DEFAULT_LO

    def __post_init__(self) -> None:
        if not (0.0 < self.lo < self.hi < 1.0):
            raise ValueError(f"thresholds must satisfy 0 < lo < hi < 1, got lo={self.lo} hi={self.hi}")


class Outcome(str, enum.Enum):
    NON_VAGUE = "non_vague"
    VAGUE = "vague"
    MANUAL_REVIEW = "manual_review"


def threshold_decision(score: float, config: VaguenessConfig = VaguenessConfig()) -> Outcome:
    """Strict thresholds: scores equal to either boundary go to review."""
    if score > config.hi:
        return Outcome.NON_VAGUE
    if score < config.lo:
        return Outcome.VAGUE
    return Outcome.MANUAL_REVIEW


_OUTCOME_LABEL = {Outcome.NON_VAGUE: 0, Outcome.VAGUE: 1}


@dataclass(frozen=True)
class ParaphraseSet:
    """One annotated example: its id, the sentence shown to annotators, and
    at least two non-empty paraphrase responses."""

    example_id: str
    text: str
    responses: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.responses) < 2:
            raise AnnotationError(
                f"{self.example_id}: need at least 2 paraphrases, got {len(self.responses)}"
            )
        if any(not r.strip() for r in self.responses):
            raise AnnotationError(f"{self.example_id}: empty paraphrase response")


def load_annotations(path: str | Path) -> list[ParaphraseSet]:
    """Read an annotation CSV: ``example_id,text,paraphrase_1,...,paraphrase_N``.

    Trailing empty paraphrase cells are dropped, so rows may use fewer than N
    responses.
    """
    path = Path(path)
    sets: list[ParaphraseSet] = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["example_id", "text"]:
            raise AnnotationError(f"{path.name}: expected header starting example_id,text")
        for lineno, row in enumerate(reader, start=2):
            if not any(cell.strip() for cell in row):
                continue
            if len(row) < 4:
                raise AnnotationError(f"{path.name}:{lineno}: need example_id, text and >=2 paraphrases")
            example_id = row[0].strip()
            responses = tuple(nfc(cell.strip()) for cell in row[2:] if cell.strip())
            try:
                sets.append(ParaphraseSet(example_id, nfc(row[1]), responses))
            except AnnotationError as exc:
                raise AnnotationError(f"{path.name}:{lineno}: {exc}") from None
    return sets


def mean_pairwise_similarity(embedder: SentenceEmbedder, responses: Sequence[str]) -> float:
    """Mean cosine over all C(n, 2) unordered pairs of paraphrase embeddings."""
    if len(responses) < 2:
        raise AnnotationError("agreement needs at least 2 paraphrases")
    vectors = embedder.embed(list(responses))
    sims = [cosine(vectors[i], vectors[j]) for i, j in itertools.combinations(range(len(responses)), 2)]
    return float(sum(sims) / len(sims))


@dataclass(frozen=True)
class Decision:
    """Scored outcome for one annotated example.

    ``resolved_label`` is filled automatically for the two threshold outcomes
    and stays None for manual-review rows until a reviewer merges a label.
    """

    example_id: str
    pet: str
    euph_label: int
    score: float
    outcome: Outcome
    resolved_label: int | None

    @property
    def resolved(self) -> bool:
        return self.resolved_label is not None


def _match_text(annotated: str, example: Example) -> bool:
    want = collapse_ws(annotated)
    return want in (collapse_ws(example.text), collapse_ws(example.clean_text))


def score_annotations(
    corpus: Corpus,
    sets: Iterable[ParaphraseSet],
    embedder: SentenceEmbedder,
    config: VaguenessConfig = VaguenessConfig(),
) -> list[Decision]:
    by_id = corpus.by_id()
    decisions: list[Decision] = []
    for ps in sets:
        ex = by_id.get(ps.example_id)
        if ex is None:
            raise AnnotationError(f"annotated example {ps.example_id!r} is not in the corpus")
        if ps.text and not _match_text(ps.text, ex):
            raise AnnotationError(f"{ps.example_id}: annotated text does not match the corpus record")
        score = mean_pairwise_similarity(embedder, ps.responses)
        outcome = threshold_decision(score, config)
        decisions.append(
            Decision(
                example_id=ps.example_id,
                pet=ex.pet,
                euph_label=ex.euph_label,
                score=score,
                outcome=outcome,
                resolved_label=_OUTCOME_LABEL.get(outcome),
            )
        )
    return decisions


DECISION_FIELDS = ["example_id", "pet", "euph_label", "score", "outcome", "resolved_label"]


def write_decisions(decisions: Iterable[Decision], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DECISION_FIELDS)
        for d in decisions:
            writer.writerow(
                [
                    d.example_id,
                    d.pet,
                    d.euph_label,
                    f"{d.score:.6f}",
                    d.outcome.value,
                    "" if d.resolved_label is None else d.resolved_label,
                ]
            )


def load_decisions(path: str | Path) -> list[Decision]:
    path = Path(path)
    out: list[Decision] = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != DECISION_FIELDS:
            raise AnnotationError(f"{path.name}: unexpected decision columns {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            raw_label = (row["resolved_label"] or "").strip()
            try:
                out.append(
                    Decision(
                        example_id=row["example_id"],
                        pet=row["pet"],
                        euph_label=int(row["euph_label"]),
                        score=float(row["score"]),
                        outcome=Outcome(row["outcome"]),
                        resolved_label=int(raw_label) if raw_label else None,
                    )
                )
            except (KeyError, ValueError) as exc:
                raise AnnotationError(f"{path.name}:{lineno}: {exc}") from None
    return out


REVIEW_FIELDS = ["example_id", "text", "paraphrases", "score", "label"]


def emit_review_queue(
    decisions: Iterable[Decision],
    sets: Iterable[ParaphraseSet],
    path: str | Path,
) -> int:
    """Write unresolved manual-review rows to a CSV a human can fill in.

    The ``label`` column is left blank; reviewers put 0 (not vague) or 1
    (vague) there and feed the file back through :func:`merge_review`.
    """
    by_id = {ps.example_id: ps for ps in sets}
    rows = 0
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REVIEW_FIELDS)
        for d in decisions:
            if d.outcome is not Outcome.MANUAL_REVIEW or d.resolved:
                continue
            ps = by_id.get(d.example_id)
            if ps is None:
                raise AnnotationError(f"no paraphrase set for queued example {d.example_id!r}")
            writer.writerow([d.example_id, ps.text, " | ".join(ps.responses), f"{d.score:.6f}", ""])
            rows += 1
    return rows


def merge_review(decisions: Sequence[Decision], path: str | Path) -> list[Decision]:
    """Fold reviewer labels from a filled-in queue CSV back into decisions.

    Blank labels stay unresolved; anything other than 0/1/blank is an error.
    Rows referencing unknown examples are errors too, so typos do not vanish.
    """
    path = Path(path)
    labels: dict[str, int] = {}
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != REVIEW_FIELDS:
            raise AnnotationError(f"{path.name}: unexpected review columns {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            raw = (row.get("label") or "").strip()
            if not raw:
                continue
            if raw not in ("0", "1"):
                raise AnnotationError(f"{path.name}:{lineno}: label must be 0, 1 or blank, got {raw!r}")
            labels[row["example_id"]] = int(raw)
    known = {d.example_id for d in decisions}
    unknown = sorted(set(labels) - known)
    if unknown:
        raise AnnotationError(f"{path.name}: labels for unknown examples {unknown}")
    merged: list[Decision] = []
    for d in decisions:
        if d.example_id in labels:
            if d.outcome is not Outcome.MANUAL_REVIEW:
                raise AnnotationError(
                    f"{path.name}: example {d.example_id!r} was not queued for review"
                )
            merged.append(replace(d, resolved_label=labels[d.example_id]))
        else:
            merged.append(d)
    return merged


@dataclass(frozen=True)
class PetSenseLabel:
    """Generalized vagueness label for one (PET, euphemistic label) pair."""

    pet_id: str
    euph_label: int
    vague_label: int
    support: int


@dataclass(frozen=True)
class UncoveredPair:
    pet_id: str
    euph_label: int
    reason: str  # "no_decision" or "conflict"
    example_ids: tuple[str, ...]


@dataclass(frozen=True)
class GeneralizeResult:
    labels: tuple[PetSenseLabel, ...]
    corpus: Corpus
    uncovered: tuple[UncoveredPair, ...]
    requeue_ids: tuple[str, ...]  # annotated examples behind conflicting pairs


def generalize_labels(corpus: Corpus, decisions: Sequence[Decision]) -> GeneralizeResult:
    """Propagate resolved per-example labels to all occurrences of each
    (PET, euphemistic label) pair.

    Pairs whose resolved decisions disagree are never majority-voted: the
    pair is reported uncovered with reason "conflict" and its annotated
    examples are listed for re-review. Every corpus example ends up either
    labeled or inside exactly one uncovered pair.
    """
    by_id = corpus.by_id()
    pair_decisions: dict[tuple[str, int], list[Decision]] = {}
    for d in decisions:
        ex = by_id.get(d.example_id)
        if ex is None:
            raise AnnotationError(f"decision for unknown example {d.example_id!r}")
        pair_decisions.setdefault((ex.pet_id, ex.euph_label), []).append(d)

    pair_examples: dict[tuple[str, int], list[Example]] = {}
    for ex in corpus:
        pair_examples.setdefault((ex.pet_id, ex.euph_label), []).append(ex)

    labels: list[PetSenseLabel] = []
    uncovered: list[UncoveredPair] = []
    requeue: list[str] = []
    pair_label: dict[tuple[str, int], int] = {}
    for key in sorted(pair_examples):
        resolved = [d for d in pair_decisions.get(key, []) if d.resolved]
        values = {d.resolved_label for d in resolved}
        example_ids = tuple(ex.id for ex in pair_examples[key])
        if not resolved:
            uncovered.append(UncoveredPair(key[0], key[1], "no_decision", example_ids))
        elif len(values) > 1:
            uncovered.append(UncoveredPair(key[0], key[1], "conflict", example_ids))
            requeue.extend(d.example_id for d in resolved)
        else:
            label = resolved[0].resolved_label
            assert label is not None
            pair_label[key] = label
            labels.append(PetSenseLabel(key[0], key[1], label, support=len(resolved)))

    relabeled = tuple(
        ex.with_vague_label(pair_label[(ex.pet_id, ex.euph_label)])
        if (ex.pet_id, ex.euph_label) in pair_label
        else ex
        for ex in corpus
    )
    return GeneralizeResult(
        labels=tuple(labels),
        corpus=Corpus(relabeled, language_tag=corpus.language_tag),
        uncovered=tuple(uncovered),
        requeue_ids=tuple(requeue),
    )
