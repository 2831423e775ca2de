"""Canonical PET corpus records: loading, validation, statistics.

A record's text carries exactly one angle-bracket marker pair delimiting the
potentially euphemistic term (PET), e.g. ``"He's <passed away> but ..."``.
The canonical interchange format is JSONL, one record per line; CSV is
accepted for ingestion with a column map.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import CorpusValidationError, DuplicateIdError, MarkerError
from .textnorm import collapse_ws, nfc, pet_key

OPEN_MARK = "<"
CLOSE_MARK = ">"

# (euph_label, vague_label) subgroup keys in canonical reporting order.
SUBGROUP_ORDER = ((1, 1), (1, 0), (0, 1), (0, 0))

_FIELDS = ("id", "language", "text", "pet", "euph_label", "vague_label", "source", "country")


def extract_pet_span(text: str) -> tuple[str, tuple[int, int], str]:
    """Split marked text into (clean_text, half-open span, enclosed PET).

    The span indexes into ``clean_text``; reinserting the markers at the span
    boundaries reproduces the input byte-for-byte (see :func:`insert_markers`).
    """
    opens = text.count(OPEN_MARK)
    closes = text.count(CLOSE_MARK)
    if opens != 1 or closes != 1:
        raise MarkerError(
            f"expected exactly one {OPEN_MARK}...{CLOSE_MARK} pair, "
            f"found {opens} open / {closes} close markers"
        )
    start = text.index(OPEN_MARK)
    end = text.index(CLOSE_MARK)
    if end < start:
        raise MarkerError("close marker precedes open marker")
    enclosed = text[start + 1 : end]
    if not enclosed.strip():
        raise MarkerError("empty PET span")
    clean = text[:start] + enclosed + text[end + 1 :]
    return clean, (start, start + len(enclosed)), enclosed


def insert_markers(clean_text: str, span: tuple[int, int]) -> str:
    start, end = span
    return clean_text[:start] + OPEN_MARK + clean_text[start:end] + CLOSE_MARK + clean_text[end:]


@dataclass(frozen=True)
class Example:
    """One corpus record with a marked PET occurrence.

    ``euph_label`` is 1 for euphemistic use, 0 otherwise; ``vague_label`` is
    optional until the vagueness pipeline fills it in.
    """

    id: str
    language: str
    text: str
    pet: str
    euph_label: int
    vague_label: int | None = None
    source: str = ""
    country: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusValidationError("empty example id")
        if not self.language:
            raise CorpusValidationError(f"{self.id}: missing language code")
        if self.euph_label not in (0, 1):
            raise CorpusValidationError(f"{self.id}: euph_label must be 0 or 1, got {self.euph_label!r}")
        if self.vague_label is not None and self.vague_label not in (0, 1):
            raise CorpusValidationError(f"{self.id}: vague_label must be 0, 1 or absent, got {self.vague_label!r}")
        _, _, enclosed = extract_pet_span(self.text)
        if collapse_ws(enclosed) != collapse_ws(self.pet):
            raise CorpusValidationError(
                f"{self.id}: marked span {enclosed!r} does not match pet field {self.pet!r}"
            )

    @property
    def clean_text(self) -> str:
        return extract_pet_span(self.text)[0]

    @property
    def pet_id(self) -> str:
        """Canonical PET grouping key (NFC + Latin case-fold)."""
        return pet_key(self.pet)

    def with_vague_label(self, label: int) -> "Example":
        return replace(self, vague_label=label)


@dataclass(frozen=True)
class Corpus:
    examples: tuple[Example, ...]
    language_tag: str | None = None

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for ex in self.examples:
            if ex.id in seen:
                raise DuplicateIdError(f"duplicate example id {ex.id!r}")
            seen.add(ex.id)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def ids(self) -> set[str]:
        return {ex.id for ex in self.examples}

    def by_id(self) -> dict[str, Example]:
        return {ex.id: ex for ex in self.examples}

    def by_pet(self) -> dict[str, list[Example]]:
        groups: dict[str, list[Example]] = {}
        for ex in self.examples:
            groups.setdefault(ex.pet_id, []).append(ex)
        return groups

    def languages(self) -> list[str]:
        return sorted({ex.language for ex in self.examples})


@dataclass(frozen=True)
class CorpusStats:
    """Aggregate corpus counts.

    ``never_euph_pets`` is a diagnostic for PETs with only non-euphemistic
    examples; such PETs belong to neither of the two conventional PET columns
    (always-euphemistic / ambiguous), so they are reported separately instead
    of being folded into either count.
    """

    total: int
    euph: int
    non_euph: int
    total_pets: int
    always_euph_pets: int
    ambiguous_pets: int
    never_euph_pets: int = 0


def stats(corpus: Corpus) -> CorpusStats:
    euph = sum(1 for ex in corpus if ex.euph_label == 1)
    always = ambiguous = never = 0
    for group in corpus.by_pet().values():
        labels = {ex.euph_label for ex in group}
        if labels == {1}:
            always += 1
        elif labels == {0}:
            never += 1
        else:
            ambiguous += 1
    return CorpusStats(
        total=len(corpus),
        euph=euph,
        non_euph=len(corpus) - euph,
        total_pets=always + ambiguous + never,
        always_euph_pets=always,
        ambiguous_pets=ambiguous,
        never_euph_pets=never,
    )


@dataclass(frozen=True)
class RecordIssue:
    line: int
    message: str


@dataclass(frozen=True)
class LoadResult:
    corpus: Corpus
    rejected: tuple[RecordIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.rejected


def _example_from_record(record: Mapping[str, object]) -> Example:
    def norm_str(key: str, required: bool = True) -> str:
        value = record.get(key)
        if value is None or value == "":
            if required:
                raise CorpusValidationError(f"missing field {key!r}")
            return ""
        return nfc(str(value))

    def norm_label(key: str, required: bool) -> int | None:
        value = record.get(key)
        if value is None or value == "":
            if required:
                raise CorpusValidationError(f"missing field {key!r}")
            return None
        try:
            return int(str(value))
        except ValueError:
            raise CorpusValidationError(f"field {key!r} is not an integer label: {value!r}") from None

    country = norm_str("country", required=False)
    return Example(
        id=str(record.get("id") or "").strip(),
        language=norm_str("language"),
        text=norm_str("text"),
        pet=norm_str("pet"),
        euph_label=norm_label("euph_label", required=True),  # type: ignore[arg-type]
        vague_label=norm_label("vague_label", required=False),
        source=norm_str("source", required=False),
        country=country or None,
    )


def _iter_records(path: Path, fmt: str, column_map: Mapping[str, str] | None) -> Iterator[tuple[int, Mapping[str, object] | None, str | None]]:
    """Yields (line_number, record, parse_error) triples."""
    if fmt == "jsonl":
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    yield lineno, None, f"invalid JSON: {exc}"
                    continue
                if not isinstance(obj, dict):
                    yield lineno, None, "record is not a JSON object"
                    continue
                yield lineno, obj, None
    elif fmt == "csv":
        colmap = dict(column_map or {})
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for lineno, row in enumerate(reader, start=2):  # header is line 1
                record = {f: row.get(colmap.get(f, f)) for f in _FIELDS}
                yield lineno, record, None
    else:
        raise ValueError(f"unknown corpus format {fmt!r} (expected jsonl or csv)")


def load_corpus(
    path: str | Path,
    format: str | None = None,
    column_map: Mapping[str, str] | None = None,
    language_tag: str | None = None,
) -> LoadResult:
    """Load and validate a corpus file, collecting rejected records.

    Records failing any invariant (markers, labels, duplicate ids) are
    collected in ``rejected`` with their line numbers; the returned corpus
    contains only valid records. An unreadable file raises.
    """
    path = Path(path)
    fmt = format or ("csv" if path.suffix.lower() == ".csv" else "jsonl")
    examples: list[Example] = []
    rejected: list[RecordIssue] = []
    seen: set[str] = set()
    for lineno, record, parse_error in _iter_records(path, fmt, column_map):
        if parse_error is not None:
            rejected.append(RecordIssue(lineno, parse_error))
            continue
        try:
            ex = _example_from_record(record)  # type: ignore[arg-type]
        except CorpusValidationError as exc:
            rejected.append(RecordIssue(lineno, str(exc)))
            continue
        if ex.id in seen:
            rejected.append(RecordIssue(lineno, f"duplicate example id {ex.id!r}"))
            continue
        seen.add(ex.id)
        examples.append(ex)
    return LoadResult(Corpus(tuple(examples), language_tag=language_tag), tuple(rejected))


def to_record(example: Example) -> dict[str, object]:
    record: dict[str, object] = {
        "id": example.id,
        "language": example.language,
        "text": example.text,
        "pet": example.pet,
        "euph_label": example.euph_label,
    }
    if example.vague_label is not None:
        record["vague_label"] = example.vague_label
    if example.source:
        record["source"] = example.source
    if example.country is not None:
        record["country"] = example.country
    return record


def write_jsonl(corpus: Corpus | Iterable[Example], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ex in corpus:
            fh.write(json.dumps(to_record(ex), ensure_ascii=False) + "\n")


def split_by_language(corpus: Corpus) -> dict[str, Corpus]:
    buckets: dict[str, list[Example]] = {}
    for ex in corpus:
        buckets.setdefault(ex.language, []).append(ex)
    return {lang: Corpus(tuple(exs), language_tag=lang) for lang, exs in sorted(buckets.items())}


def concat(corpora: Iterable[Corpus]) -> Corpus:
    """Concatenate corpora; ids must be disjoint."""
    examples: list[Example] = []
    for c in corpora:
        examples.extend(c.examples)
    return Corpus(tuple(examples))
