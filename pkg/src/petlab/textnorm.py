"""Unicode text normalization shared by corpus, embedding, and scoring code.

Rules: NFC everywhere; case-folding applies to Latin-script letters only, so
CJK text (uncased) and any deliberately cased non-Latin content pass through
untouched. Diacritics are never stripped.
"""

from __future__ import annotations

import functools
import unicodedata

_WS = " \t\n\r\f\v"


def nfc(s: str) -> str:
    return unicodedata.normalize("NFC", s)


@functools.lru_cache(maxsize=None)
def _fold_char(ch: str) -> str:
    # casefold() handles one-to-many folds such as the German sharp s.
    if ch.isupper() and unicodedata.name(ch, "").startswith("LATIN"):
        return ch.casefold()
    return ch


def fold_latin(s: str) -> str:
    """Case-fold Latin-script characters, leave every other script intact."""
    return "".join(_fold_char(ch) for ch in s)


def collapse_ws(s: str) -> str:
    return " ".join(s.split())


def pet_key(pet: str) -> str:
    """Canonical PET identity: NFC, Latin case-fold, collapsed whitespace."""
    return collapse_ws(fold_latin(nfc(pet)))


def _is_strippable(ch: str) -> bool:
    # surrounding punctuation and symbols; quotes, brackets, dashes, etc.
    return unicodedata.category(ch)[0] in ("P", "S")


def strip_punct(token: str) -> str:
    """Strip leading/trailing punctuation; interior characters are kept."""
    start, end = 0, len(token)
    while start < end and _is_strippable(token[start]):
        start += 1
    while end > start and _is_strippable(token[end - 1]):
        end -= 1
    return token[start:end]


def normalize_token(token: str) -> str:
    """Word-vector lookup normalization: NFC, strip punctuation, fold Latin case."""
    return fold_latin(strip_punct(nfc(token)))


def tokenize(text: str) -> list[str]:
    """Whitespace-split ``text`` into normalized tokens, dropping empties."""
    out = []
    for raw in text.split():
        tok = normalize_token(raw)
        if tok:
            out.append(tok)
    return out
