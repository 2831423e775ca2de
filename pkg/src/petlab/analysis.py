"""Post-hoc analysis of experiment results: per-slice metrics, frequently
misclassified examples, subgroup sensitivity contrasts, and the language by
backend results matrix.

Renderers return plain strings (CSV or markdown); the CLI owns file writing
and provenance stamping, so every table here is reproducible byte for byte
from a results file.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .corpus import SUBGROUP_ORDER, Corpus, Example
from .errors import AnalysisError
from .harness import RunResults, evaluate
from .sensitivity import SensitivityResult, SubgroupScoreRow, subgroup_means

DEFAULT_ERROR_THRESHOLD = 10

# column order for the cross-language results matrix; extra backends follow
CANONICAL_BACKENDS = ("mBERT", "XLM-RoBERTa-base", "XLM-RoBERTa-large")


def markdown_table(headers: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    def clean(cell: str) -> str:
        return cell.replace("|", "\\|")

    lines = [
        "| " + " | ".join(clean(h) for h in headers) + " |",
        "| " + " | ".join("---" for _ in headers) + " |",
    ]
    for row in rows:
        lines.append("| " + " | ".join(clean(c) for c in row) + " |")
    return "\n".join(lines) + "\n"


def _csv_string(headers: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


# -- per-slice metrics ------------------------------------------------------


def by_vague(example: Example) -> str | None:
    if example.vague_label is None:
        return None
    return "Vague" if example.vague_label == 1 else "Non-vague"


def by_language(example: Example) -> str | None:
    return example.language


@dataclass(frozen=True)
class SliceRow:
    name: str
    n_mean: float
    runs_used: int
    precision: float
    recall: float
    f1: float


def slice_metrics(
    results: RunResults,
    corpus: Corpus,
    slicer: Callable[[Example], str | None] = by_vague,
) -> list[SliceRow]:
    """Macro metrics inside each test-set slice, averaged over runs.

    A run contributes to a slice only when the slice is non-empty in that
    run's test set; ``runs_used`` records how many did.
    """
    by_id = corpus.by_id()
    per_slice: dict[str, list[tuple[int, float, float, float]]] = {}
    for run in results.runs:
        members: dict[str, list[str]] = {}
        for ex_id in run.test_ids:
            ex = by_id.get(ex_id)
            if ex is None:
                raise AnalysisError(f"results reference unknown example {ex_id!r}")
            name = slicer(ex)
            if name is not None:
                members.setdefault(name, []).append(ex_id)
        for name, ids in members.items():
            gold = {i: by_id[i].euph_label for i in ids}
            pred = {i: run.predictions[i] for i in ids}
            m = evaluate(gold, pred)
            per_slice.setdefault(name, []).append(
                (len(ids), m.macro_precision, m.macro_recall, m.macro_f1)
            )
    rows = []
    for name in sorted(per_slice):
        entries = per_slice[name]
        rows.append(
            SliceRow(
                name=name,
                n_mean=float(np.mean([e[0] for e in entries])),
                runs_used=len(entries),
                precision=float(np.mean([e[1] for e in entries])),
                recall=float(np.mean([e[2] for e in entries])),
                f1=float(np.mean([e[3] for e in entries])),
            )
        )
    return rows


def render_slices_csv(rows: Sequence[SliceRow]) -> str:
    return _csv_string(
        ["slice", "mean_test_n", "runs_used", "precision", "recall", "f1"],
        [
            [r.name, f"{r.n_mean:.1f}", r.runs_used, f"{r.precision:.3f}", f"{r.recall:.3f}", f"{r.f1:.3f}"]
            for r in rows
        ],
    )


def render_slices_md(rows: Sequence[SliceRow]) -> str:
    return markdown_table(
        ["Slice", "Mean test n", "Runs", "P", "R", "F1"],
        [
            [r.name, f"{r.n_mean:.1f}", str(r.runs_used), f"{r.precision:.3f}", f"{r.recall:.3f}", f"{r.f1:.3f}"]
            for r in rows
        ],
    )


# -- frequently misclassified examples --------------------------------------


@dataclass(frozen=True)
class ErrorRow:
    example_id: str
    misclass_count: int
    times_in_test: int
    ratio: float


def frequent_errors(results: RunResults, threshold: int = DEFAULT_ERROR_THRESHOLD) -> list[ErrorRow]:
    """Examples misclassified at least ``threshold`` times (inclusive),
    with how often they had the chance to be."""
    rows = []
    for ex_id, count in results.misclass_counts.items():
        if count >= threshold:
            in_test = results.times_in_test.get(ex_id, 0)
            rows.append(ErrorRow(ex_id, count, in_test, count / in_test if in_test else 0.0))
    rows.sort(key=lambda r: (-r.misclass_count, r.example_id))
    return rows


def render_errors_csv(rows: Sequence[ErrorRow]) -> str:
    return _csv_string(
        ["example_id", "misclass_count", "times_in_test", "ratio"],
        [[r.example_id, r.misclass_count, r.times_in_test, f"{r.ratio:.3f}"] for r in rows],
    )


def render_errors_md(rows: Sequence[ErrorRow]) -> str:
    return markdown_table(
        ["Example", "Misclassified", "In test", "Ratio"],
        [[r.example_id, str(r.misclass_count), str(r.times_in_test), f"{r.ratio:.3f}"] for r in rows],
    )


# -- subgroup sensitivity contrast ------------------------------------------


def error_sensitivity_rows(
    examples: Sequence[Example],
    scores: Mapping[str, SensitivityResult],
    misclass_counts: Mapping[str, int],
    min_count: int = 1,
) -> list[SubgroupScoreRow]:
    """Mean sensitivity per subgroup over the full example set and again over
    the examples misclassified at least ``min_count`` times: 8 rows, Full
    block first. Empty subgroups stay visible with undefined means."""
    err = [ex for ex in examples if misclass_counts.get(ex.id, 0) >= min_count]
    return subgroup_means(examples, scores, dataset="Full") + subgroup_means(err, scores, dataset="Err")


def _score_cells(row: SubgroupScoreRow) -> tuple[str, str]:
    if not row.defined:
        return "", ""
    return f"{row.mean_raw:.2f}", f"{row.mean_norm:.3f}"


def render_sensitivity_csv(rows: Sequence[SubgroupScoreRow]) -> str:
    out = []
    for r in rows:
        raw, norm = _score_cells(r)
        out.append([r.dataset, r.euph_label, r.vague_label, r.n, raw, norm])
    return _csv_string(["dataset", "euph_label", "vague_label", "n", "mean_raw", "mean_norm"], out)


def render_sensitivity_md(rows: Sequence[SubgroupScoreRow]) -> str:
    body = []
    for r in rows:
        raw, norm = _score_cells(r)
        body.append([r.dataset, str(r.euph_label), str(r.vague_label), str(r.n), raw or "n/a", norm or "n/a"])
    return markdown_table(["Dataset", "Euph", "Vague", "n", "Mean score", "Mean norm"], body)


# -- language x backend results matrix ---------------------------------------


@dataclass(frozen=True)
class MatrixCell:
    f1: float
    precision: float
    recall: float
    n_runs: int


def results_matrix(results_list: Sequence[RunResults]) -> tuple[list[str], list[str], dict[tuple[str, str], MatrixCell]]:
    """Aggregate many results files into (languages, backends, cells).

    Each results file contributes one cell keyed by its provenance language
    and backend display name; duplicates are an error rather than a silent
    overwrite.
    """
    cells: dict[tuple[str, str], MatrixCell] = {}
    for results in results_list:
        language = str(results.provenance.get("language") or "?")
        backend = str(
            results.provenance.get("backend_display") or results.provenance.get("backend") or "?"
        )
        key = (language, backend)
        if key in cells:
            raise AnalysisError(f"duplicate results for language {language!r} backend {backend!r}")
        agg = results.aggregate
        cells[key] = MatrixCell(agg.macro_f1, agg.macro_precision, agg.macro_recall, agg.n_runs)
    languages = sorted({k[0] for k in cells})
    seen_backends = {k[1] for k in cells}
    backends = [b for b in CANONICAL_BACKENDS if b in seen_backends]
    backends += sorted(seen_backends - set(CANONICAL_BACKENDS))
    return languages, backends, cells


def render_results_csv(
    languages: Sequence[str], backends: Sequence[str], cells: Mapping[tuple[str, str], MatrixCell]
) -> str:
    rows = []
    for language in languages:
        for backend in backends:
            cell = cells.get((language, backend))
            if cell is None:
                continue
            rows.append(
                [language, backend, f"{cell.f1:.3f}", f"{cell.precision:.3f}", f"{cell.recall:.3f}", cell.n_runs]
            )
    return _csv_string(["language", "backend", "f1", "precision", "recall", "n_runs"], rows)


def render_results_md(
    languages: Sequence[str], backends: Sequence[str], cells: Mapping[tuple[str, str], MatrixCell]
) -> str:
    body = []
    missing: list[str] = []
    for language in languages:
        row = [language]
        for backend in backends:
            cell = cells.get((language, backend))
            if cell is None:
                row.append("")
                missing.append(f"{language} x {backend}")
            else:
                row.append(f"{cell.f1:.3f} / {cell.precision:.3f} / {cell.recall:.3f}")
        body.append(row)
    table = markdown_table(["Language"] + [f"{b} (F1 / P / R)" for b in backends], body)
    if missing:
        table += "\nMissing cells: " + ", ".join(missing) + "\n"
    return table
