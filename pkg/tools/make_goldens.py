"""Regenerate the golden report fixtures under tests/data/golden/.

Two small planted-signal corpora (en, yo) are run through the reference
backend; the corpora, word vectors, and run results are saved as fixtures,
then reloaded exactly the way the tests reload them before rendering the
expected tables. Rendered tables carry no provenance headers, so the
expected files are byte-stable across machines.

Run from anywhere: python3 tools/make_goldens.py
"""

from __future__ import annotations

from pathlib import Path

from petlab.analysis import (
    error_sensitivity_rows,
    render_results_csv,
    render_results_md,
    render_sensitivity_csv,
    render_sensitivity_md,
    render_slices_csv,
    render_slices_md,
    results_matrix,
    slice_metrics,
)
from petlab.corpus import load_corpus, write_jsonl
from petlab.embedding import load_vector_table
from petlab.harness import TrainConfig, load_run_results, make_backend, run_experiment, save_run_results
from petlab.sensitivity import DEFAULT_SENSITIVE_WORDS, Scorer, SensitiveLexicon
from petlab.splits import SplitPlan
from petlab.synthetic import planted_signal_corpus

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden"

CORPUS_SEEDS = {"en": 101, "yo": 202}
RUN_SEED = 11
N_PER_SUBGROUP = 6
N_RUNS = 3


def write_vector_tsv(table, path: Path) -> None:
    lines = []
    for token in table.tokens():
        vec = table.get(token)
        lines.append("\t".join([token, *(repr(float(x)) for x in vec)]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_language(code: str) -> None:
    corpus, table, lexicon = planted_signal_corpus(
        seed=CORPUS_SEEDS[code], n_per_subgroup=N_PER_SUBGROUP, language=code
    )
    write_jsonl(corpus, GOLDEN / f"corpus_{code}.jsonl")
    write_vector_tsv(table, GOLDEN / f"vectors_{code}.tsv")
    backend = make_backend("reference-linear", table=table, lexicon=lexicon)
    results = run_experiment(corpus, SplitPlan(), backend, TrainConfig(), n_runs=N_RUNS, seed=RUN_SEED)
    save_run_results(results, GOLDEN / f"results_{code}.json")


def render_expected() -> None:
    # reload from the fixture files so the goldens match the test's path exactly
    corpus_en = load_corpus(GOLDEN / "corpus_en.jsonl").corpus
    table_en = load_vector_table(GOLDEN / "vectors_en.tsv")
    results_en = load_run_results(GOLDEN / "results_en.json")
    results_yo = load_run_results(GOLDEN / "results_yo.json")

    slice_rows = slice_metrics(results_en, corpus_en)
    (GOLDEN / "table4.csv").write_text(render_slices_csv(slice_rows), encoding="utf-8")
    (GOLDEN / "table4.md").write_text(render_slices_md(slice_rows), encoding="utf-8")

    scorer = Scorer(table_en, SensitiveLexicon(DEFAULT_SENSITIVE_WORDS))
    scores = scorer.score_corpus(corpus_en)
    labeled = [ex for ex in corpus_en if ex.vague_label is not None]
    sens_rows = error_sensitivity_rows(labeled, scores, results_en.misclass_counts)
    (GOLDEN / "table6.csv").write_text(render_sensitivity_csv(sens_rows), encoding="utf-8")
    (GOLDEN / "table6.md").write_text(render_sensitivity_md(sens_rows), encoding="utf-8")

    languages, backends, cells = results_matrix([results_en, results_yo])
    (GOLDEN / "table7.csv").write_text(render_results_csv(languages, backends, cells), encoding="utf-8")
    (GOLDEN / "table7.md").write_text(render_results_md(languages, backends, cells), encoding="utf-8")


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for code in CORPUS_SEEDS:
        build_language(code)
    render_expected()
    for name in sorted(p.name for p in GOLDEN.iterdir()):
        print(f"wrote {name}")


if __name__ == "__main__":
    main()
