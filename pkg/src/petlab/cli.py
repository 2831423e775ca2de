"""Command-line entrypoint.

Subcommand groups mirror the library modules: corpus, vagueness, sensitivity,
split, run, analyze. Every group takes --config/--seed/--out; --out is the
output file for single-artifact commands and the output directory for
multi-artifact ones. Every written artifact carries a provenance block
(config hash, root seed, RNG identifier, versions); files are written to a
`.partial` name first and renamed only on success, so an interrupted command
never leaves a truncated file under the final name.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .analysis import (
    by_language,
    by_vague,
    error_sensitivity_rows,
    frequent_errors,
    render_errors_csv,
    render_errors_md,
    render_results_csv,
    render_results_md,
    render_sensitivity_csv,
    render_sensitivity_md,
    render_slices_csv,
    render_slices_md,
    results_matrix,
    slice_metrics,
)
from .config import PipelineConfig, load_config
from .corpus import Corpus, load_corpus, split_by_language, stats, write_jsonl
from .embedding import load_vector_table, make_sentence_embedder
from .errors import (
    AnalysisError,
    ConfigError,
    CorpusValidationError,
    PetlabError,
    StageError,
)
from .figures import results_figure, sensitivity_figure, slice_figure
from .harness import (
    load_run_results,
    make_backend,
    run_experiment,
    run_replay,
    save_run_results,
)
from .sensitivity import Scorer, load_lexicon, subgroup_means
from .splits import (
    build_balanced_dataset,
    build_kfold,
    cap_per_pet,
    dataset_from_manifest,
    folds_from_manifest,
    load_manifest,
    write_manifest,
)
from .vagueness import (
    emit_review_queue,
    generalize_labels,
    load_annotations,
    load_decisions,
    merge_review,
    score_annotations,
    write_decisions,
)


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _provenance_line(cfg: PipelineConfig) -> str:
    return json.dumps(cfg.provenance(), sort_keys=True, ensure_ascii=False)


def _write_text(path: Path, content: str, cfg: PipelineConfig) -> Path:
    if path.suffix == ".md":
        header = f"<!-- provenance: {_provenance_line(cfg)} -->\n\n"
    else:
        header = f"# provenance: {_provenance_line(cfg)}\n"
    partial = path.with_name(path.name + ".partial")
    partial.write_text(header + content, encoding="utf-8")
    partial.replace(path)
    print(f"wrote {path}")
    return path


def _write_json(path: Path, payload: dict, cfg: PipelineConfig) -> Path:
    payload = {**payload, "_provenance": cfg.provenance()}
    partial = path.with_name(path.name + ".partial")
    with partial.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    partial.replace(path)
    print(f"wrote {path}")
    return path


def _write_corpus(path: Path, corpus: Corpus | Iterable, cfg: PipelineConfig) -> Path:
    # JSONL cannot carry comments, so provenance goes to a sidecar file
    partial = path.with_name(path.name + ".partial")
    write_jsonl(corpus, partial)
    partial.replace(path)
    sidecar = path.with_name(path.name + ".provenance.json")
    sidecar.write_text(json.dumps(cfg.provenance(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {path}")
    return path


def _write_results(path: Path, results, cfg: PipelineConfig) -> Path:
    results.provenance["config"] = cfg.provenance()
    partial = path.with_name(path.name + ".partial")
    save_run_results(results, partial)
    partial.replace(path)
    print(f"wrote {path}")
    return path


def _write_figure(render, path: Path, cfg: PipelineConfig) -> Path:
    partial = path.with_name(path.name + ".partial.png")
    render(partial, note=_provenance_line(cfg))
    partial.replace(path)
    print(f"wrote {path}")
    return path


def _load_cfg(args) -> PipelineConfig:
    overrides = {"seed": getattr(args, "seed", None)}
    if getattr(args, "corpus", None):
        overrides["corpus"] = args.corpus
    with _stage("config"):
        return load_config(getattr(args, "config", None), overrides)


def _out_dir(args, cfg: PipelineConfig) -> Path:
    out = getattr(args, "out", None)
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        return d
    return cfg.out_dir


def _out_file(args, cfg: PipelineConfig, default_name: str) -> Path:
    out = getattr(args, "out", None)
    if out:
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p
    return cfg.out_dir / default_name


def _load_valid_corpus(path: Path, cfg: PipelineConfig) -> Corpus:
    result = load_corpus(path, column_map=cfg.column_map)
    if result.rejected:
        first = "; ".join(f"line {r.line}: {r.message}" for r in result.rejected[:3])
        raise CorpusValidationError(
            f"{path}: {len(result.rejected)} invalid records ({first}, ...)"
        )
    return result.corpus


def _corpus_from_cfg(cfg: PipelineConfig) -> Corpus:
    cfg.require("corpus")
    with _stage("corpus"):
        return _load_valid_corpus(cfg.corpus, cfg)


def _scorer_from_cfg(cfg: PipelineConfig) -> Scorer:
    cfg.require("vector_table", "lexicon")
    with _stage("vectors"):
        table = load_vector_table(cfg.vector_table)
        lexicon = load_lexicon(cfg.lexicon)
        return Scorer(table, lexicon)


def _backend_from_cfg(cfg: PipelineConfig):
    with _stage("backend"):
        table = load_vector_table(cfg.vector_table) if cfg.vector_table else None
        lexicon = load_lexicon(cfg.lexicon) if cfg.lexicon else None
        return make_backend(cfg.backend, table=table, lexicon=lexicon)


def _decisions_from_cfg(args, cfg: PipelineConfig):
    """Decision rows either from a prior decisions CSV or scored fresh."""
    decisions_path = getattr(args, "decisions", None)
    if decisions_path:
        with _stage("decisions"):
            return load_decisions(decisions_path)
    cfg.require("annotations", "embedder")
    corpus = _corpus_from_cfg(cfg)
    with _stage("vagueness-score"):
        sets = load_annotations(cfg.annotations)
        embedder = make_sentence_embedder(cfg.embedder)
        return score_annotations(corpus, sets, embedder, cfg.vagueness)


# -- corpus ------------------------------------------------------------------


def cmd_corpus_validate(args) -> int:
    cfg = _load_cfg(args)
    with _stage("corpus"):
        result = load_corpus(args.path, column_map=cfg.column_map)
    print(f"{args.path}: {len(result.corpus)} valid records, {len(result.rejected)} rejected")
    for issue in result.rejected[:20]:
        print(f"  line {issue.line}: {issue.message}")
    if len(result.rejected) > 20:
        print(f"  ... and {len(result.rejected) - 20} more")
    if getattr(args, "out", None):
        _write_corpus(Path(args.out), result.corpus, cfg)
    return 1 if result.rejected else 0


def _stats_rows(corpus: Corpus, by_lang: bool) -> list[dict]:
    rows = []
    parts = split_by_language(corpus).items() if by_lang else [(corpus.language_tag or "all", corpus)]
    for name, part in parts:
        s = stats(part)
        rows.append(
            {
                "language": name,
                "total": s.total,
                "euph": s.euph,
                "non_euph": s.non_euph,
                "total_pets": s.total_pets,
                "always_euph_pets": s.always_euph_pets,
                "ambiguous_pets": s.ambiguous_pets,
                "never_euph_pets": s.never_euph_pets,
            }
        )
    return rows


def cmd_corpus_stats(args) -> int:
    cfg = _load_cfg(args)
    with _stage("corpus"):
        corpus = _load_valid_corpus(Path(args.path), cfg)
        rows = _stats_rows(corpus, args.by_language)
    header = ["language", "total", "euph", "non_euph", "total_pets", "always", "ambiguous", "never"]
    print("  ".join(header))
    for r in rows:
        print(
            f"{r['language']}  {r['total']}  {r['euph']}  {r['non_euph']}  "
            f"{r['total_pets']}  {r['always_euph_pets']}  {r['ambiguous_pets']}  {r['never_euph_pets']}"
        )
    if getattr(args, "out", None):
        _write_json(Path(args.out), {"rows": rows}, cfg)
    return 0


# -- vagueness ---------------------------------------------------------------


def cmd_vagueness_score(args) -> int:
    cfg = _load_cfg(args)
    decisions = _decisions_from_cfg(args, cfg)
    out = _out_file(args, cfg, "decisions.csv")
    with _stage("write"):
        partial = out.with_name(out.name + ".partial")
        write_decisions(decisions, partial)
        _prepend_provenance(partial, cfg)
        partial.replace(out)
    print(f"wrote {out}")
    counts: dict[str, int] = {}
    for d in decisions:
        counts[d.outcome.value] = counts.get(d.outcome.value, 0) + 1
    for outcome, n in sorted(counts.items()):
        print(f"{outcome}: {n}")
    return 0


def _prepend_provenance(path: Path, cfg: PipelineConfig) -> None:
    body = path.read_text(encoding="utf-8")
    path.write_text(f"# provenance: {_provenance_line(cfg)}\n" + body, encoding="utf-8")


def cmd_vagueness_queue(args) -> int:
    cfg = _load_cfg(args)
    cfg.require("annotations")
    decisions = _decisions_from_cfg(args, cfg)
    out = _out_file(args, cfg, "review_queue.csv")
    with _stage("review-queue"):
        sets = load_annotations(cfg.annotations)
        partial = out.with_name(out.name + ".partial")
        n = emit_review_queue(decisions, sets, partial)
        _prepend_provenance(partial, cfg)
        partial.replace(out)
    print(f"wrote {out} ({n} rows for review)")
    return 0


def cmd_vagueness_merge(args) -> int:
    cfg = _load_cfg(args)
    review = getattr(args, "review", None) or cfg.review
    if review is None:
        raise StageError("review-merge", ConfigError("no review file given (--review or config)"))
    decisions = _decisions_from_cfg(args, cfg)
    with _stage("review-merge"):
        merged = merge_review(decisions, review)
    out = _out_file(args, cfg, "decisions_merged.csv")
    with _stage("write"):
        partial = out.with_name(out.name + ".partial")
        write_decisions(merged, partial)
        _prepend_provenance(partial, cfg)
        partial.replace(out)
    print(f"wrote {out}")
    unresolved = sum(1 for d in merged if not d.resolved)
    print(f"unresolved after merge: {unresolved}")
    return 0


def _write_generalize_outputs(cfg: PipelineConfig, result, out_dir: Path) -> None:
    _write_corpus(out_dir / "labeled_corpus.jsonl", result.corpus, cfg)
    labels_csv = "pet,euph_label,vague_label,support\n" + "".join(
        f"{l.pet_id},{l.euph_label},{l.vague_label},{l.support}\n" for l in result.labels
    )
    _write_text(out_dir / "pet_sense_labels.csv", labels_csv, cfg)
    uncovered_csv = "pet,euph_label,reason,example_ids\n" + "".join(
        f"{u.pet_id},{u.euph_label},{u.reason},{'|'.join(u.example_ids)}\n" for u in result.uncovered
    )
    _write_text(out_dir / "uncovered.csv", uncovered_csv, cfg)


def cmd_vagueness_generalize(args) -> int:
    cfg = _load_cfg(args)
    decisions = _decisions_from_cfg(args, cfg)
    if cfg.review is not None:
        with _stage("review-merge"):
            decisions = merge_review(decisions, cfg.review)
    corpus = _corpus_from_cfg(cfg)
    with _stage("generalize"):
        result = generalize_labels(corpus, decisions)
    _write_generalize_outputs(cfg, result, _out_dir(args, cfg))
    labeled = sum(1 for ex in result.corpus if ex.vague_label is not None)
    print(f"labeled examples: {labeled}; uncovered (pet, label) pairs: {len(result.uncovered)}")
    return 0


def cmd_vagueness_pipeline(args) -> int:
    """Full labeling chain: score, queue, optional merge, generalize."""
    cfg = _load_cfg(args)
    cfg.require("corpus", "annotations", "embedder")
    out_dir = _out_dir(args, cfg)
    corpus = _corpus_from_cfg(cfg)
    with _stage("vagueness-score"):
        sets = load_annotations(cfg.annotations)
        embedder = make_sentence_embedder(cfg.embedder)
        decisions = score_annotations(corpus, sets, embedder, cfg.vagueness)
    with _stage("review-queue"):
        queue_partial = (out_dir / "review_queue.csv.partial")
        queued = emit_review_queue(decisions, sets, queue_partial)
        _prepend_provenance(queue_partial, cfg)
        queue_partial.replace(out_dir / "review_queue.csv")
    print(f"wrote {out_dir / 'review_queue.csv'} ({queued} rows)")
    if cfg.review is not None:
        with _stage("review-merge"):
            decisions = merge_review(decisions, cfg.review)
    with _stage("generalize"):
        result = generalize_labels(corpus, decisions)
    _write_generalize_outputs(cfg, result, out_dir)
    counts = {key: 0 for key in ((1, 1), (1, 0), (0, 1), (0, 0))}
    for ex in result.corpus:
        if ex.vague_label is not None:
            counts[(ex.euph_label, ex.vague_label)] += 1
    print("subgroup counts (euph,vague):")
    for (e, v), n in counts.items():
        print(f"  ({e},{v}): {n}")
    print(f"uncovered pairs: {len(result.uncovered)}; queued for review: {queued}")
    return 0


# -- sensitivity -------------------------------------------------------------


def cmd_sensitivity_score(args) -> int:
    cfg = _load_cfg(args)
    corpus = _corpus_from_cfg(cfg)
    scorer = _scorer_from_cfg(cfg)
    with _stage("sensitivity"):
        results = scorer.score_corpus(corpus)
    lines = ["example_id,raw,token_count,norm,oov"]
    for ex in corpus:
        r = results[ex.id]
        lines.append(f"{r.example_id},{r.raw_score},{r.token_count},{r.norm_score:.6f},{len(r.oov_tokens)}")
    out = _out_file(args, cfg, "sensitivity_scores.csv")
    _write_text(out, "\n".join(lines) + "\n", cfg)
    if scorer.missing_lexicon:
        print(f"note: {len(scorer.missing_lexicon)} lexicon words have no vector: "
              f"{', '.join(scorer.missing_lexicon[:5])}")
    return 0


def _read_ids_file(path: str | Path) -> set[str]:
    ids = set()
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            token = line.split("#", 1)[0].strip()
            if token:
                ids.add(token)
    return ids


def cmd_sensitivity_table(args) -> int:
    cfg = _load_cfg(args)
    corpus = _corpus_from_cfg(cfg)
    scorer = _scorer_from_cfg(cfg)
    with _stage("sensitivity"):
        results = scorer.score_corpus(corpus)
        rows = subgroup_means(list(corpus), results, dataset="Full")
        if getattr(args, "errors", None):
            err_ids = _read_ids_file(args.errors)
            unknown = sorted(err_ids - corpus.ids())
            if unknown:
                raise AnalysisError(f"error ids not in corpus: {unknown[:5]}")
            err_examples = [ex for ex in corpus if ex.id in err_ids]
            rows += subgroup_means(err_examples, results, dataset="Err")
    stem = getattr(args, "out", None) or str(cfg.out_dir / cfg.reports["sensitivity"])
    _write_text(Path(stem + ".csv"), render_sensitivity_csv(rows), cfg)
    _write_text(Path(stem + ".md"), render_sensitivity_md(rows), cfg)
    _write_figure(lambda p, note: sensitivity_figure(rows, p, note), Path(stem + ".png"), cfg)
    return 0


# -- split -------------------------------------------------------------------


def cmd_split_balanced(args) -> int:
    cfg = _load_cfg(args)
    corpus = _corpus_from_cfg(cfg)
    plan = replace(cfg.split, kind="balanced")
    with _stage("split"):
        dataset, manifest = build_balanced_dataset(corpus, plan)
    out = _out_file(args, cfg, "split_balanced.json")
    _write_json(out, manifest, cfg)
    stages = manifest["stages"]
    print(
        f"sampled {stages['after_balance']} "
        f"(train {len(dataset.train)}, test {len(dataset.test)})"
    )
    print(f"train per subgroup: {manifest['train_subgroup_sizes']}")
    print(f"test per subgroup: {manifest['test_subgroup_sizes']}")
    return 0


def cmd_split_kfold(args) -> int:
    cfg = _load_cfg(args)
    corpus = _corpus_from_cfg(cfg)
    plan = replace(cfg.split, kind="kfold")
    with _stage("split"):
        folds, manifest = build_kfold(corpus, plan)
    out = _out_file(args, cfg, "split_kfold.json")
    _write_json(out, manifest, cfg)
    print(f"{len(folds)} folds over {manifest['stages']['after_balance']} examples")
    return 0


def cmd_split_cap(args) -> int:
    cfg = _load_cfg(args)
    corpus = _corpus_from_cfg(cfg)
    if cfg.split.per_pet_cap is None:
        raise StageError("split", ConfigError("split.per_pet_cap is null; nothing to cap"))
    with _stage("split"):
        rng = np.random.default_rng(cfg.split.seed)
        capped = cap_per_pet(list(corpus), cfg.split.per_pet_cap, rng)
    out = _out_file(args, cfg, "capped_corpus.jsonl")
    _write_corpus(out, capped, cfg)
    print(f"capped {len(corpus)} -> {len(capped)} examples (cap {cfg.split.per_pet_cap})")
    return 0


# -- run ---------------------------------------------------------------------


def _print_aggregate(results) -> None:
    agg = results.aggregate
    print(
        f"runs: {agg.n_runs}  macro-F1 {agg.macro_f1:.3f}  "
        f"P {agg.macro_precision:.3f}  R {agg.macro_recall:.3f}"
    )


def _run(args, kind: str, default_name: str) -> int:
    cfg = _load_cfg(args)
    corpus = _corpus_from_cfg(cfg)
    backend = _backend_from_cfg(cfg)
    plan = replace(cfg.split, kind=kind)
    with _stage("train"):
        results = run_experiment(corpus, plan, backend, cfg.train, cfg.n_runs, cfg.seed)
    _write_results(_out_file(args, cfg, default_name), results, cfg)
    _print_aggregate(results)
    return 0


def cmd_run_holdout(args) -> int:
    return _run(args, "balanced", "run_holdout.json")


def cmd_run_kfold(args) -> int:
    return _run(args, "kfold", "run_kfold.json")


def cmd_run_replay(args) -> int:
    cfg = _load_cfg(args)
    corpus = _corpus_from_cfg(cfg)
    backend = _backend_from_cfg(cfg)
    with _stage("replay"):
        manifest = load_manifest(args.manifest)
        if manifest.get("kind") == "balanced":
            datasets = [dataset_from_manifest(corpus, manifest)]
        else:
            datasets = folds_from_manifest(corpus, manifest)
        results = run_replay(corpus, datasets, backend, cfg.train, cfg.seed)
    _write_results(_out_file(args, cfg, "run_replay.json"), results, cfg)
    _print_aggregate(results)
    return 0


def _analysis_reports(cfg: PipelineConfig, out_dir: Path, corpus: Corpus, results) -> None:
    with _stage("analyze"):
        slice_rows = slice_metrics(results, corpus)
        error_rows = frequent_errors(results)
        scorer = _scorer_from_cfg(cfg)
        scores = scorer.score_corpus(corpus)
        labeled = [ex for ex in corpus if ex.vague_label is not None]
        sens_rows = error_sensitivity_rows(labeled, scores, results.misclass_counts)
        languages, backends, cells = results_matrix([results])
    slices_stem = str(out_dir / cfg.reports["slices"])
    _write_text(Path(slices_stem + ".csv"), render_slices_csv(slice_rows), cfg)
    _write_text(Path(slices_stem + ".md"), render_slices_md(slice_rows), cfg)
    _write_figure(lambda p, note: slice_figure(slice_rows, p, note), Path(slices_stem + ".png"), cfg)
    errors_stem = str(out_dir / cfg.reports["errors"])
    _write_text(Path(errors_stem + ".csv"), render_errors_csv(error_rows), cfg)
    _write_text(Path(errors_stem + ".md"), render_errors_md(error_rows), cfg)
    sens_stem = str(out_dir / cfg.reports["sensitivity"])
    _write_text(Path(sens_stem + ".csv"), render_sensitivity_csv(sens_rows), cfg)
    _write_text(Path(sens_stem + ".md"), render_sensitivity_md(sens_rows), cfg)
    _write_figure(lambda p, note: sensitivity_figure(sens_rows, p, note), Path(sens_stem + ".png"), cfg)
    results_stem = str(out_dir / cfg.reports["results"])
    _write_text(Path(results_stem + ".csv"), render_results_csv(languages, backends, cells), cfg)
    _write_text(Path(results_stem + ".md"), render_results_md(languages, backends, cells), cfg)
    _write_figure(
        lambda p, note: results_figure(languages, backends, cells, p, note),
        Path(results_stem + ".png"),
        cfg,
    )


def cmd_run_experiment(args) -> int:
    """Splits, training runs, and all reports in one pass."""
    cfg = _load_cfg(args)
    out_dir = _out_dir(args, cfg)
    corpus = _corpus_from_cfg(cfg)
    backend = _backend_from_cfg(cfg)
    plan = cfg.split
    with _stage("split"):
        if plan.kind == "balanced":
            _, manifest = build_balanced_dataset(corpus, plan)
        else:
            _, manifest = build_kfold(corpus, plan)
    _write_json(out_dir / f"split_{plan.kind}.json", manifest, cfg)
    with _stage("train"):
        results = run_experiment(corpus, plan, backend, cfg.train, cfg.n_runs, cfg.seed)
    _write_results(out_dir / "run_results.json", results, cfg)
    _analysis_reports(cfg, out_dir, corpus, results)
    _print_aggregate(results)
    return 0


# -- analyze -----------------------------------------------------------------


def _load_results(path: str | Path):
    with _stage("results"):
        return load_run_results(path)


def cmd_analyze_slices(args) -> int:
    cfg = _load_cfg(args)
    corpus = _corpus_from_cfg(cfg)
    results = _load_results(args.results)
    with _stage("analyze"):
        slicer = by_language if args.by == "language" else by_vague
        rows = slice_metrics(results, corpus, slicer)
    stem = getattr(args, "out", None) or str(cfg.out_dir / cfg.reports["slices"])
    _write_text(Path(stem + ".csv"), render_slices_csv(rows), cfg)
    _write_text(Path(stem + ".md"), render_slices_md(rows), cfg)
    _write_figure(lambda p, note: slice_figure(rows, p, note), Path(stem + ".png"), cfg)
    return 0


def cmd_analyze_errors(args) -> int:
    cfg = _load_cfg(args)
    results = _load_results(args.results)
    with _stage("analyze"):
        rows = frequent_errors(results, threshold=args.threshold)
    stem = getattr(args, "out", None) or str(cfg.out_dir / cfg.reports["errors"])
    _write_text(Path(stem + ".csv"), render_errors_csv(rows), cfg)
    _write_text(Path(stem + ".md"), render_errors_md(rows), cfg)
    print(f"{len(rows)} examples misclassified >= {args.threshold} times")
    return 0


def cmd_analyze_sensitivity_table(args) -> int:
    cfg = _load_cfg(args)
    corpus = _corpus_from_cfg(cfg)
    results = _load_results(args.results)
    scorer = _scorer_from_cfg(cfg)
    with _stage("analyze"):
        scores = scorer.score_corpus(corpus)
        labeled = [ex for ex in corpus if ex.vague_label is not None]
        rows = error_sensitivity_rows(labeled, scores, results.misclass_counts, min_count=args.min_count)
    stem = getattr(args, "out", None) or str(cfg.out_dir / cfg.reports["sensitivity"])
    _write_text(Path(stem + ".csv"), render_sensitivity_csv(rows), cfg)
    _write_text(Path(stem + ".md"), render_sensitivity_md(rows), cfg)
    _write_figure(lambda p, note: sensitivity_figure(rows, p, note), Path(stem + ".png"), cfg)
    return 0


def cmd_analyze_results_table(args) -> int:
    cfg = _load_cfg(args)
    with _stage("analyze"):
        all_results = [load_run_results(p) for p in args.results]
        languages, backends, cells = results_matrix(all_results)
    stem = getattr(args, "out", None) or str(cfg.out_dir / cfg.reports["results"])
    _write_text(Path(stem + ".csv"), render_results_csv(languages, backends, cells), cfg)
    _write_text(Path(stem + ".md"), render_results_md(languages, backends, cells), cfg)
    _write_figure(
        lambda p, note: results_figure(languages, backends, cells, p, note),
        Path(stem + ".png"),
        cfg,
    )
    return 0


# -- parser ------------------------------------------------------------------


def _common(sub: argparse.ArgumentParser, corpus_flag: bool = False) -> None:
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--seed", type=int, default=None, help="root seed (overrides config)")
    sub.add_argument("--out", default=None, help="output file (or directory for multi-file commands)")
    if corpus_flag:
        sub.add_argument("--corpus", default=None, help="corpus path (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="petlab",
        description="Euphemism disambiguation toolkit: corpora, vagueness labels, "
        "sensitivity scores, splits, classification runs, reports.",
    )
    parser.add_argument("--version", action="version", version=f"petlab {__version__}")
    groups = parser.add_subparsers(dest="command", required=True)

    corpus_p = groups.add_parser("corpus", help="validate corpora and report statistics")
    corpus_sub = corpus_p.add_subparsers(dest="subcommand", required=True)
    p = corpus_sub.add_parser("validate", help="check every record against the schema")
    p.add_argument("path")
    _common(p)
    p.set_defaults(func=cmd_corpus_validate)
    p = corpus_sub.add_parser("stats", help="corpus size and PET ambiguity counts")
    p.add_argument("path")
    p.add_argument("--by-language", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_corpus_stats)

    vag_p = groups.add_parser("vagueness", help="paraphrase-agreement vagueness labeling")
    vag_sub = vag_p.add_subparsers(dest="subcommand", required=True)
    for name, func, extra in (
        ("score", cmd_vagueness_score, ()),
        ("queue", cmd_vagueness_queue, ()),
        ("merge", cmd_vagueness_merge, ("review",)),
        ("generalize", cmd_vagueness_generalize, ()),
        ("pipeline", cmd_vagueness_pipeline, ()),
    ):
        p = vag_sub.add_parser(name)
        _common(p, corpus_flag=True)
        p.add_argument("--decisions", default=None, help="reuse a prior decisions CSV")
        if "review" in extra:
            p.add_argument("--review", default=None, help="filled-in review queue CSV")
        p.set_defaults(func=func)

    sens_p = groups.add_parser("sensitivity", help="sensitive-topic scoring")
    sens_sub = sens_p.add_subparsers(dest="subcommand", required=True)
    p = sens_sub.add_parser("score", help="per-example scores CSV")
    _common(p, corpus_flag=True)
    p.set_defaults(func=cmd_sensitivity_score)
    p = sens_sub.add_parser("table", help="subgroup mean scores (CSV + markdown + figure)")
    _common(p, corpus_flag=True)
    p.add_argument("--errors", default=None, help="file of misclassified example ids, one per line")
    p.set_defaults(func=cmd_sensitivity_table)

    split_p = groups.add_parser("split", help="balanced datasets, folds, per-PET caps")
    split_sub = split_p.add_subparsers(dest="subcommand", required=True)
    for name, func in (("balanced", cmd_split_balanced), ("kfold", cmd_split_kfold), ("cap", cmd_split_cap)):
        p = split_sub.add_parser(name)
        _common(p, corpus_flag=True)
        p.set_defaults(func=func)

    run_p = groups.add_parser("run", help="train/evaluate experiments")
    run_sub = run_p.add_subparsers(dest="subcommand", required=True)
    p = run_sub.add_parser("holdout", help="n balanced-resample runs")
    _common(p, corpus_flag=True)
    p.set_defaults(func=cmd_run_holdout)
    p = run_sub.add_parser("kfold", help="one run per stratified fold")
    _common(p, corpus_flag=True)
    p.set_defaults(func=cmd_run_kfold)
    p = run_sub.add_parser("replay", help="re-run from a split manifest")
    _common(p, corpus_flag=True)
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_run_replay)
    p = run_sub.add_parser("experiment", help="split + train + all reports")
    _common(p, corpus_flag=True)
    p.set_defaults(func=cmd_run_experiment)

    an_p = groups.add_parser("analyze", help="reports from saved run results")
    an_sub = an_p.add_subparsers(dest="subcommand", required=True)
    p = an_sub.add_parser("slices", help="per-slice metrics table")
    _common(p, corpus_flag=True)
    p.add_argument("--results", required=True)
    p.add_argument("--by", choices=["vague", "language"], default="vague")
    p.set_defaults(func=cmd_analyze_slices)
    p = an_sub.add_parser("errors", help="frequently misclassified examples")
    _common(p)
    p.add_argument("--results", required=True)
    p.add_argument("--threshold", type=int, default=10)
    p.set_defaults(func=cmd_analyze_errors)
    p = an_sub.add_parser("sensitivity-table", help="subgroup sensitivity, full vs errors")
    _common(p, corpus_flag=True)
    p.add_argument("--results", required=True)
    p.add_argument("--min-count", type=int, default=1, dest="min_count")
    p.set_defaults(func=cmd_analyze_sensitivity_table)
    p = an_sub.add_parser("results-table", help="language x backend matrix from many results files")
    _common(p)
    p.add_argument("--results", nargs="+", required=True)
    p.set_defaults(func=cmd_analyze_results_table)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PetlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
