"""Sensitive-topic scoring: pair counting, normalization, subgroup means."""

from __future__ import annotations

import numpy as np
import pytest

from petlab.corpus import Corpus
from petlab.errors import AnalysisError
from petlab.sensitivity import (
    DEFAULT_SENSITIVE_WORDS,
    Scorer,
    SensitiveLexicon,
    default_lexicon,
    load_lexicon,
    subgroup_means,
)

from conftest import make_example, table_from


class TestLexicon:
    def test_default_has_22_words(self):
        lex = default_lexicon()
        assert len(lex.words) == 22
        assert len(set(lex.words)) == 22
        assert "death" in lex.words and "employment" in lex.words
        assert lex.threshold == 0.5

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text(
            "# topical words\ndeath\nKill  # folded and deduped\nkill\n\npoor\n",
            encoding="utf-8",
        )
        lex = load_lexicon(path)
        assert lex.words == ("death", "kill", "poor")

    def test_bundled_file_matches_default(self):
        from petlab.config import bundled_path

        lex = load_lexicon(bundled_path("sensitive_words.txt"))
        assert lex.words == DEFAULT_SENSITIVE_WORDS

    def test_validation(self):
        with pytest.raises(ValueError):
            SensitiveLexicon(())
        with pytest.raises(ValueError):
            SensitiveLexicon(("death",), threshold=1.0)


def _scorer() -> Scorer:
    """death on axis 0, kill on axis 1; funeral is near both, party near kill."""
    table = table_from(
        {
            "death": [1, 0, 0],
            "kill": [0, 1, 0],
            "funeral": [0.6, 0.6, 0.0],   # cos 0.707 with each
            "party": [0.0, 0.8, 0.6],     # cos 0.8 with kill only
            "the": [0.0, 0.0, 1.0],       # cos 0 with both
        }
    )
    return Scorer(table, SensitiveLexicon(("death", "kill")))


class TestScorer:
    def test_pair_hits(self):
        s = _scorer()
        assert s.pair_hits("funeral") == 2
        assert s.pair_hits("party") == 1
        assert s.pair_hits("the") == 0
        assert s.pair_hits("unknownword") == 0

    def test_raw_and_normalized(self):
        s = _scorer()
        r = s.score_text("funeral party")
        assert r.raw_score == 3
        assert r.token_count == 2
        assert r.norm_score == pytest.approx(1.5)
        assert r.oov_tokens == ()

    def test_oov_in_denominator(self):
        s = _scorer()
        r = s.score_text("funeral party zebra")
        assert r.raw_score == 3
        assert r.token_count == 3
        assert r.norm_score == pytest.approx(1.0)
        assert r.oov_tokens == ("zebra",)

    def test_threshold_is_strict(self):
        # cos([1,1,1,1],[1,1,-1,1]) = 2/4 = 0.5 exactly: not a hit
        table = table_from({"topic": [1, 1, 1, 1], "edge": [1, 1, -1, 1], "hit": [1, 1, 0, 1]})
        s = Scorer(table, SensitiveLexicon(("topic",)))
        assert s.pair_hits("edge") == 0
        # cos([1,1,1,1],[1,1,0,1]) = 3/sqrt(12) = 0.866...: a hit
        assert s.pair_hits("hit") == 1

    def test_lexicon_words_score_themselves(self):
        s = _scorer()
        assert s.score_text("death").raw_score == 1

    def test_pet_tokens_are_scored(self):
        s = _scorer()
        ex = make_example(id="p1", text="the <funeral party> the", pet="funeral party", euph_label=1)
        r = s.score_example(ex)
        assert r.raw_score == 3
        assert r.token_count == 4

    def test_no_tokens_raises(self):
        s = _scorer()
        with pytest.raises(AnalysisError):
            s.score_text("... !!！")

    def test_missing_lexicon_words_tracked(self):
        table = table_from({"death": [1, 0], "funeral": [1, 1]})
        s = Scorer(table, SensitiveLexicon(("death", "bathroom")))
        assert s.missing_lexicon == ("bathroom",)
        # scoring still works against the words that do have vectors
        assert s.score_text("funeral").raw_score == 1

    def test_score_corpus_keys(self):
        s = _scorer()
        corpus = Corpus(
            (
                make_example(id="k1", text="a <funeral> here", pet="funeral", euph_label=1),
                make_example(id="k2", text="a <party> there", pet="party", euph_label=0),
            )
        )
        results = s.score_corpus(corpus)
        assert set(results) == {"k1", "k2"}
        assert results["k1"].example_id == "k1"

    def test_matches_brute_force_on_random_tables(self):
        rng = np.random.default_rng(41)
        vocab = [f"w{i}" for i in range(30)]
        for _ in range(50):
            table = table_from({w: rng.normal(size=4).tolist() for w in vocab})
            lex_words = tuple(rng.choice(vocab, size=5, replace=False).tolist())
            s = Scorer(table, SensitiveLexicon(lex_words))
            text_tokens = [vocab[int(rng.integers(len(vocab)))] for _ in range(10)]
            got = s.score_text(" ".join(text_tokens))
            want = 0
            for tok in text_tokens:
                tv = table.get(tok)
                for lw in lex_words:
                    lv = table.get(lw)
                    c = float(np.dot(tv, lv) / (np.linalg.norm(tv) * np.linalg.norm(lv)))
                    if c > 0.5:
                        want += 1
            assert got.raw_score == want
            assert got.norm_score == pytest.approx(want / 10)


class TestSubgroupMeans:
    def _fixtures(self):
        corpus = [
            make_example(id=f"s{i}", text=f"w{i} <p> y", pet="p",
                         euph_label=e, vague_label=v)
            for i, (e, v) in enumerate([(1, 1), (1, 1), (1, 0), (0, 1)], start=1)
        ]
        from petlab.sensitivity import SensitivityResult

        results = {
            "s1": SensitivityResult("s1", 4, 8, 0.5, ()),
            "s2": SensitivityResult("s2", 2, 8, 0.25, ()),
            "s3": SensitivityResult("s3", 6, 6, 1.0, ()),
            "s4": SensitivityResult("s4", 0, 5, 0.0, ()),
        }
        return corpus, results

    def test_means_and_row_order(self):
        corpus, results = self._fixtures()
        rows = subgroup_means(corpus, results)
        assert [(r.euph_label, r.vague_label) for r in rows] == [(1, 1), (1, 0), (0, 1), (0, 0)]
        assert rows[0].n == 2
        assert rows[0].mean_raw == pytest.approx(3.0)
        assert rows[0].mean_norm == pytest.approx(0.375)
        assert rows[1].mean_raw == pytest.approx(6.0)
        assert rows[2].mean_norm == pytest.approx(0.0)

    def test_empty_subgroup_undefined_not_zero(self):
        corpus, results = self._fixtures()
        rows = subgroup_means(corpus, results)
        empty = rows[3]
        assert (empty.euph_label, empty.vague_label) == (0, 0)
        assert empty.n == 0
        assert not empty.defined
        assert empty.mean_raw is None and empty.mean_norm is None

    def test_dataset_tag(self):
        corpus, results = self._fixtures()
        rows = subgroup_means(corpus, results, dataset="Err")
        assert {r.dataset for r in rows} == {"Err"}

    def test_missing_vague_label_raises(self):
        corpus, results = self._fixtures()
        corpus.append(make_example(id="s9", text="a <p> b", pet="p", euph_label=0))
        results["s9"] = results["s1"]
        with pytest.raises(AnalysisError, match="vague"):
            subgroup_means(corpus, results)

    def test_missing_score_raises(self):
        corpus, results = self._fixtures()
        del results["s2"]
        with pytest.raises(AnalysisError, match="score"):
            subgroup_means(corpus, results)
