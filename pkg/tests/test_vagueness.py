"""Agreement scoring, threshold decisions, review queue, generalization."""

from __future__ import annotations

import csv
import itertools

import numpy as np
import pytest

from petlab.corpus import Corpus
from petlab.embedding import cosine
from petlab.errors import AnnotationError
from petlab.vagueness import (
    Decision,
    Outcome,
    ParaphraseSet,
    VaguenessConfig,
    emit_review_queue,
    generalize_labels,
    load_annotations,
    load_decisions,
    mean_pairwise_similarity,
    merge_review,
    score_annotations,
    threshold_decision,
    write_decisions,
)

from conftest import DictSentenceEmbedder, make_example


class TestThresholds:
    @pytest.mark.parametrize(
        "score, outcome",
        [
            (0.90, Outcome.NON_VAGUE),
            (0.651, Outcome.NON_VAGUE),
            (0.65, Outcome.MANUAL_REVIEW),   # boundary is exclusive
            (0.608, Outcome.MANUAL_REVIEW),
            (0.53, Outcome.MANUAL_REVIEW),
            (0.50, Outcome.MANUAL_REVIEW),   # boundary is exclusive
            (0.499, Outcome.VAGUE),
            (0.10, Outcome.VAGUE),
            (-0.20, Outcome.VAGUE),
        ],
    )
    def test_decision_bands(self, score, outcome):
        assert threshold_decision(score) is outcome

    def test_custom_thresholds(self):
        cfg = VaguenessConfig(hi=0.8, lo=0.2)
        assert threshold_decision(0.75, cfg) is Outcome.MANUAL_REVIEW
        assert threshold_decision(0.81, cfg) is Outcome.NON_VAGUE

    @pytest.mark.parametrize("hi, lo", [(0.5, 0.5), (0.4, 0.6), (1.2, 0.5), (0.6, 0.0)])
    def test_invalid_thresholds(self, hi, lo):
        with pytest.raises(ValueError):
            VaguenessConfig(hi=hi, lo=lo)


class TestMeanPairwise:
    def test_two_responses_is_plain_cosine(self):
        emb = DictSentenceEmbedder({"a": [1, 0], "b": [1, 1]})
        got = mean_pairwise_similarity(emb, ["a", "b"])
        assert got == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-12)

    def test_three_responses_hand_value(self):
        # pairs: (e1,e2)=0, (e1,mid)=1/sqrt2, (e2,mid)=1/sqrt2
        emb = DictSentenceEmbedder({"p": [1, 0], "q": [0, 1], "r": [1, 1]})
        want = (0.0 + 2.0 / np.sqrt(2.0)) / 3.0
        assert mean_pairwise_similarity(emb, ["p", "q", "r"]) == pytest.approx(want, abs=1e-12)

    def test_identical_responses_score_one(self):
        emb = DictSentenceEmbedder({"same": [2, 3, 4]})
        assert mean_pairwise_similarity(emb, ["same", "same", "same"]) == pytest.approx(1.0)

    def test_matches_brute_force_over_random_sets(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            names = [f"t{i}" for i in range(n)]
            vecs = {name: rng.normal(size=6).tolist() for name in names}
            emb = DictSentenceEmbedder(vecs)
            got = mean_pairwise_similarity(emb, names)
            pairs = list(itertools.combinations(names, 2))
            want = sum(cosine(np.array(vecs[a]), np.array(vecs[b])) for a, b in pairs) / len(pairs)
            assert got == pytest.approx(want, abs=1e-9)

    def test_rejects_single_response(self):
        emb = DictSentenceEmbedder({"a": [1, 0]})
        with pytest.raises(AnnotationError):
            mean_pairwise_similarity(emb, ["a"])


class TestParaphraseSets:
    def test_needs_two_responses(self):
        with pytest.raises(AnnotationError):
            ParaphraseSet("x", "text", ("only one",))

    def test_rejects_empty_response(self):
        with pytest.raises(AnnotationError):
            ParaphraseSet("x", "text", ("fine", "   "))

    def test_load_annotations(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text(
            "example_id,text,paraphrase_1,paraphrase_2,paraphrase_3\n"
            "e1,he is <between jobs> now,he is unemployed,he lost his job,he has no work\n"
            "e2,she <let go> of the rope,she released it,she dropped it,\n",
            encoding="utf-8",
        )
        sets = load_annotations(path)
        assert [s.example_id for s in sets] == ["e1", "e2"]
        assert len(sets[0].responses) == 3
        # trailing empty cell dropped
        assert len(sets[1].responses) == 2

    def test_load_annotations_bad_header(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("id,sentence,p1,p2\ne1,t,a,b\n", encoding="utf-8")
        with pytest.raises(AnnotationError):
            load_annotations(path)

    def test_load_annotations_too_few_responses(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text(
            "example_id,text,paraphrase_1,paraphrase_2\ne1,t,only one,\n",
            encoding="utf-8",
        )
        with pytest.raises(AnnotationError, match=":2:"):
            load_annotations(path)


def _embedder_for_scores() -> DictSentenceEmbedder:
    """Paraphrase trios with known mean pairwise agreement.

    "same"/"same2" are identical vectors (score 1.0); "mid*" mixes an
    orthogonal pair with their bisector (score 0.4714); "band*" lands in the
    review band at 0.55 via three unit vectors 55.24 degrees apart... easier:
    use two identical + one at a known angle.
    """
    return DictSentenceEmbedder(
        {
            "same a": [1, 0],
            "same b": [1, 0],
            "same c": [1, 0],
            "mid a": [1, 0],
            "mid b": [0, 1],
            "mid c": [1, 1],
            "band a": [1, 0],
            "band b": [1, 0],
            "band c": [-1, 8],
        }
    )


class TestScoreAnnotations:
    def _corpus(self):
        return Corpus(
            (
                make_example(id="e1", text="he is <between jobs> now", euph_label=1),
                make_example(id="e2", text="park <between jobs> sites", pet="between jobs", euph_label=0),
                make_example(id="e3", text="she was <let go> today", pet="let go", euph_label=1),
            )
        )

    def test_scores_and_outcomes(self):
        corpus = self._corpus()
        sets = [
            ParaphraseSet("e1", "he is between jobs now", ("same a", "same b", "same c")),
            ParaphraseSet("e2", "park between jobs sites", ("mid a", "mid b", "mid c")),
            ParaphraseSet("e3", "she was let go today", ("band a", "band b", "band c")),
        ]
        decisions = score_annotations(corpus, sets, _embedder_for_scores())
        by_id = {d.example_id: d for d in decisions}
        assert by_id["e1"].score == pytest.approx(1.0)
        assert by_id["e1"].outcome is Outcome.NON_VAGUE
        assert by_id["e1"].resolved_label == 0
        assert by_id["e2"].score == pytest.approx((2.0 / np.sqrt(2.0)) / 3.0, abs=1e-12)
        assert by_id["e2"].outcome is Outcome.VAGUE
        assert by_id["e2"].resolved_label == 1
        # (1 + c + c)/3 with c = cos([1,0],[-1,8]) = -1/sqrt(65) -> ~0.2506... wait
        band = (1.0 + 2.0 * (-1.0 / np.sqrt(65.0))) / 3.0
        assert by_id["e3"].score == pytest.approx(band, abs=1e-12)

    def test_marked_text_also_matches(self):
        corpus = self._corpus()
        sets = [ParaphraseSet("e1", "he is <between jobs> now", ("same a", "same b"))]
        decisions = score_annotations(corpus, sets, _embedder_for_scores())
        assert decisions[0].outcome is Outcome.NON_VAGUE

    def test_unknown_example_rejected(self):
        sets = [ParaphraseSet("ghost", "t", ("same a", "same b"))]
        with pytest.raises(AnnotationError, match="ghost"):
            score_annotations(self._corpus(), sets, _embedder_for_scores())

    def test_mismatched_text_rejected(self):
        sets = [ParaphraseSet("e1", "a completely different sentence", ("same a", "same b"))]
        with pytest.raises(AnnotationError, match="does not match"):
            score_annotations(self._corpus(), sets, _embedder_for_scores())


class TestDecisionIo:
    def test_round_trip(self, tmp_path):
        decisions = [
            Decision("e1", "between jobs", 1, 0.923077, Outcome.NON_VAGUE, 0),
            Decision("e2", "let go", 0, 0.55, Outcome.MANUAL_REVIEW, None),
        ]
        path = tmp_path / "d.csv"
        write_decisions(decisions, path)
        back = load_decisions(path)
        assert back == decisions

    def test_load_rejects_wrong_columns(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")
        with pytest.raises(AnnotationError):
            load_decisions(path)


class TestReviewQueue:
    def _decisions(self):
        return [
            Decision("e1", "p", 1, 0.90, Outcome.NON_VAGUE, 0),
            Decision("e2", "p", 0, 0.55, Outcome.MANUAL_REVIEW, None),
            Decision("e3", "q", 1, 0.53, Outcome.MANUAL_REVIEW, None),
        ]

    def _sets(self):
        return [
            ParaphraseSet("e1", "t1", ("a", "b")),
            ParaphraseSet("e2", "t2", ("c", "d")),
            ParaphraseSet("e3", "t3", ("e", "f")),
        ]

    def test_emit_only_unresolved_review_rows(self, tmp_path):
        path = tmp_path / "queue.csv"
        n = emit_review_queue(self._decisions(), self._sets(), path)
        assert n == 2
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["example_id"] for r in rows] == ["e2", "e3"]
        assert rows[0]["paraphrases"] == "c | d"
        assert all(r["label"] == "" for r in rows)

    def test_merge_applies_labels(self, tmp_path):
        path = tmp_path / "queue.csv"
        emit_review_queue(self._decisions(), self._sets(), path)
        text = path.read_text(encoding="utf-8")
        text = text.replace('e2,t2,c | d,0.550000,', 'e2,t2,c | d,0.550000,1')
        path.write_text(text, encoding="utf-8")
        merged = merge_review(self._decisions(), path)
        by_id = {d.example_id: d for d in merged}
        assert by_id["e2"].resolved_label == 1
        assert by_id["e3"].resolved_label is None  # blank stays open
        assert by_id["e1"].resolved_label == 0     # untouched

    def test_merge_rejects_bad_label(self, tmp_path):
        path = tmp_path / "queue.csv"
        emit_review_queue(self._decisions(), self._sets(), path)
        text = path.read_text(encoding="utf-8").replace("0.550000,", "0.550000,maybe")
        path.write_text(text, encoding="utf-8")
        with pytest.raises(AnnotationError, match="label must be 0, 1 or blank"):
            merge_review(self._decisions(), path)

    def test_merge_rejects_unknown_example(self, tmp_path):
        path = tmp_path / "queue.csv"
        path.write_text(
            "example_id,text,paraphrases,score,label\nghost,t,a | b,0.5,1\n",
            encoding="utf-8",
        )
        with pytest.raises(AnnotationError, match="unknown"):
            merge_review(self._decisions(), path)

    def test_merge_rejects_label_for_unqueued_example(self, tmp_path):
        path = tmp_path / "queue.csv"
        path.write_text(
            "example_id,text,paraphrases,score,label\ne1,t1,a | b,0.9,1\n",
            encoding="utf-8",
        )
        with pytest.raises(AnnotationError, match="not queued"):
            merge_review(self._decisions(), path)


class TestGeneralize:
    def _corpus(self):
        return Corpus(
            (
                make_example(id="g1", text="he is <between jobs> now", euph_label=1),
                make_example(id="g2", text="still <between jobs> sadly", pet="between jobs", euph_label=1),
                make_example(id="g3", text="drive <between jobs> daily", pet="between jobs", euph_label=0),
                make_example(id="g4", text="she was <let go> monday", pet="let go", euph_label=1),
                make_example(id="g5", text="he <let go> of the rope", pet="let go", euph_label=0),
            )
        )

    def test_propagates_to_same_pair(self):
        decisions = [
            Decision("g1", "between jobs", 1, 0.4, Outcome.VAGUE, 1),
            Decision("g3", "between jobs", 0, 0.9, Outcome.NON_VAGUE, 0),
            Decision("g4", "let go", 1, 0.9, Outcome.NON_VAGUE, 0),
            Decision("g5", "let go", 0, 0.3, Outcome.VAGUE, 1),
        ]
        result = generalize_labels(self._corpus(), decisions)
        vague = {ex.id: ex.vague_label for ex in result.corpus}
        # g2 inherits the (between jobs, 1) label from g1
        assert vague == {"g1": 1, "g2": 1, "g3": 0, "g4": 0, "g5": 1}
        assert result.uncovered == ()
        assert result.requeue_ids == ()
        assert {(l.pet_id, l.euph_label): l.vague_label for l in result.labels} == {
            ("between jobs", 1): 1,
            ("between jobs", 0): 0,
            ("let go", 1): 0,
            ("let go", 0): 1,
        }

    def test_conflicts_are_requeued_not_voted(self):
        decisions = [
            Decision("g1", "between jobs", 1, 0.4, Outcome.VAGUE, 1),
            Decision("g2", "between jobs", 1, 0.9, Outcome.NON_VAGUE, 0),
            Decision("g3", "between jobs", 0, 0.9, Outcome.NON_VAGUE, 0),
            Decision("g4", "let go", 1, 0.9, Outcome.NON_VAGUE, 0),
            Decision("g5", "let go", 0, 0.3, Outcome.VAGUE, 1),
        ]
        result = generalize_labels(self._corpus(), decisions)
        conflicts = [u for u in result.uncovered if u.reason == "conflict"]
        assert len(conflicts) == 1
        assert conflicts[0].pet_id == "between jobs"
        assert conflicts[0].euph_label == 1
        assert set(conflicts[0].example_ids) == {"g1", "g2"}
        assert set(result.requeue_ids) == {"g1", "g2"}
        # conflicted pair stays unlabeled
        vague = {ex.id: ex.vague_label for ex in result.corpus}
        assert vague["g1"] is None and vague["g2"] is None
        assert vague["g3"] == 0

    def test_missing_decisions_reported(self):
        decisions = [Decision("g1", "between jobs", 1, 0.4, Outcome.VAGUE, 1)]
        result = generalize_labels(self._corpus(), decisions)
        missing = {(u.pet_id, u.euph_label) for u in result.uncovered}
        assert missing == {("between jobs", 0), ("let go", 1), ("let go", 0)}
        assert all(u.reason == "no_decision" for u in result.uncovered)

    def test_unresolved_review_rows_do_not_count(self):
        decisions = [
            Decision("g1", "between jobs", 1, 0.55, Outcome.MANUAL_REVIEW, None),
        ]
        result = generalize_labels(self._corpus(), decisions)
        assert all(u.reason == "no_decision" for u in result.uncovered)
        assert len(result.uncovered) == 4

    def test_every_example_labeled_xor_uncovered(self):
        rng = np.random.default_rng(29)
        pets = ["p0", "p1", "p2", "p3"]
        for trial in range(50):
            examples = []
            for i in range(int(rng.integers(4, 20))):
                pet = pets[int(rng.integers(len(pets)))]
                examples.append(
                    make_example(
                        id=f"t{trial}-{i}",
                        text=f"w{i} <{pet}> tail",
                        pet=pet,
                        euph_label=int(rng.integers(2)),
                    )
                )
            corpus = Corpus(tuple(examples))
            decisions = []
            for ex in examples:
                r = rng.random()
                if r < 0.3:
                    continue  # not annotated
                label = int(rng.integers(2))
                decisions.append(
                    Decision(ex.id, ex.pet, ex.euph_label, 0.9 if label == 0 else 0.1,
                             Outcome.NON_VAGUE if label == 0 else Outcome.VAGUE, label)
                )
            result = generalize_labels(corpus, decisions)
            uncovered_pairs = {(u.pet_id, u.euph_label) for u in result.uncovered}
            assert len(uncovered_pairs) == len(result.uncovered)  # no pair repeats
            for ex in result.corpus:
                key = (ex.pet_id, ex.euph_label)
                if ex.vague_label is None:
                    assert key in uncovered_pairs
                else:
                    assert key not in uncovered_pairs

    def test_resolved_band_scores_generalize_after_merge(self, tmp_path):
        corpus = Corpus(
            (
                make_example(id="m1", text="he is <between jobs> now", euph_label=1),
                make_example(id="m2", text="also <between jobs> here", pet="between jobs", euph_label=1),
            )
        )
        decisions = [Decision("m1", "between jobs", 1, 0.608, Outcome.MANUAL_REVIEW, None)]
        sets = [ParaphraseSet("m1", "he is between jobs now", ("a", "b"))]
        queue = tmp_path / "q.csv"
        emit_review_queue(decisions, sets, queue)
        filled = queue.read_text(encoding="utf-8").replace("0.608000,", "0.608000,0")
        queue.write_text(filled, encoding="utf-8")
        merged = merge_review(decisions, queue)
        result = generalize_labels(corpus, merged)
        assert {ex.vague_label for ex in result.corpus} == {0}
        assert result.uncovered == ()
