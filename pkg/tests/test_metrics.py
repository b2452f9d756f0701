import math

import numpy as np
import pytest

from actchat.acts import DialogueAct
from actchat.errors import DataError, EmptyInputError
from actchat.metrics import (bleu_n, bootstrap_mean_diff, distinct_n, embedding_metrics,
                             engagement_report, out_of_context_ratio)


class TestBleu:
    def test_identical_candidate_scores_one(self):
        for sent in (["a"], ["a", "b", "c"], ["x", "y", "x", "y"]):
            assert bleu_n([sent], [sent], 1) == pytest.approx(1.0)
            assert bleu_n([sent], [sent], 2) == pytest.approx(1.0)

    def test_two_of_three_unigrams_match(self):
        got = bleu_n([["a", "b", "c"]], [["a", "b", "d"]], 1)
        assert got == pytest.approx(2 / 3, abs=1e-9)

    def test_clipping_counts_repeated_candidate_tokens_once(self):
        # "a a" vs "a": clipped precision 1/2, candidate longer so no penalty
        assert bleu_n([["a", "a"]], [["a"]], 1) == pytest.approx(0.5, abs=1e-12)

    def test_brevity_penalty_for_short_candidates(self):
        got = bleu_n([["a"]], [["a", "b"]], 1)
        assert got == pytest.approx(math.exp(1 - 2 / 1), abs=1e-12)

    def test_bleu2_is_geometric_mean_of_orders(self):
        cands = [["a", "b", "c"]]
        refs = [["a", "b", "d"]]
        p1 = 2 / 3
        p2 = 1 / 2
        assert bleu_n(cands, refs, 2) == pytest.approx(math.sqrt(p1 * p2), abs=1e-9)

    def test_no_overlap_stays_finite(self):
        assert 0.0 < bleu_n([["a"]], [["b"]], 2) < 1e-4

    def test_corpus_permutation_invariance(self):
        cands = [["a", "b"], ["c"], ["d", "e", "f"]]
        refs = [["a", "x"], ["c"], ["d", "f", "f"]]
        base = bleu_n(cands, refs, 2)
        perm = bleu_n(cands[::-1], refs[::-1], 2)
        assert base == pytest.approx(perm, abs=1e-12)

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyInputError):
            bleu_n([], [], 1)


class TestEmbeddingMetrics:
    VECS = {"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0]),
            "c": np.array([1.0, 1.0]), "d": np.array([-2.0, 0.5])}

    def test_identical_sentences_score_one_everywhere(self):
        out = embedding_metrics([["a", "c"]], [["a", "c"]], self.VECS)
        for key in ("average", "extrema", "greedy"):
            assert out[key] == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_single_words_score_zero(self):
        out = embedding_metrics([["a"]], [["b"]], self.VECS)
        for key in ("average", "extrema", "greedy"):
            assert out[key] == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed_two_word_sentences(self):
        cand, ref = ["a", "b"], ["c", "d"]
        mean_c = np.array([0.5, 0.5])
        mean_r = np.array([-0.5, 0.75])
        cos = lambda x, y: float(x @ y / (np.linalg.norm(x) * np.linalg.norm(y)))
        want_avg = cos(mean_c, mean_r)
        ext_c = np.array([1.0, 1.0])
        ext_r = np.array([-2.0, 1.0])
        want_ext = cos(ext_c, ext_r)
        g_fwd = np.mean([max(cos(self.VECS["a"], self.VECS[w]) for w in ref),
                         max(cos(self.VECS["b"], self.VECS[w]) for w in ref)])
        g_bwd = np.mean([max(cos(self.VECS["c"], self.VECS[w]) for w in cand),
                         max(cos(self.VECS["d"], self.VECS[w]) for w in cand)])
        want_greedy = 0.5 * (g_fwd + g_bwd)
        out = embedding_metrics([cand], [ref], self.VECS)
        assert out["average"] == pytest.approx(want_avg, abs=1e-12)
        assert out["extrema"] == pytest.approx(want_ext, abs=1e-12)
        assert out["greedy"] == pytest.approx(want_greedy, abs=1e-12)

    def test_extrema_tie_prefers_positive(self):
        vecs = {"p": np.array([0.5]), "q": np.array([-0.5])}
        out = embedding_metrics([["p", "q"]], [["p"]], vecs)
        assert out["extrema"] == pytest.approx(1.0)  # tie resolved to +0.5

    def test_out_of_vocabulary_pair_skipped_and_counted(self):
        out = embedding_metrics([["zzz"], ["a"]], [["a"], ["a"]], self.VECS)
        assert out["pairs_used"] == 1
        assert out["pairs_skipped"] == 1


class TestDistinctN:
    def test_hand_enumeration(self):
        responses = [["a", "b"], ["a", "b"]]
        assert distinct_n(responses, 1) == pytest.approx(0.5)
        assert distinct_n(responses, 2) == pytest.approx(0.5)

    def test_all_unique_scores_one(self):
        assert distinct_n([["a", "b"], ["c", "d"]], 1) == 1.0

    def test_empty_input_is_zero(self):
        assert distinct_n([], 1) == 0.0
        assert distinct_n([["a"]], 2) == 0.0  # no bigrams exist

    def test_bounded_on_fuzzed_inputs(self):
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            responses = [[str(rng.integers(5)) for _ in range(rng.integers(0, 6))]
                         for _ in range(rng.integers(0, 4))]
            for n in (1, 2):
                assert 0.0 <= distinct_n(responses, n) <= 1.0


class TestOutOfContext:
    def test_subset_response_scores_zero(self):
        assert out_of_context_ratio(["a", "b", "c"], ["a", "c"]) == 0.0

    def test_fully_novel_response_scores_one(self):
        assert out_of_context_ratio(["a", "b"], ["x", "y"]) == 1.0

    def test_occurrences_counted_per_token(self):
        assert out_of_context_ratio(["a", "b"], ["a", "c", "c"]) == pytest.approx(2 / 3)

    def test_empty_response_rejected(self):
        with pytest.raises(EmptyInputError):
            out_of_context_ratio(["a"], [])

    def test_bounded_on_fuzzed_inputs(self):
        rng = np.random.default_rng(1)
        for _ in range(10_000):
            ctx = [str(rng.integers(6)) for _ in range(rng.integers(0, 5))]
            resp = [str(rng.integers(6)) for _ in range(rng.integers(1, 5))]
            assert 0.0 <= out_of_context_ratio(ctx, resp) <= 1.0


class TestEngagement:
    def test_mean_of_two_dialogue_lengths(self):
        acts = [[DialogueAct.CM_S] * 4, [DialogueAct.CM_S] * 6]
        report = engagement_report(acts)
        assert report.mean_length == pytest.approx(5.0)

    def test_all_dialogues_with_cs_report_full_percentage(self):
        acts = [[DialogueAct.CM_S, DialogueAct.CS_S], [DialogueAct.CS_Q]]
        report = engagement_report(acts)
        assert report.pct_with_context_switch == 1.0

    def test_conditional_lengths_split_by_cs_presence(self):
        acts = [[DialogueAct.CM_S, DialogueAct.CS_S, DialogueAct.CM_S],
                [DialogueAct.CM_S, DialogueAct.CM_Q]]
        report = engagement_report(acts)
        assert report.mean_length_with_cs == pytest.approx(3.0)
        assert report.mean_length_without_cs == pytest.approx(2.0)

    def test_question_share(self):
        acts = [[DialogueAct.CM_Q], [DialogueAct.CM_S], [DialogueAct.CS_Q]]
        report = engagement_report(acts)
        assert report.pct_with_question == pytest.approx(2 / 3)


class TestBootstrap:
    def test_clear_difference_excludes_zero(self):
        rng = np.random.default_rng(2)
        a = rng.normal(0.0, 1.0, 300)
        b = rng.normal(1.0, 1.0, 300)
        lo, hi = bootstrap_mean_diff(a, b, n_resamples=2000, seed=0)
        assert lo > 0.0

    def test_no_difference_includes_zero(self):
        rng = np.random.default_rng(3)
        a = rng.normal(0.0, 1.0, 300)
        b = rng.normal(0.0, 1.0, 300)
        lo, hi = bootstrap_mean_diff(a, b, n_resamples=2000, seed=0)
        assert lo < 0.0 < hi


class TestPermutationInvariance:
    def test_corpus_metrics_ignore_pair_order(self):
        rng = np.random.default_rng(9)
        cands = [[str(rng.integers(8)) for _ in range(rng.integers(1, 6))]
                 for _ in range(20)]
        refs = [[str(rng.integers(8)) for _ in range(rng.integers(1, 6))]
                for _ in range(20)]
        vecs = {str(i): rng.normal(size=3) for i in range(8)}
        perm = list(rng.permutation(20))
        pc = [cands[i] for i in perm]
        pr = [refs[i] for i in perm]
        for n in (1, 2):
            assert abs(bleu_n(cands, refs, n) - bleu_n(pc, pr, n)) <= 1e-12
            assert abs(distinct_n(cands, n) - distinct_n(pc, n)) <= 1e-12
        base = embedding_metrics(cands, refs, vecs)
        shuffled = embedding_metrics(pc, pr, vecs)
        for key in ("average", "extrema", "greedy"):
            assert abs(base[key] - shuffled[key]) <= 1e-12
