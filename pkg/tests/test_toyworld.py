import json

import numpy as np
import pytest

from actchat.acts import DialogueAct, N_ACTS
from actchat.corpus import corpus_stats, dialogue_to_json
from actchat.errors import ConfigError
from actchat.toyworld import (TEMPLATES, TOPICS, ToyWorldConfig, generate_toy_corpus,
                              transition_with_cs_mass)


class TestToyWorldConfig:
    def test_bad_transition_rows_rejected(self):
        bad = np.full((N_ACTS, N_ACTS), 1.0 / N_ACTS)
        bad[0, 0] += 0.01
        with pytest.raises(ConfigError):
            ToyWorldConfig(transition=bad)

    def test_negative_probabilities_rejected(self):
        bad = np.full((N_ACTS, N_ACTS), 1.0 / N_ACTS)
        bad[0, 0] = -0.1
        bad[0, 1] += 0.1 + 1.0 / N_ACTS
        with pytest.raises(ConfigError):
            ToyWorldConfig(transition=bad)


class TestGeneration:
    def test_fixed_seed_reproduces_byte_identical_corpus(self):
        a = generate_toy_corpus(7, 20)
        b = generate_toy_corpus(7, 20)
        dump = lambda c: json.dumps([dialogue_to_json(d) for d in c])
        assert dump(a) == dump(b)

    def test_degenerate_matrix_forces_single_act(self):
        one_hot = np.zeros((N_ACTS, N_ACTS))
        one_hot[:, int(DialogueAct.CM_S)] = 1.0
        init = np.zeros(N_ACTS)
        init[int(DialogueAct.CM_S)] = 1.0
        cfg = ToyWorldConfig(transition=one_hot, initial=init)
        corpus = generate_toy_corpus(3, 10, cfg)
        for d in corpus:
            for t in d.turns:
                assert t.gold.argmax() is DialogueAct.CM_S

    def test_context_switch_rate_matches_configured_mass(self):
        matrix, initial = transition_with_cs_mass(0.3)
        cfg = ToyWorldConfig(transition=matrix, initial=initial,
                             min_turns=5, max_turns=9)
        corpus = generate_toy_corpus(11, 800, cfg)
        acts = [t.gold.argmax() for d in corpus for t in d.turns]
        assert len(acts) >= 5000
        cs = sum(1 for a in acts if a.is_context_switch)
        assert cs / len(acts) == pytest.approx(0.3, abs=0.02)

    def test_every_turn_is_gold_labeled_and_alternating(self):
        corpus = generate_toy_corpus(1, 30)
        for d in corpus:
            assert all(t.gold is not None for t in d.turns)
            speakers = [t.speaker for t in d.turns]
            assert speakers == ["AB"[i % 2] for i in range(len(speakers))]

    def test_turn_counts_respect_config(self):
        cfg = ToyWorldConfig(min_turns=4, max_turns=6)
        corpus = generate_toy_corpus(2, 50, cfg)
        lengths = {len(d.turns) for d in corpus}
        assert lengths <= {4, 5, 6}

    def test_template_lengths_put_cs_statements_above_cm_questions(self):
        cs_s = [len(t.split()) for t in TEMPLATES[DialogueAct.CS_S]]
        cm_q = [len(t.split()) for t in TEMPLATES[DialogueAct.CM_Q]]
        assert min(cs_s) > max(cm_q)

    def test_context_switch_turns_change_topic_words(self):
        # CS turns must contain words of a different topic than the previous turn
        corpus = generate_toy_corpus(5, 60)
        word_to_topic = {w: name for name, words in TOPICS for w in words}
        for d in corpus:
            prev_topics = None
            for t in d.turns:
                topics = {word_to_topic[w] for w in t.text.split() if w in word_to_topic}
                if t.gold.argmax().is_context_switch and prev_topics and topics:
                    assert not (topics & prev_topics)
                if topics:
                    prev_topics = topics

    def test_corpus_stats_see_configured_structure(self):
        corpus = generate_toy_corpus(4, 100)
        stats = corpus_stats(corpus)
        assert stats.n_dialogues == 100
        assert 0.0 < stats.pct_dialogues_with_context_switch <= 1.0
