import numpy as np
import pytest

from actchat.acts import DialogueAct
from actchat.config import SlConfig
from actchat.corpus import build_vocab, tokenize_corpus
from actchat.generator import GenerationNet, GeneratorConfig, SpecialIds
from actchat.pipeline import embedding_table, train_sl, validation_perplexity
from actchat.policy import PolicyConfig, PolicyNet
from actchat.toyworld import generate_toy_corpus

SMALL_POL = PolicyConfig(word_emb=8, utt_hidden=6, session_hidden=6, act_emb=4,
                         act_hidden=4, mlp_hidden=8)
SMALL_GEN = GeneratorConfig(word_emb=8, hidden=8, att_dim=6, max_len=10)


def _world(n=20, seed=1):
    corpus = generate_toy_corpus(seed, n)
    vocab = build_vocab((t.text for d in corpus for t in d.turns), max_size=300)
    tokenize_corpus(corpus, vocab)
    return corpus, vocab


class TestTrainSl:
    def test_reports_both_loss_terms_and_improves(self):
        corpus, vocab = _world()
        rng = np.random.default_rng(0)
        policy = PolicyNet(len(vocab), SMALL_POL, rng=rng)
        generator = GenerationNet(len(vocab), SpecialIds.from_vocab(vocab),
                                  SMALL_GEN, rng=rng)
        history = train_sl(policy, generator, corpus[:16], SlConfig(epochs=3),
                           val=corpus[16:])
        assert all({"generation_nll", "policy_nll"} <= set(h) for h in history)
        assert history[-1]["generation_nll"] < history[0]["generation_nll"]
        assert history[-1]["policy_nll"] < history[0]["policy_nll"]
        assert history[-1]["val_perplexity"] < history[0]["val_perplexity"]

    def test_shared_embeddings_use_one_table(self):
        corpus, vocab = _world(12, seed=2)
        rng = np.random.default_rng(0)
        policy = PolicyNet(len(vocab), SMALL_POL, rng=rng)
        generator = GenerationNet(len(vocab), SpecialIds.from_vocab(vocab),
                                  SMALL_GEN, rng=rng)
        cfg = SlConfig(epochs=2, share_embeddings=True)
        train_sl(policy, generator, corpus, cfg)
        assert policy.store["emb"] is generator.store["emb"]
        # both nets still produce valid outputs from the shared table
        d = corpus[0]
        dist = policy.act_distribution([(d.turns[0].tokens, d.turns[0].act)])
        assert abs(dist.sum() - 1.0) <= 1e-9

    def test_shared_flag_needs_matching_widths(self):
        corpus, vocab = _world(8, seed=3)
        policy = PolicyNet(len(vocab), PolicyConfig(word_emb=4, utt_hidden=4,
                                                    session_hidden=4, act_emb=3,
                                                    act_hidden=3, mlp_hidden=4))
        generator = GenerationNet(len(vocab), SpecialIds.from_vocab(vocab), SMALL_GEN)
        from actchat.errors import DataError
        with pytest.raises(DataError):
            train_sl(policy, generator, corpus, SlConfig(epochs=1,
                                                         share_embeddings=True))


class TestEmbeddingTable:
    def test_covers_listed_tokens_and_randomizes_the_rest(self):
        _, vocab = _world(6, seed=4)
        some_token = vocab.tokens[15]
        vectors = {some_token: np.arange(8, dtype=float)}
        table = embedding_table(vectors, vocab, width=8, seed=0)
        assert np.array_equal(table[15], np.arange(8.0))
        assert table.shape == (len(vocab), 8)
        other = table[16]  # uncovered tokens keep the small random init
        assert np.abs(other).max() <= 0.08 + 1e-12

    def test_wrong_width_rejected(self):
        _, vocab = _world(6, seed=5)
        from actchat.errors import DataError
        with pytest.raises(DataError):
            embedding_table({vocab.tokens[15]: np.ones(3)}, vocab, width=8, seed=0)
