import numpy as np
import pytest

from actchat.acts import DialogueAct, N_ACTS
from actchat.errors import DataError
from actchat.layers import grad_check
from actchat.policy import PolicyConfig, PolicyNet

TINY = PolicyConfig(word_emb=4, utt_hidden=3, session_hidden=3,
                    act_emb=3, act_hidden=2, mlp_hidden=4, window=10)


def _net(seed=0, vocab=12, cfg=TINY):
    return PolicyNet(vocab, cfg, rng=np.random.default_rng(seed))


def _session(*turns):
    return [(list(tokens), act) for tokens, act in turns]


class TestActDistribution:
    def test_zero_parameters_give_uniform(self):
        net = _net()
        for name in net.store.names():
            net.store[name][...] = 0.0
        dist = net.act_distribution(_session(([1, 2], DialogueAct.CM_S)))
        assert np.array_equal(dist, np.full(7, 1.0 / 7.0))

    def test_empty_session_allowed_with_zero_states(self):
        net = _net()
        dist = net.act_distribution([])
        assert abs(dist.sum() - 1.0) <= 1e-9

    def test_single_turn_matches_explicit_unroll(self):
        net = _net(seed=2)
        s = net.store
        tokens = [3, 7, 1]
        act = DialogueAct.CS_Q

        def np_gru(prefix, h, x):
            z = 1 / (1 + np.exp(-(s[f"{prefix}.wz"] @ x + s[f"{prefix}.uz"] @ h + s[f"{prefix}.bz"])))
            r = 1 / (1 + np.exp(-(s[f"{prefix}.wr"] @ x + s[f"{prefix}.ur"] @ h + s[f"{prefix}.br"])))
            c = np.tanh(s[f"{prefix}.wh"] @ x + s[f"{prefix}.uh"] @ (r * h) + s[f"{prefix}.bh"])
            return (1 - z) * h + z * c

        h = np.zeros(3)
        for i in tokens:
            h = np_gru("utt_f", h, s["emb"][i])
        fwd = h
        h = np.zeros(3)
        for i in reversed(tokens):
            h = np_gru("utt_b", h, s["emb"][i])
        utt = np.concatenate([fwd, h])
        t_state = np_gru("sess", np.zeros(3), utt)
        a_state = np_gru("act", np.zeros(2), s["act_emb"][int(act)])
        feats = np.concatenate([t_state, a_state])
        logits = s["mlp.w2"] @ np.tanh(s["mlp.w1"] @ feats + s["mlp.b1"]) + s["mlp.b2"]
        e = np.exp(logits - logits.max())
        got = net.act_distribution(_session((tokens, act)))
        assert np.allclose(got, e / e.sum(), atol=1e-12)

    def test_last_act_changes_distribution(self):
        changed = 0
        for seed in range(100):
            net = _net(seed=seed)
            base = _session(([1, 2], DialogueAct.CM_S), ([3, 4], DialogueAct.CM_Q))
            alt = _session(([1, 2], DialogueAct.CM_S), ([3, 4], DialogueAct.CS_S))
            diff = np.abs(net.act_distribution(base) - net.act_distribution(alt)).max()
            changed += int(diff > 1e-12)
        assert changed >= 90

    def test_prefix_property_bit_exact(self):
        net = _net(seed=4)
        base = _session(([1, 2], DialogueAct.CM_S), ([3], DialogueAct.CM_Q))
        before = net.act_distribution(base)
        extended = base + [([5, 6], DialogueAct.CS_S)]
        after_truncation = net.act_distribution(extended[:2])
        assert np.array_equal(before, after_truncation)

    def test_session_window_keeps_most_recent_turns(self):
        cfg = PolicyConfig(word_emb=4, utt_hidden=3, session_hidden=3,
                           act_emb=3, act_hidden=2, mlp_hidden=4, window=2)
        net = _net(cfg=cfg)
        long_session = _session(([1], DialogueAct.CM_S), ([2], DialogueAct.CM_Q),
                                ([3], DialogueAct.CM_A))
        windowed = net.act_distribution(long_session)
        explicit = net.act_distribution(long_session[-2:])
        assert np.array_equal(windowed, explicit)

    def test_misaligned_session_rejected(self):
        net = _net()
        with pytest.raises(DataError):
            net.act_distribution([([], DialogueAct.CM_S)])

    def test_distribution_sums_to_one(self):
        net = _net(seed=9)
        dist = net.act_distribution(_session(([1, 2, 3], DialogueAct.OTHER)))
        assert abs(dist.sum() - 1.0) <= 1e-9


class TestSelectAct:
    def test_uniform_distribution_greedy_breaks_tie_to_first_act(self, monkeypatch):
        net = _net()
        monkeypatch.setattr(net, "act_distribution", lambda session: np.full(7, 1 / 7))
        assert net.select_act([], mode="greedy") is DialogueAct.CM_S

    def test_point_mass_selected_in_both_modes(self, monkeypatch):
        net = _net()
        dist = np.zeros(7)
        dist[int(DialogueAct.CM_A)] = 1.0
        monkeypatch.setattr(net, "act_distribution", lambda session: dist)
        assert net.select_act([], mode="greedy") is DialogueAct.CM_A
        rng = np.random.default_rng(0)
        assert net.select_act([], mode="sample", rng=rng) is DialogueAct.CM_A

    def test_sampling_frequencies_match_distribution(self, monkeypatch):
        net = _net()
        dist = np.array([0.5, 0.5, 0, 0, 0, 0, 0])
        monkeypatch.setattr(net, "act_distribution", lambda session: dist)
        rng = np.random.default_rng(7)
        draws = [net.select_act([], mode="sample", rng=rng) for _ in range(10000)]
        freq = sum(1 for a in draws if a is DialogueAct.CM_S) / len(draws)
        assert freq == pytest.approx(0.5, abs=0.02)

    def test_greedy_invariant_under_monotone_logit_transforms(self):
        net = _net(seed=11)
        net.store["mlp.w2"][...] = 0.0
        logits = np.array([0.3, -0.2, 0.9, 0.1, 0.0, -0.5, 0.4])
        net.store["mlp.b2"][...] = logits
        base = net.select_act(_session(([1], DialogueAct.CM_S)), mode="greedy")
        net.store["mlp.b2"][...] = 2.0 * logits + 5.0
        transformed = net.select_act(_session(([1], DialogueAct.CM_S)), mode="greedy")
        assert base is transformed


class TestGradients:
    def test_log_prob_gradient_matches_finite_differences(self):
        net = _net(seed=3)
        session = _session(([1, 2], DialogueAct.CM_S), ([3], DialogueAct.CM_Q))

        def loss_fn(p):
            return -net.log_prob_t(p, session, DialogueAct.CS_S)

        assert grad_check(loss_fn, net.store, epsilon=1e-5) <= 1e-4


class TestPrefixDistributions:
    def test_shared_computation_matches_per_prefix_calls(self):
        net = _net(seed=5)
        turns = _session(([1, 2], DialogueAct.CM_S), ([3], DialogueAct.CM_Q),
                         ([4, 5], DialogueAct.CS_S))
        p = net.store.bind(None)
        shared = [t.data for t in net.prefix_distributions_t(p, turns)]
        for k in range(3):
            direct = net.act_distribution(turns[:k])
            assert np.allclose(shared[k], direct, atol=1e-12)
