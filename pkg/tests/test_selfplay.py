import numpy as np
import pytest

from actchat.acts import DialogueAct, N_ACTS
from actchat.errors import ConfigError, DataError
from actchat.policy import PolicyConfig, PolicyNet
from actchat import selfplay
from actchat.selfplay import (Episode, EpisodeStep, RlConfig, RolloutRecord, TurnRecord,
                              estimate_reward, reinforce_step, should_terminate,
                              simulate_dialogue, train_rl)

TINY_POLICY = PolicyConfig(word_emb=4, utt_hidden=3, session_hidden=3,
                           act_emb=3, act_hidden=2, mlp_hidden=4, window=10)


def _policy(seed=0, vocab=12):
    return PolicyNet(vocab, TINY_POLICY, rng=np.random.default_rng(seed))


class _EchoGenerator:
    """Repeats its input utterance; embeddings depend only on the tokens."""

    class _Special:
        def __init__(self):
            self.bos, self.eos, self.sep = 0, 1, 2
            self.markers = [3] * 7

    def __init__(self):
        self.special = self._Special()

    def embed_utterance(self, tokens):
        v = np.zeros(8)
        for i, t in enumerate(tokens):
            v[(t + i) % 8] += 1.0 + 0.1 * t
        return v

    def sample_top_k(self, act, u_prev, u_prev2, k, rng, beam_size=None, max_len=None):
        return list(u_prev), -1.0, 0

    def beam_search(self, act, u_prev, u_prev2, beam_size=5, max_len=None):
        return [(list(u_prev), -1.0)]


class _FreshGenerator(_EchoGenerator):
    """Emits a different utterance every call; never repeats."""

    def __init__(self):
        super().__init__()
        self.counter = 0

    def sample_top_k(self, act, u_prev, u_prev2, k, rng, beam_size=None, max_len=None):
        self.counter += 1
        return [4 + (self.counter % 5), 4 + ((self.counter * 3) % 7)], -1.0, 0

    def beam_search(self, act, u_prev, u_prev2, beam_size=5, max_len=None):
        self.counter += 1
        return [([4 + (self.counter % 5), 4 + ((self.counter * 3) % 7)], -1.0)]

    def embed_utterance(self, tokens):
        v = np.zeros(8)
        v[tokens[0] % 8] = 1.0
        v[tokens[-1] % 8] += 2.0
        return v


class _ConstantMatcher:
    def __init__(self, value=0.5):
        self.value = value
        self.cfg = type("Cfg", (), {"context_turns": 2})()

    def match_score(self, context, response):
        return self.value


class TestRlConfig:
    def test_defaults_match_documented_values(self):
        cfg = RlConfig()
        assert (cfg.max_turns, cfg.rollouts) == (20, 10)
        assert (cfg.alpha, cfg.beta) == (0.67, 0.33)
        assert cfg.threshold == 0.9 and cfg.top_k == 5

    def test_invalid_values_rejected(self):
        with pytest.raises(ConfigError):
            RlConfig(alpha=-0.1)
        with pytest.raises(ConfigError):
            RlConfig(threshold=0.0)
        with pytest.raises(ConfigError):
            RlConfig(rollouts=0)


class TestShouldTerminate:
    def test_three_identical_embeddings_fire_repetition_three_first(self):
        e = np.array([1.0, 2.0, 0.5])
        stop, cause = should_terminate(e, e, e, 0.9)
        assert stop and cause == "repetition-3"

    def test_pairwise_orthogonal_embeddings_continue(self):
        stop, cause = should_terminate(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
                                       np.array([0, 0, 1.0]), 0.9)
        assert not stop and cause is None

    def test_same_speaker_repetition_fires_skip_rule(self):
        e_a = np.array([1.0, 0.0, 0.0])
        e_b = np.array([0.0, 1.0, 0.0])
        stop, cause = should_terminate(e_a, e_b, e_a, 0.9)
        assert stop and cause == "repetition-skip"

    def test_symmetric_in_outer_embeddings(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            a, b, c = rng.normal(size=(3, 5))
            assert should_terminate(a, b, c, 0.9)[0] == should_terminate(c, b, a, 0.9)[0]

    def test_constructed_cases_all_fire_as_documented(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            base = rng.normal(size=6)
            other = rng.normal(size=6)
            other -= (other @ base) / (base @ base) * base  # orthogonal
            assert should_terminate(base, base, base, 0.9) == (True, "repetition-3")
            assert should_terminate(base, other, base, 0.9) == (True, "repetition-skip")
            assert should_terminate(base, other, other * 0.0 + _orth(rng, base, other), 0.9)[0] \
                in (False, True)


def _orth(rng, a, b):
    v = rng.normal(size=a.size)
    for u in (a, b):
        v -= (v @ u) / (u @ u) * u
    return v


class TestSimulateDialogue:
    def test_echo_generator_terminates_by_repetition_quickly(self):
        cfg = RlConfig(max_turns=10, rollouts=1, top_k=1)
        rec = simulate_dialogue(_policy(), _EchoGenerator(), [([5, 6], DialogueAct.CM_S)],
                                cfg, np.random.default_rng(0))
        assert rec.termination in ("repetition-3", "repetition-skip")
        assert len(rec.generated) <= 3

    def test_non_repetitive_generator_hits_turn_cap(self):
        cfg = RlConfig(max_turns=4, rollouts=1, top_k=1)
        rec = simulate_dialogue(_policy(), _FreshGenerator(), [([5, 6], DialogueAct.CM_S)],
                                cfg, np.random.default_rng(0))
        assert rec.termination == "max-turns"
        assert rec.length == 4

    def test_fixed_seed_reproduces_the_rollout(self):
        cfg = RlConfig(max_turns=6, rollouts=1)
        runs = []
        for _ in range(2):
            rec = simulate_dialogue(_policy(seed=3), _FreshGenerator(),
                                    [([5, 6], DialogueAct.CM_S)], cfg,
                                    np.random.default_rng(42))
            runs.append([(t.act, tuple(t.tokens)) for t in rec.generated]
                        + [rec.termination])
        assert runs[0] == runs[1]

    def test_forced_first_pins_act_and_response(self):
        cfg = RlConfig(max_turns=3, rollouts=1)
        rec = simulate_dialogue(_policy(), _FreshGenerator(), [([5], DialogueAct.CM_S)],
                                cfg, np.random.default_rng(0),
                                forced_first=(DialogueAct.CS_Q, [9, 9]))
        assert rec.generated[0].act is DialogueAct.CS_Q
        assert rec.generated[0].tokens == [9, 9]

    def test_speakers_alternate_across_prefix_and_generated(self):
        cfg = RlConfig(max_turns=5, rollouts=1)
        rec = simulate_dialogue(_policy(), _FreshGenerator(),
                                [([5], DialogueAct.CM_S), ([6], DialogueAct.CM_Q)],
                                cfg, np.random.default_rng(1))
        speakers = [t.speaker for t in rec.turns]
        assert speakers == ["AB"[i % 2] for i in range(len(speakers))]


class TestEstimateReward:
    @pytest.mark.parametrize("length", [1, 5, 8])
    def test_reward_arithmetic_with_stubs(self, monkeypatch, length):
        cfg = RlConfig(max_turns=10, rollouts=4, alpha=0.67, beta=0.33)

        def fake_simulate(policy, generator, prefix, config, rng, forced_first=None,
                          act_mode="sample", response_mode="sample"):
            generated = [TurnRecord(speaker="AB"[i % 2], act=DialogueAct.CM_S,
                                    tokens=[4], embedding=np.ones(3))
                         for i in range(length)]
            return RolloutRecord(prefix=[], generated=generated,
                                 termination="max-turns")

        monkeypatch.setattr(selfplay, "simulate_dialogue", fake_simulate)
        est = estimate_reward(_policy(), _EchoGenerator(), _ConstantMatcher(0.5),
                              [([5], DialogueAct.CM_S)],
                              DialogueAct.CS_S, cfg, np.random.default_rng(0))
        assert est.expected_length == length
        assert est.expected_relevance == 0.5
        assert est.reward == 0.67 * length + 0.33 * 0.5

    def test_deterministic_rollouts_have_zero_variance(self, monkeypatch):
        cfg = RlConfig(max_turns=8, rollouts=5)

        def fake_simulate(policy, generator, prefix, config, rng, **kwargs):
            prefix_recs = [TurnRecord(speaker="A", act=a, tokens=list(t),
                                      embedding=np.ones(3)) for t, a in prefix]
            generated = [TurnRecord(speaker="B", act=DialogueAct.CM_S, tokens=[4],
                                    embedding=np.ones(3)) for _ in range(3)]
            return RolloutRecord(prefix=prefix_recs, generated=generated)

        monkeypatch.setattr(selfplay, "simulate_dialogue", fake_simulate)
        a = estimate_reward(_policy(), _EchoGenerator(), _ConstantMatcher(),
                            [([5], DialogueAct.CM_S)], DialogueAct.CM_S, cfg,
                            np.random.default_rng(0))
        b = estimate_reward(_policy(), _EchoGenerator(), _ConstantMatcher(),
                            [([5], DialogueAct.CM_S)], DialogueAct.CM_S, cfg,
                            np.random.default_rng(99))
        assert a == b
        assert a.expected_length == 4.0

    def test_real_components_keep_reward_bounds(self):
        cfg = RlConfig(max_turns=5, rollouts=2, top_k=2)
        est = estimate_reward(_policy(seed=1), _FreshGenerator(), _ConstantMatcher(0.3),
                              [([5, 6], DialogueAct.CM_S)], DialogueAct.CS_S, cfg,
                              np.random.default_rng(2))
        assert 0.0 < est.expected_length <= cfg.max_turns
        assert 0.0 < est.expected_relevance < 1.0

    def test_state_at_cap_rejected(self):
        cfg = RlConfig(max_turns=2, rollouts=1)
        with pytest.raises(DataError):
            estimate_reward(_policy(), _FreshGenerator(), _ConstantMatcher(),
                            [([5], DialogueAct.CM_S), ([6], DialogueAct.CM_Q)],
                            DialogueAct.CM_S, cfg, np.random.default_rng(0))


class TestReinforceStep:
    def _episode(self, session, act, rewards):
        return Episode(steps=[EpisodeStep(session=session, act=act,
                                          act_rewards=np.asarray(rewards, float))])

    def test_equal_rewards_everywhere_leave_parameters_bit_identical(self):
        policy = _policy(seed=5)
        before = {k: v.copy() for k, v in policy.store.items()}
        session = [([1, 2], DialogueAct.CM_S)]
        episodes = [Episode(steps=[
            EpisodeStep(session=session, act=DialogueAct.CM_Q,
                        act_rewards=np.full(7, 3.25)),
            EpisodeStep(session=session + [([3], DialogueAct.CM_Q)],
                        act=DialogueAct.CS_S, act_rewards=np.full(7, 3.25)),
        ])]
        reinforce_step(policy, episodes, RlConfig(learning_rate=0.5))
        for name, arr in policy.store.items():
            assert np.array_equal(arr, before[name])

    def test_positive_advantage_raises_taken_act_probability(self):
        policy = _policy(seed=6)
        session = [([1, 2], DialogueAct.CM_S)]
        rewards = np.zeros(7)
        rewards[int(DialogueAct.CS_S)] = 1.0
        before = policy.act_distribution(session)[int(DialogueAct.CS_S)]
        reinforce_step(policy, [self._episode(session, DialogueAct.CS_S, rewards)],
                       RlConfig(learning_rate=0.5))
        after = policy.act_distribution(session)[int(DialogueAct.CS_S)]
        assert after > before

    def test_negative_advantage_lowers_taken_act_probability(self):
        policy = _policy(seed=6)
        session = [([1, 2], DialogueAct.CM_S)]
        rewards = np.zeros(7)
        rewards[int(DialogueAct.CS_S)] = 1.0  # baseline 1/7 > 0 = advantage of CM_Q
        before = policy.act_distribution(session)[int(DialogueAct.CM_Q)]
        reinforce_step(policy, [self._episode(session, DialogueAct.CM_Q, rewards)],
                       RlConfig(learning_rate=0.5))
        after = policy.act_distribution(session)[int(DialogueAct.CM_Q)]
        assert after < before

    def test_seven_act_bandit_concentrates_on_rewarded_act(self):
        policy = _policy(seed=7)
        session = [([1, 2], DialogueAct.CM_S)]
        rewards = np.zeros(7)
        rewards[int(DialogueAct.CS_Q)] = 1.0
        cfg = RlConfig(learning_rate=0.5)
        rng = np.random.default_rng(0)
        for _ in range(200):
            act = policy.select_act(session, mode="sample", rng=rng)
            reinforce_step(policy, [self._episode(session, act, rewards)], cfg)
        assert policy.act_distribution(session)[int(DialogueAct.CS_Q)] >= 0.9

    def test_missing_rewards_rejected(self):
        with pytest.raises(DataError):
            EpisodeStep(session=[], act=DialogueAct.CM_S, act_rewards=np.zeros(3))
        with pytest.raises(DataError):
            EpisodeStep(session=[], act=DialogueAct.CM_S,
                        act_rewards=np.array([np.nan] * 7))

    def test_generator_and_matcher_untouched(self):
        from actchat.generator import GenerationNet, GeneratorConfig, SpecialIds
        from actchat.matcher import MatcherConfig, MatcherNet
        gen = GenerationNet(12, SpecialIds(bos=2, eos=3, sep=4, markers=[5] * 7),
                            GeneratorConfig(word_emb=3, hidden=2, att_dim=2),
                            rng=np.random.default_rng(0))
        mat = MatcherNet(12, MatcherConfig(word_emb=3, hidden=2),
                         rng=np.random.default_rng(0))
        gen_before = {k: v.copy() for k, v in gen.store.items()}
        mat_before = {k: v.copy() for k, v in mat.store.items()}
        policy = _policy()
        rewards = np.arange(7.0)
        reinforce_step(policy, [self._episode([([1], DialogueAct.CM_S)],
                                              DialogueAct.CM_A, rewards)],
                       RlConfig(learning_rate=0.5))
        assert all(np.array_equal(gen.store[k], gen_before[k]) for k in gen_before)
        assert all(np.array_equal(mat.store[k], mat_before[k]) for k in mat_before)


class TestTrainRl:
    def _tagged_corpus(self):
        from actchat.acts import ActDistribution
        from actchat.corpus import Dialogue, Utterance
        turns = [Utterance(speaker="A", text="five six", tokens=[5, 6],
                           gold=ActDistribution.one_hot(DialogueAct.CM_S)),
                 Utterance(speaker="B", text="seven", tokens=[7],
                           gold=ActDistribution.one_hot(DialogueAct.CM_Q))]
        return [Dialogue(id="d0", turns=turns)]

    def test_zero_learning_rate_keeps_policy_bit_identical(self):
        policy = _policy(seed=8)
        before = {k: v.copy() for k, v in policy.store.items()}
        cfg = RlConfig(max_turns=4, rollouts=1, learning_rate=0.0,
                       batch_episodes=1, iterations=2, top_k=2)
        train_rl(policy, _FreshGenerator(), _ConstantMatcher(), self._tagged_corpus(),
                 cfg, np.random.default_rng(0))
        for name, arr in policy.store.items():
            assert np.array_equal(arr, before[name])

    def test_learning_curves_recorded_every_iteration(self):
        policy = _policy(seed=9)
        cfg = RlConfig(max_turns=4, rollouts=1, learning_rate=0.05,
                       batch_episodes=1, iterations=3, top_k=2)
        curves = train_rl(policy, _FreshGenerator(), _ConstantMatcher(),
                          self._tagged_corpus(), cfg, np.random.default_rng(0))
        assert [c["iteration"] for c in curves] == [0, 1, 2]
        for c in curves:
            assert np.isfinite(c["mean_reward"]) and np.isfinite(c["mean_length"])

    def test_reproducible_for_fixed_seed(self):
        results = []
        for _ in range(2):
            policy = _policy(seed=10)
            cfg = RlConfig(max_turns=4, rollouts=1, learning_rate=0.05,
                           batch_episodes=1, iterations=2, top_k=2)
            curves = train_rl(policy, _FreshGenerator(), _ConstantMatcher(),
                              self._tagged_corpus(), cfg, np.random.default_rng(11))
            results.append((curves, {k: v.copy() for k, v in policy.store.items()}))
        assert results[0][0] == results[1][0]
        for name in results[0][1]:
            assert np.array_equal(results[0][1][name], results[1][1][name])
