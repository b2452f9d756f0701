"""Self-play simulation, repetition-based termination, reward estimation,
and REINFORCE optimization of the act policy with the generator frozen.

The reward of taking an act in a state is alpha * E[dialogue length] +
beta * E[response relevance], both estimated from N sampled rollouts that
continue the dialogue after the act. A simulated dialogue ends when the
encoder representations of recent turns are too similar (two repetition
patterns, checked in a fixed order) or when it reaches the turn cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tape as T
from .acts import DialogueAct, N_ACTS
from .corpus import Corpus
from .errors import ConfigError, DataError
from .generator import GenerationNet
from .matcher import MatcherNet, join_context
from .policy import PolicyNet
from .tape import Tape
from .layers import Sgd

TERM_REPETITION_3 = "repetition-3"
TERM_REPETITION_SKIP = "repetition-skip"
TERM_MAX_TURNS = "max-turns"


@dataclass
class RlConfig:
    max_turns: int = 20          # T
    rollouts: int = 10           # N per reward estimate
    alpha: float = 0.67
    beta: float = 0.33
    threshold: float = 0.9       # repetition cosine threshold
    top_k: int = 5               # responses sample from the top-k beam results
    learning_rate: float = 0.05
    batch_episodes: int = 2
    iterations: int = 20
    beam_size: int = 5
    max_response_len: int = 16

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be nonnegative")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError("threshold must lie in (0, 1]")
        if self.max_turns < 1 or self.rollouts < 1 or self.top_k < 1:
            raise ConfigError("max_turns, rollouts, and top_k must be >= 1")


@dataclass
class TurnRecord:
    speaker: str
    act: DialogueAct
    tokens: list[int]
    sample_index: int = 0
    embedding: np.ndarray | None = None


@dataclass
class RolloutRecord:
    prefix: list[TurnRecord]
    generated: list[TurnRecord]
    termination: str = TERM_MAX_TURNS

    @property
    def length(self) -> int:
        """Total dialogue length, the fixed prefix included."""
        return len(self.prefix) + len(self.generated)

    @property
    def turns(self) -> list[TurnRecord]:
        return self.prefix + self.generated


@dataclass
class RewardEstimate:
    expected_length: float
    expected_relevance: float
    reward: float
    rollouts: int


def should_terminate(e_prev: np.ndarray, e_cur: np.ndarray, e_next: np.ndarray,
                     threshold: float) -> tuple[bool, str | None]:
    """Repetition tests over the representations of three consecutive turns.

    Checked in order: (1) both adjacent pairs similar, i.e. three turns in
    a row say the same thing; (2) the two turns of one speaker similar.
    """
    if T.cosine(e_prev, e_cur) > threshold and T.cosine(e_cur, e_next) > threshold:
        return True, TERM_REPETITION_3
    if T.cosine(e_prev, e_next) > threshold:
        return True, TERM_REPETITION_SKIP
    return False, None


def _session_of(turns: Sequence[TurnRecord]) -> list[tuple[list[int], DialogueAct]]:
    return [(t.tokens, t.act) for t in turns]


def simulate_dialogue(policy: PolicyNet, generator: GenerationNet,
                      prefix: Sequence[tuple[Sequence[int], DialogueAct]],
                      config: RlConfig, rng: np.random.Generator,
                      forced_first: tuple[DialogueAct, Sequence[int] | None] | None = None,
                      act_mode: str = "sample", response_mode: str = "sample"
                      ) -> RolloutRecord:
    """Alternating self-play continuation of a dialogue prefix.

    Acts come from the policy (sampled or greedy); responses come from the
    top-k beam results (sampled) or the beam top-1. ``forced_first`` pins
    the act, and optionally the response, of the first generated turn.
    """
    if not prefix:
        raise DataError("simulation needs at least an initial message")
    prefix_records = []
    speaker = "A"
    for tokens, act in prefix:
        prefix_records.append(TurnRecord(
            speaker=speaker, act=DialogueAct(int(act)), tokens=list(tokens),
            embedding=generator.embed_utterance(tokens)))
        speaker = "B" if speaker == "A" else "A"

    record = RolloutRecord(prefix=prefix_records, generated=[])
    while record.length < config.max_turns:
        turns = record.turns
        session = _session_of(turns)
        forced = forced_first if not record.generated else None
        if forced is not None:
            act = DialogueAct(int(forced[0]))
        else:
            act = policy.select_act(session, mode=act_mode, rng=rng)
        u_prev = turns[-1].tokens
        u_prev2 = turns[-2].tokens if len(turns) >= 2 else None
        sample_index = 0
        if forced is not None and forced[1] is not None:
            tokens = list(forced[1])
        elif response_mode == "sample":
            tokens, _, sample_index = generator.sample_top_k(
                act, u_prev, u_prev2, config.top_k, rng,
                beam_size=config.beam_size, max_len=config.max_response_len)
        else:
            tokens = generator.beam_search(act, u_prev, u_prev2,
                                           beam_size=config.beam_size,
                                           max_len=config.max_response_len)[0][0]
        if not tokens:
            tokens = [generator.special.markers[int(act)]]
        record.generated.append(TurnRecord(
            speaker=speaker, act=act, tokens=tokens, sample_index=sample_index,
            embedding=generator.embed_utterance(tokens)))
        speaker = "B" if speaker == "A" else "A"

        all_turns = record.turns
        if len(all_turns) >= 3:
            stop, cause = should_terminate(all_turns[-3].embedding, all_turns[-2].embedding,
                                           all_turns[-1].embedding, config.threshold)
            if stop:
                record.termination = cause
                return record
    record.termination = TERM_MAX_TURNS
    return record


def estimate_reward(policy: PolicyNet, generator: GenerationNet, matcher: MatcherNet,
                    state: Sequence[tuple[Sequence[int], DialogueAct]], act: DialogueAct,
                    config: RlConfig, rng: np.random.Generator) -> RewardEstimate:
    """Expected length and relevance of taking ``act`` in ``state``, from N
    self-play rollouts that continue after the act."""
    if len(state) >= config.max_turns:
        raise DataError("state already at the turn cap, nothing to roll out")
    lengths = []
    relevances = []
    for _ in range(config.rollouts):
        rec = simulate_dialogue(policy, generator, state, config, rng,
                                forced_first=(act, None))
        lengths.append(rec.length)
        turns = rec.turns
        scores = []
        # turns after the fixed state, each scored against its recent context;
        # the opening message has no context and is never scored
        for k in range(max(1, len(rec.prefix)), len(turns)):
            context = join_context([t.tokens for t in turns[:k]], generator.special.sep,
                                   matcher.cfg.context_turns)
            scores.append(matcher.match_score(context, turns[k].tokens))
        # a single-turn dialogue carries no relevance evidence: sigmoid midpoint
        relevances.append(float(np.mean(scores)) if scores else 0.5)
    e_len = float(np.mean(lengths))
    e_rel = float(np.mean(relevances))
    return RewardEstimate(expected_length=e_len, expected_relevance=e_rel,
                          reward=config.alpha * e_len + config.beta * e_rel,
                          rollouts=config.rollouts)


@dataclass
class EpisodeStep:
    session: list[tuple[list[int], DialogueAct]]
    act: DialogueAct
    act_rewards: np.ndarray  # reward estimate per act, all seven

    def __post_init__(self):
        self.act_rewards = np.asarray(self.act_rewards, dtype=np.float64)
        if self.act_rewards.shape != (N_ACTS,):
            raise DataError("every step needs a reward for each of the 7 acts")
        if not np.isfinite(self.act_rewards).all():
            raise DataError("act rewards must be finite")


@dataclass
class Episode:
    steps: list[EpisodeStep]


def reinforce_step(policy: PolicyNet, episodes: Sequence[Episode], config: RlConfig,
                   optimizer: Sgd | None = None) -> dict:
    """One policy-gradient update from a batch of episodes.

    The per-step return is sum_{i>=t} (r(a_i, s_i) - b_t) with the baseline
    b_t the mean estimated reward over all seven acts at step t. Only the
    policy parameters move.
    """
    if not episodes:
        raise DataError("reinforce_step needs at least one episode")
    opt = optimizer or Sgd(policy.store, config.learning_rate)
    tp = Tape()
    p = policy.store.bind(tp)
    loss = None
    n_steps = 0
    advantage_sum = 0.0
    for ep in episodes:
        taken = [float(step.act_rewards[int(step.act)]) for step in ep.steps]
        for t, step in enumerate(ep.steps):
            baseline = float(step.act_rewards.mean())
            ret = float(sum(r - baseline for r in taken[t:]))
            advantage_sum += ret
            term = (-ret) * policy.log_prob_t(p, step.session, step.act)
            loss = term if loss is None else loss + term
            n_steps += 1
    if loss is None:
        return {"loss": 0.0, "steps": 0, "mean_advantage": 0.0, "grad_norm": 0.0}
    loss = (1.0 / len(episodes)) * loss
    tp.backward(loss)
    grads = {name: p[name].grad for name in policy.store.names()}
    opt.step(grads)
    grad_norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    return {"loss": loss.item(), "steps": n_steps,
            "mean_advantage": advantage_sum / max(n_steps, 1), "grad_norm": grad_norm}


def train_rl(policy: PolicyNet, generator: GenerationNet, matcher: MatcherNet,
             corpus: Corpus, config: RlConfig, rng: np.random.Generator
             ) -> list[dict]:
    """Self-play REINFORCE loop; returns one learning-curve row per iteration.

    Every iteration samples opening messages from the corpus, plays a batch
    of episodes, estimates rewards for all seven acts at every visited
    state, and applies one policy update. Generator and matcher are frozen.
    """
    openers = [d.turns[0] for d in corpus if d.turns and d.turns[0].act is not None]
    if not openers:
        raise DataError("corpus has no tagged opening messages")
    opt = Sgd(policy.store, config.learning_rate)
    curves = []
    for iteration in range(config.iterations):
        episodes = []
        lengths = []
        rewards = []
        for _ in range(config.batch_episodes):
            opener = openers[int(rng.integers(len(openers)))]
            prefix = [(list(opener.tokens), opener.act)]
            rollout = simulate_dialogue(policy, generator, prefix, config, rng,
                                        act_mode="sample", response_mode="sample")
            lengths.append(rollout.length)
            steps = []
            turns = rollout.turns
            for k in range(len(rollout.prefix), len(turns)):
                state = _session_of(turns[:k])
                act_rewards = np.zeros(N_ACTS)
                for a in DialogueAct:
                    est = estimate_reward(policy, generator, matcher, state, a,
                                          config, rng)
                    act_rewards[int(a)] = est.reward
                steps.append(EpisodeStep(session=state, act=turns[k].act,
                                         act_rewards=act_rewards))
                rewards.append(float(act_rewards[int(turns[k].act)]))
            if steps:
                episodes.append(Episode(steps=steps))
        if episodes:
            reinforce_step(policy, episodes, config, optimizer=opt)
        curves.append({"iteration": iteration,
                       "mean_reward": float(np.mean(rewards)) if rewards else 0.0,
                       "mean_length": float(np.mean(lengths)) if lengths else 0.0})
    return curves
