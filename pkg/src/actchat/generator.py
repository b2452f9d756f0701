"""Act-conditioned response generator: biGRU encoder, attention decoder.

The encoder input is the act marker token, then the latest context
utterance, then (separated by <sep>) the one before it; a missing second
utterance becomes a single zero-embedding pad position. The decoder GRU
consumes the previous word embedding concatenated with the attention
context; output logits project from [previous word embedding ; decoder
state]. Decoding starts from <bos> with the final backward encoder state
as the initial decoder state, and never emits <eos> as the first token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import tape as T
from .acts import DialogueAct
from .errors import DataError, EmptyInputError, StateError
from .layers import Attention, GruCell, bigru_states, uniform_init
from .tape import ParameterStore, Tensor


@dataclass
class GeneratorConfig:
    word_emb: int = 32
    hidden: int = 64
    att_dim: int = 32
    max_len: int = 20
    length_normalize: bool = True


@dataclass
class SpecialIds:
    """Token ids the generator needs beyond plain content words."""
    bos: int
    eos: int
    sep: int
    markers: list[int]  # one per act, in act-index order

    @classmethod
    def from_vocab(cls, vocab) -> "SpecialIds":
        return cls(bos=vocab.bos_id, eos=vocab.eos_id, sep=vocab.sep_id,
                   markers=[vocab.marker_id(a) for a in DialogueAct])


@dataclass
class Encoding:
    """Everything decoding needs about one encoded context."""
    states: Tensor          # (K, 2h) encoder states
    proj: Tensor            # (K, att) precomputed attention projection
    init_state: Tensor      # (h,) first backward state
    summary: Tensor         # (2h,) final concatenated state


@dataclass
class DecodeHypothesis:
    tokens: list[int] = field(default_factory=list)
    log_prob: float = 0.0
    state: Tensor | None = None
    finished: bool = False
    n_terms: int = 0  # log-probability factors accumulated, <eos> included


class GenerationNet:
    """p(response | act, latest utterance, the one before it)."""

    def __init__(self, vocab_size: int, special: SpecialIds,
                 cfg: GeneratorConfig | None = None,
                 store: ParameterStore | None = None,
                 rng: np.random.Generator | None = None):
        self.cfg = cfg or GeneratorConfig()
        self.vocab_size = vocab_size
        self.special = special
        if store is None:
            store = ParameterStore()
            rng = rng or np.random.default_rng(0)
            c = self.cfg
            store.add("emb", uniform_init(rng, vocab_size, c.word_emb))
            GruCell.init(store, "enc_f", c.word_emb, c.hidden, rng)
            GruCell.init(store, "enc_b", c.word_emb, c.hidden, rng)
            Attention.init(store, "att", 2 * c.hidden, c.hidden, c.att_dim, rng)
            GruCell.init(store, "dec", c.word_emb + 2 * c.hidden, c.hidden, rng)
            store.add("out_w", uniform_init(rng, vocab_size, c.word_emb + c.hidden))
            store.add("out_b", np.zeros(vocab_size))
        self.store = store

    # ---------------------------------------------------------------- encode

    def _embed_inputs(self, p: Mapping[str, Tensor], ids: Sequence[int],
                      pad_positions: int = 0) -> list[Tensor]:
        emb = T.rows(p["emb"], ids)
        inputs = [T.row(emb, j) for j in range(len(ids))]
        inputs.extend(T.zeros(self.cfg.word_emb) for _ in range(pad_positions))
        return inputs

    def encode_t(self, p: Mapping[str, Tensor], act: DialogueAct,
                 u_prev: Sequence[int], u_prev2: Sequence[int] | None) -> Encoding:
        if not u_prev:
            raise DataError("generator context needs a nonempty latest utterance")
        ids = [self.special.markers[int(act)]] + list(u_prev)
        pad = 0
        if u_prev2:
            ids += [self.special.sep] + list(u_prev2)
        else:
            pad = 1
        inputs = self._embed_inputs(p, ids, pad_positions=pad)
        fwd, bwd = bigru_states(GruCell(p, "enc_f"), GruCell(p, "enc_b"), inputs)
        states = T.stack([T.concat([f, b]) for f, b in zip(fwd, bwd)])
        att = Attention(p, "att")
        return Encoding(states=states, proj=att.project(states),
                        init_state=bwd[0], summary=T.concat([fwd[-1], bwd[-1]]))

    def encode(self, act: DialogueAct, u_prev: Sequence[int],
               u_prev2: Sequence[int] | None = None) -> Encoding:
        return self.encode_t(self.store.bind(None), act, u_prev, u_prev2)

    def embed_utterance(self, tokens: Sequence[int]) -> np.ndarray:
        """Encoder representation of a bare utterance, used for repetition
        checks: final concatenated biGRU state over its tokens alone."""
        if not tokens:
            raise EmptyInputError("cannot embed an empty utterance")
        p = self.store.bind(None)
        inputs = self._embed_inputs(p, list(tokens))
        fwd, bwd = bigru_states(GruCell(p, "enc_f"), GruCell(p, "enc_b"), inputs)
        return T.concat([fwd[-1], bwd[-1]]).data

    # ---------------------------------------------------------------- decode

    def _step_t(self, p: Mapping[str, Tensor], enc: Encoding, state: Tensor,
                prev_token: int):
        """One decoder step: returns (distribution tensor, next state tensor)."""
        att = Attention(p, "att")
        context, _ = att.attend(enc.states, enc.proj, state)
        prev_emb = T.row(p["emb"], prev_token)
        next_state = GruCell(p, "dec").step(state, T.concat([prev_emb, context]))
        logits = T.matvec(p["out_w"], T.concat([prev_emb, next_state])) + p["out_b"]
        return T.softmax(logits), next_state

    def next_distribution(self, enc: Encoding, hyp: DecodeHypothesis) -> np.ndarray:
        """Token distribution the decoder would use to extend ``hyp``."""
        p = self.store.bind(None)
        state = hyp.state if hyp.state is not None else enc.init_state
        prev = hyp.tokens[-1] if hyp.tokens else self.special.bos
        dist, _ = self._step_t(p, enc, state, prev)
        return dist.data

    def step_decode(self, enc: Encoding, hyp: DecodeHypothesis,
                    next_token: int) -> DecodeHypothesis:
        """Advance a hypothesis by one chosen token, updating its log-prob."""
        if hyp.finished:
            raise StateError("cannot extend a finished hypothesis")
        p = self.store.bind(None)
        state = hyp.state if hyp.state is not None else enc.init_state
        prev = hyp.tokens[-1] if hyp.tokens else self.special.bos
        dist, next_state = self._step_t(p, enc, state, prev)
        lp = math.log(max(float(dist.data[next_token]), T.PROB_FLOOR))
        if next_token == self.special.eos:
            return DecodeHypothesis(tokens=list(hyp.tokens), log_prob=hyp.log_prob + lp,
                                    state=next_state, finished=True, n_terms=hyp.n_terms + 1)
        return DecodeHypothesis(tokens=list(hyp.tokens) + [next_token],
                                log_prob=hyp.log_prob + lp, state=next_state,
                                n_terms=hyp.n_terms + 1)

    def _score(self, log_prob: float, n_terms: int) -> float:
        if self.cfg.length_normalize:
            return log_prob / max(n_terms, 1)
        return log_prob

    def beam_search(self, act: DialogueAct, u_prev: Sequence[int],
                    u_prev2: Sequence[int] | None = None, beam_size: int = 5,
                    max_len: int | None = None) -> list[tuple[list[int], float]]:
        """Ranked (tokens, score) candidates; score is the length-normalized
        log-probability unless configured otherwise. Every decode step emits
        one symbol, <eos> included, so max_len bounds the total step count
        and a hypothesis at the cap is ranked without the <eos> factor.
        Ties in the final ranking break lexicographically on the tokens."""
        if beam_size < 1:
            raise DataError("beam_size must be >= 1")
        max_len = max_len or self.cfg.max_len
        if max_len < 1:
            raise DataError("max_len must be >= 1")
        p = self.store.bind(None)
        enc = self.encode_t(p, act, u_prev, u_prev2)
        eos = self.special.eos
        live = [DecodeHypothesis(state=enc.init_state)]
        finished: list[DecodeHypothesis] = []
        for step in range(max_len):
            # (cumulative log-prob, token, parent hypothesis, parent's next state)
            expansions: list[tuple[float, int, DecodeHypothesis, Tensor]] = []
            for hyp in live:
                prev = hyp.tokens[-1] if hyp.tokens else self.special.bos
                dist, next_state = self._step_t(p, enc, hyp.state, prev)
                logs = np.log(np.maximum(dist.data, T.PROB_FLOOR))
                for tok in np.argsort(-logs, kind="stable")[:beam_size + 1]:
                    tok = int(tok)
                    if step == 0 and tok == eos:
                        continue  # responses carry at least one real token
                    expansions.append((hyp.log_prob + float(logs[tok]), tok, hyp, next_state))
            expansions.sort(key=lambda e: (-e[0], e[1]))
            new_live: list[DecodeHypothesis] = []
            for lp, tok, hyp, next_state in expansions:
                if len(new_live) >= beam_size:
                    break
                done = tok == eos
                nxt = DecodeHypothesis(
                    tokens=list(hyp.tokens) if done else hyp.tokens + [tok],
                    log_prob=lp, state=next_state, finished=done, n_terms=hyp.n_terms + 1)
                if done:
                    finished.append(nxt)
                else:
                    new_live.append(nxt)
            live = new_live
            if not live:
                break
        candidates = finished + live
        ranked = sorted(candidates,
                        key=lambda h: (-self._score(h.log_prob, h.n_terms), tuple(h.tokens)))
        return [(h.tokens, self._score(h.log_prob, h.n_terms)) for h in ranked]

    def sample_top_k(self, act: DialogueAct, u_prev: Sequence[int],
                     u_prev2: Sequence[int] | None, k: int,
                     rng: np.random.Generator, beam_size: int | None = None,
                     max_len: int | None = None) -> tuple[list[int], float, int]:
        """Uniformly sample one of the top-k beam results. Returns the chosen
        (tokens, score, index); fewer than k finished candidates sample
        among those available."""
        if k < 1:
            raise DataError("k must be >= 1")
        results = self.beam_search(act, u_prev, u_prev2,
                                   beam_size=max(k, beam_size or k), max_len=max_len)
        top = results[:k]
        idx = int(rng.integers(len(top)))
        tokens, score = top[idx]
        return list(tokens), score, idx

    # ---------------------------------------------------------------- scoring

    def sequence_log_prob_t(self, p: Mapping[str, Tensor], act: DialogueAct,
                            u_prev: Sequence[int], u_prev2: Sequence[int] | None,
                            response: Sequence[int]) -> Tensor:
        """Teacher-forced log-probability of a response, <eos> included."""
        if not response:
            raise EmptyInputError("cannot score an empty response")
        enc = self.encode_t(p, act, u_prev, u_prev2)
        state = enc.init_state
        prev = self.special.bos
        total = None
        for tok in list(response) + [self.special.eos]:
            dist, state = self._step_t(p, enc, state, prev)
            lp = T.log(T.dot(dist, _one_hot(self.vocab_size, tok)))
            total = lp if total is None else total + lp
            prev = tok if tok != self.special.eos else prev
        return total

    def sequence_log_prob(self, act: DialogueAct, u_prev: Sequence[int],
                          u_prev2: Sequence[int] | None,
                          response: Sequence[int]) -> float:
        return self.sequence_log_prob_t(self.store.bind(None), act, u_prev,
                                        u_prev2, response).item()


def _one_hot(n: int, i: int) -> np.ndarray:
    v = np.zeros(n)
    v[i] = 1.0
    return v
