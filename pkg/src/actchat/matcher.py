"""Dual-encoder context/response relevance model trained by negative sampling.

Two GRU encoders read the context (recent turns joined by <sep>) and the
candidate response; the score is sigmoid(context . M . response). Scores
from one trained matcher are comparable with each other, not across
matchers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import tape as T
from .corpus import Corpus
from .errors import DataError
from .layers import AdaDelta, GruCell, uniform_init
from .tape import ParameterStore, Tape, Tensor


@dataclass
class MatcherConfig:
    word_emb: int = 32
    hidden: int = 32
    context_turns: int = 2


@dataclass
class MatcherTrainConfig:
    epochs: int = 40
    negative_ratio: int = 1
    batch_pairs: int = 4
    rho: float = 0.95
    epsilon: float = 1e-6
    lr: float = 5.0  # the bilinear score starts tiny; plain AdaDelta crawls
    seed: int = 0


def join_context(turn_tokens: Sequence[Sequence[int]], sep_id: int,
                 max_turns: int = 2) -> list[int]:
    """Most recent turns joined with the separator id, newest last."""
    recent = [list(t) for t in turn_tokens[-max_turns:] if t]
    if not recent:
        raise DataError("context has no tokens")
    joined: list[int] = []
    for i, toks in enumerate(recent):
        if i:
            joined.append(sep_id)
        joined.extend(toks)
    return joined


class MatcherNet:
    """m(context, response) in (0, 1)."""

    def __init__(self, vocab_size: int, cfg: MatcherConfig | None = None,
                 store: ParameterStore | None = None,
                 rng: np.random.Generator | None = None):
        self.cfg = cfg or MatcherConfig()
        self.vocab_size = vocab_size
        if store is None:
            store = ParameterStore()
            rng = rng or np.random.default_rng(0)
            c = self.cfg
            store.add("emb", uniform_init(rng, vocab_size, c.word_emb))
            GruCell.init(store, "ctx", c.word_emb, c.hidden, rng)
            GruCell.init(store, "resp", c.word_emb, c.hidden, rng)
            store.add("m", uniform_init(rng, c.hidden, c.hidden))
        self.store = store

    def _encode(self, p: Mapping[str, Tensor], prefix: str, ids: Sequence[int]) -> Tensor:
        emb = T.rows(p["emb"], ids)
        cell = GruCell(p, prefix)
        h = T.zeros(self.cfg.hidden)
        for j in range(len(ids)):
            h = cell.step(h, T.row(emb, j))
        return h

    def score_t(self, p: Mapping[str, Tensor], context: Sequence[int],
                response: Sequence[int]) -> Tensor:
        if not context or not response:
            raise DataError("matcher needs nonempty context and response")
        c = self._encode(p, "ctx", context)
        r = self._encode(p, "resp", response)
        return T.sigmoid(T.dot(c, T.matvec(p["m"], r)))

    def match_score(self, context: Sequence[int], response: Sequence[int]) -> float:
        return self.score_t(self.store.bind(None), context, response).item()


def build_pairs(corpus: Corpus, sep_id: int, rng: np.random.Generator,
                negative_ratio: int = 1, context_turns: int = 2
                ) -> list[tuple[list[int], list[int], float]]:
    """(context, response, label) pairs: the true next turn scores 1, and
    per positive, ``negative_ratio`` random utterances drawn from other
    dialogues score 0. A negative never repeats the true response text."""
    if len(corpus) < 2:
        raise DataError("negative sampling needs at least two dialogues")
    pairs = []
    for di, d in enumerate(corpus):
        for k in range(1, len(d.turns)):
            context = join_context([t.tokens for t in d.turns[:k]], sep_id, context_turns)
            positive = list(d.turns[k].tokens)
            pairs.append((context, positive, 1.0))
            for _ in range(negative_ratio):
                for _attempt in range(32):
                    oi = int(rng.integers(len(corpus)))
                    if oi == di:
                        continue
                    other = corpus[oi]
                    neg = list(other.turns[int(rng.integers(len(other.turns)))].tokens)
                    if neg != positive:
                        pairs.append((context, neg, 0.0))
                        break
    return pairs


def train_matcher(net: MatcherNet, corpus: Corpus, sep_id: int,
                  cfg: MatcherTrainConfig) -> list[dict]:
    """Binary cross entropy over positive and sampled negative pairs."""
    rng = np.random.default_rng(cfg.seed)
    pairs = build_pairs(corpus, sep_id, rng, cfg.negative_ratio, net.cfg.context_turns)
    opt = AdaDelta(net.store, rho=cfg.rho, epsilon=cfg.epsilon, lr=cfg.lr)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        epoch_loss = 0.0
        for start in range(0, len(pairs), cfg.batch_pairs):
            tp = Tape()
            p = net.store.bind(tp)
            loss = None
            for i in order[start:start + cfg.batch_pairs]:
                context, response, label = pairs[int(i)]
                s = net.score_t(p, context, response)
                term = -T.log(s) if label else -T.log(1.0 - s)
                loss = term if loss is None else loss + term
            if loss is None:
                continue
            tp.backward(loss)
            opt.step({name: p[name].grad for name in net.store.names()})
            epoch_loss += loss.item()
        history.append({"epoch": epoch, "train_loss": epoch_loss / max(len(pairs), 1)})
    return history


def ranking_auc(pos_scores: Sequence[float], neg_scores: Sequence[float]) -> float:
    """Probability a random positive outscores a random negative (ties 0.5)."""
    if not pos_scores or not neg_scores:
        raise DataError("AUC needs both positive and negative scores")
    wins = 0.0
    for ps in pos_scores:
        for ns in neg_scores:
            if ps > ns:
                wins += 1.0
            elif ps == ns:
                wins += 0.5
    return wins / (len(pos_scores) * len(neg_scores))
