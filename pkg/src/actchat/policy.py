"""Act-selection policy over the conversation history.

Each past utterance runs through a word-level biGRU; the final utterance
states feed a session-level GRU, and the past act embeddings feed an
act-level GRU in parallel. The two final states concatenate into a
two-layer MLP that outputs the distribution of the next dialogue act.
An empty session (the bot speaks first) uses zero vectors for both
final states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import tape as T
from .acts import DialogueAct, N_ACTS
from .errors import DataError
from .layers import GruCell, Mlp2, bigru_states, uniform_init
from .tape import ParameterStore, Tensor

SessionTurn = tuple[Sequence[int], DialogueAct]
SessionState = Sequence[SessionTurn]


@dataclass
class PolicyConfig:
    word_emb: int = 32
    utt_hidden: int = 32
    session_hidden: int = 32
    act_emb: int = 16
    act_hidden: int = 16
    mlp_hidden: int = 50
    window: int | None = 10  # most recent turns encoded; None keeps all


class PolicyNet:
    """p(next act | session) over the seven dialogue acts."""

    def __init__(self, vocab_size: int, cfg: PolicyConfig | None = None,
                 store: ParameterStore | None = None,
                 rng: np.random.Generator | None = None):
        self.cfg = cfg or PolicyConfig()
        self.vocab_size = vocab_size
        if store is None:
            store = ParameterStore()
            rng = rng or np.random.default_rng(0)
            c = self.cfg
            store.add("emb", uniform_init(rng, vocab_size, c.word_emb))
            GruCell.init(store, "utt_f", c.word_emb, c.utt_hidden, rng)
            GruCell.init(store, "utt_b", c.word_emb, c.utt_hidden, rng)
            GruCell.init(store, "sess", 2 * c.utt_hidden, c.session_hidden, rng)
            store.add("act_emb", uniform_init(rng, N_ACTS, c.act_emb))
            GruCell.init(store, "act", c.act_emb, c.act_hidden, rng)
            Mlp2.init(store, "mlp", c.session_hidden + c.act_hidden, c.mlp_hidden, N_ACTS, rng)
        self.store = store

    def _encode_utterance(self, p: Mapping[str, Tensor], ids: Sequence[int]) -> Tensor:
        emb = T.rows(p["emb"], ids)
        inputs = [T.row(emb, j) for j in range(len(ids))]
        fwd, bwd = bigru_states(GruCell(p, "utt_f"), GruCell(p, "utt_b"), inputs)
        return T.concat([fwd[-1], bwd[-1]])

    def _validate(self, session: SessionState) -> list[SessionTurn]:
        turns = []
        for entry in session:
            if len(entry) != 2:
                raise DataError("session turns must be (token ids, act) pairs")
            ids, act = entry
            if not ids:
                raise DataError("session contains an empty utterance")
            turns.append((list(ids), DialogueAct(int(act))))
        if self.cfg.window is not None and len(turns) > self.cfg.window:
            turns = turns[-self.cfg.window:]
        return turns

    def distribution_t(self, p: Mapping[str, Tensor], session: SessionState) -> Tensor:
        turns = self._validate(session)
        t_state = T.zeros(self.cfg.session_hidden)
        a_state = T.zeros(self.cfg.act_hidden)
        sess_cell = GruCell(p, "sess")
        act_cell = GruCell(p, "act")
        for ids, act in turns:
            t_state = sess_cell.step(t_state, self._encode_utterance(p, ids))
            a_state = act_cell.step(a_state, T.row(p["act_emb"], int(act)))
        logits = Mlp2(p, "mlp").logits(T.concat([t_state, a_state]))
        return T.softmax(logits)

    def act_distribution(self, session: SessionState) -> np.ndarray:
        return self.distribution_t(self.store.bind(None), session).data

    def log_prob_t(self, p: Mapping[str, Tensor], session: SessionState,
                   act: DialogueAct) -> Tensor:
        dist = self.distribution_t(p, session)
        return T.log(T.dot(dist, _one_hot(int(act))))

    def select_act(self, session: SessionState, mode: str = "greedy",
                   rng: np.random.Generator | None = None) -> DialogueAct:
        """Greedy picks the argmax (lowest index on ties); sample draws from
        the distribution with the given generator."""
        dist = self.act_distribution(session)
        if mode == "greedy":
            return DialogueAct(int(np.argmax(dist)))
        if mode == "sample":
            if rng is None:
                raise DataError("sampling needs an rng")
            return DialogueAct(int(rng.choice(N_ACTS, p=dist / dist.sum())))
        raise DataError(f"unknown selection mode {mode!r}")

    def prefix_distributions_t(self, p: Mapping[str, Tensor],
                               turns: Sequence[SessionTurn]) -> list[Tensor]:
        """Distributions for every prefix of a dialogue, sharing the encoder
        work across turns: entry k predicts the act of turn k given turns
        < k. Valid only when the dialogue fits the session window."""
        if self.cfg.window is not None and len(turns) > self.cfg.window:
            return [self.distribution_t(p, turns[:k]) for k in range(len(turns))]
        mlp = Mlp2(p, "mlp")
        sess_cell = GruCell(p, "sess")
        act_cell = GruCell(p, "act")
        t_state = T.zeros(self.cfg.session_hidden)
        a_state = T.zeros(self.cfg.act_hidden)
        out = []
        for ids, act in turns:
            out.append(T.softmax(mlp.logits(T.concat([t_state, a_state]))))
            t_state = sess_cell.step(t_state, self._encode_utterance(p, list(ids)))
            a_state = act_cell.step(a_state, T.row(p["act_emb"], int(act)))
        return out


def _one_hot(i: int) -> np.ndarray:
    v = np.zeros(N_ACTS)
    v[i] = 1.0
    return v
