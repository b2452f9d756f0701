"""Dialogue act classifier: two utterance encoders, an act embedding, an MLP.

The current and previous utterances run through separate bidirectional
GRU encoders (optionally shared); their final states concatenate with
the embedding of the previous act and feed a two-layer MLP that outputs
a 7-way act distribution. The first turn of a dialogue substitutes zero
vectors for the missing previous utterance and act.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import tape as T
from .acts import DialogueAct, N_ACTS
from .corpus import Corpus
from .errors import DataError, EmptyInputError
from .layers import AdaDelta, GruCell, Mlp2, bigru_states, uniform_init
from .tape import ParameterStore, Tape, Tensor


@dataclass
class ClassifierConfig:
    word_emb: int = 32
    act_emb: int = 16
    hidden: int = 32
    mlp_hidden: int = 32
    share_encoders: bool = False


@dataclass
class ClassifierTrainConfig:
    epochs: int = 40
    batch_dialogues: int | None = 8  # None trains full batch
    rho: float = 0.95
    epsilon: float = 1e-6
    lr: float = 1.0
    patience: int = 5
    freeze_embeddings: bool = False  # keep externally supplied vectors fixed
    embeddings_file: str | None = None  # one "token v1 .. vN" per line
    seed: int = 0


class ActClassifier:
    """c(u_i, u_{i-1}, a_{i-1}) -> distribution over the seven acts."""

    def __init__(self, vocab_size: int, cfg: ClassifierConfig | None = None,
                 store: ParameterStore | None = None, rng: np.random.Generator | None = None,
                 embeddings: np.ndarray | None = None):
        """``embeddings`` optionally seeds the word-embedding table, e.g. from
        externally pretrained vectors (see the README file format); training
        can then freeze it via ClassifierTrainConfig.freeze_embeddings."""
        self.cfg = cfg or ClassifierConfig()
        self.vocab_size = vocab_size
        if store is None:
            store = ParameterStore()
            rng = rng or np.random.default_rng(0)
            c = self.cfg
            emb = uniform_init(rng, vocab_size, c.word_emb)
            if embeddings is not None:
                emb = np.asarray(embeddings, dtype=np.float64)
                if emb.shape != (vocab_size, c.word_emb):
                    raise DataError(f"embeddings shape {emb.shape} does not match "
                                    f"({vocab_size}, {c.word_emb})")
            store.add("emb", emb)
            GruCell.init(store, "cur_f", c.word_emb, c.hidden, rng)
            GruCell.init(store, "cur_b", c.word_emb, c.hidden, rng)
            if not c.share_encoders:
                GruCell.init(store, "prev_f", c.word_emb, c.hidden, rng)
                GruCell.init(store, "prev_b", c.word_emb, c.hidden, rng)
            store.add("act_emb", uniform_init(rng, N_ACTS, c.act_emb))
            Mlp2.init(store, "mlp", 4 * c.hidden + c.act_emb, c.mlp_hidden, N_ACTS, rng)
        self.store = store

    def _encode_final(self, p: Mapping[str, Tensor], prefix: str, ids: Sequence[int]) -> Tensor:
        emb = T.rows(p["emb"], ids)
        inputs = [T.row(emb, j) for j in range(len(ids))]
        fwd, bwd = bigru_states(GruCell(p, prefix + "_f"), GruCell(p, prefix + "_b"), inputs)
        return T.concat([fwd[-1], bwd[-1]])

    def _check_ids(self, ids: Sequence[int]) -> None:
        for i in ids:
            if not 0 <= i < self.vocab_size:
                raise DataError(f"token id {i} out of vocabulary range 0..{self.vocab_size - 1}")

    def distribution_t(self, p: Mapping[str, Tensor], u: Sequence[int],
                       u_prev: Sequence[int] | None,
                       a_prev: DialogueAct | None) -> Tensor:
        if not u:
            raise EmptyInputError("classify needs a nonempty utterance")
        self._check_ids(u)
        c = self.cfg
        cur = self._encode_final(p, "cur", u)
        prev_prefix = "cur" if c.share_encoders else "prev"
        if u_prev:
            self._check_ids(u_prev)
            prev = self._encode_final(p, prev_prefix, u_prev)
        else:
            prev = T.zeros(2 * c.hidden)
        act_vec = T.row(p["act_emb"], int(a_prev)) if a_prev is not None else T.zeros(c.act_emb)
        logits = Mlp2(p, "mlp").logits(T.concat([cur, prev, act_vec]))
        return T.softmax(logits)

    def classify(self, u: Sequence[int], u_prev: Sequence[int] | None = None,
                 a_prev: DialogueAct | None = None) -> np.ndarray:
        """Inference-path act distribution as a plain array."""
        return self.distribution_t(self.store.bind(None), u, u_prev, a_prev).data

    def loss_t(self, p: Mapping[str, Tensor], dialogues: Corpus) -> Tensor:
        """Summed cross entropy against gold act distributions, with the gold
        previous act teacher-forced."""
        total = None
        for d in dialogues:
            prev_tokens: Sequence[int] | None = None
            prev_act: DialogueAct | None = None
            for t in d.turns:
                if t.gold is None:
                    raise DataError(f"dialogue {d.id!r} has an unlabeled turn")
                dist = self.distribution_t(p, t.tokens, prev_tokens, prev_act)
                ce = T.cross_entropy(dist, t.gold.probs)
                total = ce if total is None else total + ce
                prev_tokens, prev_act = t.tokens, t.gold.argmax()
        if total is None:
            raise EmptyInputError("no dialogues to train on")
        return total


def train_classifier(clf: ActClassifier, train: Corpus, cfg: ClassifierTrainConfig,
                     val: Corpus | None = None) -> list[dict]:
    """AdaDelta training on gold labels; early-stops on validation accuracy.

    Returns one record per epoch with the training loss and, when a
    validation corpus is given, sequential tagging accuracy on it. The
    store is left at the best validation epoch.
    """
    opt = AdaDelta(clf.store, rho=cfg.rho, epsilon=cfg.epsilon, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    history: list[dict] = []
    best_acc = -1.0
    best_state: dict[str, np.ndarray] | None = None
    since_best = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train))
        epoch_loss = 0.0
        batch = cfg.batch_dialogues or len(train)
        for start in range(0, len(train), batch):
            chunk = [train[int(i)] for i in order[start:start + batch]]
            tp = Tape()
            p = clf.store.bind(tp)
            loss = clf.loss_t(p, chunk)
            tp.backward(loss)
            opt.step({name: p[name].grad for name in clf.store.names()
                      if not (cfg.freeze_embeddings and name == "emb")})
            epoch_loss += loss.item()
        record = {"epoch": epoch, "train_loss": epoch_loss}
        if val is not None:
            acc = evaluate_classifier(clf, val)
            record["val_accuracy"] = acc
            if acc > best_acc:
                best_acc, since_best = acc, 0
                best_state = {k: v.copy() for k, v in clf.store.items()}
            else:
                since_best += 1
        history.append(record)
        if val is not None and since_best >= cfg.patience:
            break
    if best_state is not None:
        clf.store.load_state(best_state)
    return history


def evaluate_classifier(clf: ActClassifier, corpus: Corpus) -> float:
    """Sequential tagging accuracy: each turn is predicted from the model's
    own previous prediction, and compared to the gold argmax."""
    correct = 0
    total = 0
    for d in corpus:
        prev_tokens: Sequence[int] | None = None
        prev_act: DialogueAct | None = None
        for t in d.turns:
            dist = clf.classify(t.tokens, prev_tokens, prev_act)
            pred = DialogueAct(int(np.argmax(dist)))
            if t.gold is None:
                raise DataError("evaluation corpus must be fully labeled")
            correct += int(pred == t.gold.argmax())
            total += 1
            prev_tokens, prev_act = t.tokens, pred
    return correct / total if total else 0.0
