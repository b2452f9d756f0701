"""Dialogue data model, tokenization, vocabulary, corpus statistics, and I/O.

Corpora are JSON-lines files, one dialogue per line:

    {"id": str, "turns": [{"speaker": "A"|"B", "text": str,
                           "act": str|null, "act_dist": [7 floats]|null}]}

where "act" uses the act labels "CM.S" ... "O". Speakers must strictly
alternate; violations are rejected at ingestion.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .acts import ActDistribution, DialogueAct, N_ACTS
from .errors import ConfigError, DataError, EmptyInputError

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

PAD, UNK, BOS, EOS, SEP = "<pad>", "<unk>", "<bos>", "<eos>", "<sep>"
RESERVED_TOKENS = [PAD, UNK, BOS, EOS, SEP] + [act.marker for act in DialogueAct]


def split_text(text: str) -> list[str]:
    """Lowercase and split on whitespace, separating punctuation marks."""
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    """Token/id mapping with fixed reserved ids.

    Ids 0..4 are <pad>, <unk>, <bos>, <eos>, <sep>; ids 5..11 are the seven
    act marker tokens in act-index order; content tokens follow densely.
    """

    def __init__(self, tokens: Sequence[str]):
        self.tokens = list(tokens)
        if self.tokens[:len(RESERVED_TOKENS)] != RESERVED_TOKENS:
            raise DataError("vocabulary must start with the reserved tokens")
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise DataError("vocabulary contains duplicate tokens")

    pad_id = 0
    unk_id = 1
    bos_id = 2
    eos_id = 3
    sep_id = 4

    def __len__(self):
        return len(self.tokens)

    def marker_id(self, act: DialogueAct) -> int:
        return 5 + int(act)

    def encode_token(self, token: str) -> int:
        return self.index.get(token, self.unk_id)

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]

    def to_json(self) -> list[str]:
        return list(self.tokens)

    @classmethod
    def from_json(cls, tokens: Sequence[str]) -> "Vocabulary":
        return cls(tokens)


def build_vocab(texts: Iterable[str], max_size: int) -> Vocabulary:
    """Most frequent tokens up to max_size, ties broken lexicographically."""
    counts: dict[str, int] = {}
    n_texts = 0
    for text in texts:
        n_texts += 1
        for tok in split_text(text):
            counts[tok] = counts.get(tok, 0) + 1
    if n_texts == 0:
        raise EmptyInputError("cannot build a vocabulary from an empty corpus")
    room = max(0, max_size - len(RESERVED_TOKENS))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [tok for tok, _ in ranked[:room] if tok not in RESERVED_TOKENS]
    return Vocabulary(RESERVED_TOKENS + kept)


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    """Token ids for a text; unknown tokens map to the <unk> id."""
    toks = split_text(text)
    if not toks:
        raise EmptyInputError("cannot tokenize empty text")
    return [vocab.encode_token(t) for t in toks]


def detokenize(ids: Sequence[int], vocab: Vocabulary) -> str:
    return " ".join(vocab.decode(ids))


@dataclass
class Utterance:
    speaker: str
    text: str
    tokens: list[int] = field(default_factory=list)
    gold: ActDistribution | None = None
    predicted: DialogueAct | None = None

    @property
    def gold_act(self) -> DialogueAct | None:
        return self.gold.argmax() if self.gold is not None else None

    @property
    def act(self) -> DialogueAct | None:
        """Best available act label: prediction first, else gold."""
        if self.predicted is not None:
            return self.predicted
        return self.gold_act


@dataclass
class Dialogue:
    id: str
    turns: list[Utterance]
    termination: str | None = None

    def __post_init__(self):
        for prev, cur in zip(self.turns, self.turns[1:]):
            if prev.speaker == cur.speaker:
                raise DataError(f"dialogue {self.id!r}: speakers do not alternate")
        for t in self.turns:
            if t.speaker not in ("A", "B"):
                raise DataError(f"dialogue {self.id!r}: bad speaker {t.speaker!r}")


Corpus = list[Dialogue]


def tokenize_corpus(corpus: Corpus, vocab: Vocabulary) -> None:
    for d in corpus:
        for turn in d.turns:
            turn.tokens = tokenize(turn.text, vocab)


def dialogue_to_json(d: Dialogue) -> dict:
    out = {
        "id": d.id,
        "turns": [
            {
                "speaker": t.speaker,
                "text": t.text,
                "act": t.act.label if t.act is not None else None,
                "act_dist": t.gold.tolist() if t.gold is not None else None,
            }
            for t in d.turns
        ],
    }
    if d.termination is not None:
        out["termination"] = d.termination
    return out


def dialogue_from_json(obj: dict) -> Dialogue:
    turns = []
    for raw in obj["turns"]:
        gold = ActDistribution(raw["act_dist"]) if raw.get("act_dist") is not None else None
        predicted = None
        if raw.get("act") is not None:
            act = DialogueAct.from_label(raw["act"])
            if gold is None:
                predicted = act
            elif gold.argmax() != act:
                predicted = act
        turns.append(Utterance(speaker=raw["speaker"], text=raw["text"],
                               gold=gold, predicted=predicted))
    return Dialogue(id=obj["id"], turns=turns, termination=obj.get("termination"))


def write_jsonl(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in corpus:
            fh.write(json.dumps(dialogue_to_json(d), ensure_ascii=False) + "\n")


def read_jsonl(path) -> Corpus:
    corpus = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                corpus.append(dialogue_from_json(json.loads(line)))
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}:{line_no}: bad dialogue record: {exc}") from exc
    return corpus


@dataclass
class CorpusStats:
    """Raw counts over a corpus; derived rates come from properties.

    Counts add across corpora, so stats of a concatenation equal the merged
    stats of the parts.
    """

    n_dialogues: int = 0
    n_utterances: int = 0
    n_tokens: int = 0
    min_turns: int = 0
    max_turns: int = 0
    act_counts: np.ndarray = field(default_factory=lambda: np.zeros(N_ACTS, dtype=np.int64))
    n_labeled: int = 0
    n_dialogues_with_cs: int = 0
    n_dialogues_labeled: int = 0
    sum_turns_before_first_cs: int = 0

    @property
    def avg_turns(self) -> float:
        return self.n_utterances / self.n_dialogues if self.n_dialogues else 0.0

    @property
    def avg_tokens_per_utterance(self) -> float:
        return self.n_tokens / self.n_utterances if self.n_utterances else 0.0

    @property
    def act_frequencies(self) -> dict[str, float]:
        total = int(self.act_counts.sum())
        return {act.label: (int(self.act_counts[int(act)]) / total if total else 0.0)
                for act in DialogueAct}

    @property
    def pct_dialogues_with_context_switch(self) -> float:
        if not self.n_dialogues_labeled:
            return 0.0
        return self.n_dialogues_with_cs / self.n_dialogues_labeled

    @property
    def avg_turns_before_first_context_switch(self) -> float:
        """Mean count of turns preceding the first context-switch tag,
        over dialogues that contain one."""
        if not self.n_dialogues_with_cs:
            return 0.0
        return self.sum_turns_before_first_cs / self.n_dialogues_with_cs

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(
            n_dialogues=self.n_dialogues + other.n_dialogues,
            n_utterances=self.n_utterances + other.n_utterances,
            n_tokens=self.n_tokens + other.n_tokens,
            min_turns=min(x for x in (self.min_turns, other.min_turns) if x) if
            (self.min_turns or other.min_turns) else 0,
            max_turns=max(self.max_turns, other.max_turns),
            act_counts=self.act_counts + other.act_counts,
            n_labeled=self.n_labeled + other.n_labeled,
            n_dialogues_with_cs=self.n_dialogues_with_cs + other.n_dialogues_with_cs,
            n_dialogues_labeled=self.n_dialogues_labeled + other.n_dialogues_labeled,
            sum_turns_before_first_cs=(self.sum_turns_before_first_cs
                                       + other.sum_turns_before_first_cs),
        )

    def to_json(self) -> dict:
        return {
            "n_dialogues": self.n_dialogues,
            "n_utterances": self.n_utterances,
            "min_turns": self.min_turns,
            "max_turns": self.max_turns,
            "avg_turns": self.avg_turns,
            "avg_tokens_per_utterance": self.avg_tokens_per_utterance,
            "act_frequencies": self.act_frequencies,
            "pct_dialogues_with_context_switch": self.pct_dialogues_with_context_switch,
            "avg_turns_before_first_context_switch":
                self.avg_turns_before_first_context_switch,
        }


def corpus_stats(corpus: Corpus) -> CorpusStats:
    stats = CorpusStats()
    turn_counts = []
    for d in corpus:
        stats.n_dialogues += 1
        turn_counts.append(len(d.turns))
        labeled_all = True
        first_cs = None
        for i, t in enumerate(d.turns):
            stats.n_utterances += 1
            stats.n_tokens += len(t.tokens) if t.tokens else len(split_text(t.text))
            act = t.act
            if act is None:
                labeled_all = False
            else:
                stats.act_counts[int(act)] += 1
                stats.n_labeled += 1
                if act.is_context_switch and first_cs is None:
                    first_cs = i
        if labeled_all and d.turns:
            stats.n_dialogues_labeled += 1
            if first_cs is not None:
                stats.n_dialogues_with_cs += 1
                stats.sum_turns_before_first_cs += first_cs
    stats.min_turns = min(turn_counts) if turn_counts else 0
    stats.max_turns = max(turn_counts) if turn_counts else 0
    return stats


def fleiss_kappa(items: Sequence[Sequence[DialogueAct | int]]) -> float:
    """Fleiss' kappa over items rated by the same number of raters each."""
    if not items:
        raise EmptyInputError("fleiss_kappa of no items")
    n_raters = len(items[0])
    if n_raters < 2:
        raise ConfigError("fleiss_kappa needs at least 2 raters per item")
    table = np.zeros((len(items), N_ACTS))
    for i, votes in enumerate(items):
        if len(votes) != n_raters:
            raise DataError("all items must have the same number of raters")
        for v in votes:
            table[i, int(v)] += 1
    n = float(n_raters)
    p_item = ((table * table).sum(axis=1) - n) / (n * (n - 1))
    p_bar = float(p_item.mean())
    p_cat = table.sum(axis=0) / table.sum()
    p_exp = float((p_cat * p_cat).sum())
    if abs(1.0 - p_exp) < 1e-12:
        return 1.0 if p_bar >= 1.0 - 1e-12 else 0.0
    return (p_bar - p_exp) / (1.0 - p_exp)


def tag_corpus(corpus: Corpus, classifier) -> Corpus:
    """Tag every utterance sequentially with a trained act classifier.

    Turn k is tagged from (u_k, u_{k-1}, predicted act_{k-1}); the first
    turn uses zero padding for both. Returns a new corpus; inputs are
    not modified.
    """
    tagged = []
    for d in corpus:
        new_turns = []
        prev_tokens: list[int] | None = None
        prev_act: DialogueAct | None = None
        for t in d.turns:
            dist = classifier.classify(t.tokens, prev_tokens, prev_act)
            act = DialogueAct(int(np.argmax(dist)))
            new_turns.append(Utterance(speaker=t.speaker, text=t.text,
                                       tokens=list(t.tokens), gold=t.gold, predicted=act))
            prev_tokens, prev_act = t.tokens, act
        tagged.append(Dialogue(id=d.id, turns=new_turns, termination=d.termination))
    return tagged
