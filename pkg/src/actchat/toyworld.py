"""Synthetic template dialogue world with act labels known by construction.

Eight topics, each with a small bag of content words, and one template
family per dialogue act. Context-maintaining turns reuse words of the
current topic (biased toward a primary word, so they repeat a lot);
context-switching turns jump to a fresh topic and pull in its words.
Act sequences follow a configurable first-order transition matrix, so
the context-switch rate of the corpus is a config knob.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .acts import ActDistribution, DialogueAct, N_ACTS
from .corpus import Corpus, Dialogue, Utterance
from .errors import ConfigError

TOPICS: list[tuple[str, list[str]]] = [
    ("travel", ["tokyo", "beach", "hotel", "flight", "museum", "passport"]),
    ("food", ["noodles", "soup", "dumplings", "tea", "recipe", "cafeteria"]),
    ("music", ["guitar", "concert", "album", "piano", "melody", "band"]),
    ("sport", ["soccer", "tennis", "marathon", "coach", "stadium", "score"]),
    ("work", ["office", "meeting", "deadline", "project", "manager", "salary"]),
    ("weather", ["rain", "sunshine", "storm", "forecast", "winter", "breeze"]),
    ("movies", ["cinema", "director", "sequel", "trailer", "actor", "popcorn"]),
    ("books", ["novel", "author", "library", "chapter", "poetry", "shelf"]),
]

# every template ends on a topic content word: the encoder summary used by
# the repetition checks weights sentence endings heavily, so staying in one
# topic (whose primary word keeps coming back) reads as repetitive while a
# topic switch reads as fresh content
TEMPLATES: dict[DialogueAct, list[str]] = {
    DialogueAct.CM_S: [
        "today i really enjoyed the {w1}",
        "all my morning went into the {w1}",
        "there is so much to love about the {w1}",
    ],
    DialogueAct.CM_Q: [
        "how is the {w1}",
        "do you like the {w1}",
        "what about the {w1}",
    ],
    DialogueAct.CM_A: [
        "yes i truly loved the {w1}",
        "no i got tired of the {w1}",
    ],
    DialogueAct.CS_S: [
        "by the way yesterday i tried the {v1} and then the wonderful {v2}",
        "anyway these days i keep thinking about the {v1} and the {v2}",
        "oh that reminds me of the {v1} near the great {v2}",
    ],
    DialogueAct.CS_Q: [
        "speaking of other things have you tried the {v1}",
        "on a different note what about the {v1}",
    ],
    DialogueAct.CS_A: [
        "maybe but lately all my time goes into the {v1} and the {v2}",
        "sort of though i care much more about the {v1}",
    ],
    DialogueAct.OTHER: [
        "thanks a lot",
        "hello there",
        "you are welcome",
        "see you soon",
    ],
}

_DEFAULT_TRANSITION = np.array([
    # CM.S   CM.Q   CM.A   CS.S   CS.Q   CS.A   O
    [0.38, 0.22, 0.08, 0.12, 0.07, 0.03, 0.10],  # after CM.S
    [0.12, 0.05, 0.55, 0.08, 0.05, 0.12, 0.03],  # after CM.Q
    [0.40, 0.15, 0.05, 0.18, 0.10, 0.02, 0.10],  # after CM.A
    [0.45, 0.20, 0.05, 0.10, 0.08, 0.02, 0.10],  # after CS.S
    [0.15, 0.05, 0.55, 0.08, 0.04, 0.10, 0.03],  # after CS.Q
    [0.45, 0.20, 0.05, 0.12, 0.08, 0.02, 0.08],  # after CS.A
    [0.45, 0.20, 0.05, 0.12, 0.08, 0.02, 0.08],  # after O
])

_DEFAULT_INITIAL = np.array([0.60, 0.15, 0.0, 0.10, 0.05, 0.0, 0.10])

_CS = [int(DialogueAct.CS_S), int(DialogueAct.CS_Q), int(DialogueAct.CS_A)]
_NON_CS = [int(a) for a in DialogueAct if int(a) not in _CS]


def rescale_cs_mass(dist: np.ndarray, cs_mass: float) -> np.ndarray:
    """Rescale a distribution so the three context-switch acts carry cs_mass."""
    out = np.array(dist, dtype=np.float64)
    cs = out[_CS].sum()
    non = out[_NON_CS].sum()
    if cs <= 0 or non <= 0:
        raise ConfigError("distribution must give positive mass to both act groups")
    out[_CS] *= cs_mass / cs
    out[_NON_CS] *= (1.0 - cs_mass) / non
    return out


def transition_with_cs_mass(cs_mass: float) -> tuple[np.ndarray, np.ndarray]:
    """Default transition matrix and initial distribution, rescaled so every
    row puts cs_mass on the context-switch acts."""
    matrix = np.stack([rescale_cs_mass(row, cs_mass) for row in _DEFAULT_TRANSITION])
    return matrix, rescale_cs_mass(_DEFAULT_INITIAL, cs_mass)


@dataclass
class ToyWorldConfig:
    min_turns: int = 4
    max_turns: int = 8
    transition: np.ndarray = field(default_factory=lambda: _DEFAULT_TRANSITION.copy())
    initial: np.ndarray = field(default_factory=lambda: _DEFAULT_INITIAL.copy())
    primary_word_bias: float = 0.6

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=np.float64)
        self.initial = np.asarray(self.initial, dtype=np.float64)
        if self.transition.shape != (N_ACTS, N_ACTS):
            raise ConfigError(f"transition matrix must be {N_ACTS}x{N_ACTS}")
        if (self.transition < 0).any() or (self.initial < 0).any():
            raise ConfigError("act probabilities must be nonnegative")
        for i, row in enumerate(self.transition):
            if abs(float(row.sum()) - 1.0) > 1e-6:
                raise ConfigError(f"transition row {i} sums to {row.sum():.8f}, not 1")
        if abs(float(self.initial.sum()) - 1.0) > 1e-6:
            raise ConfigError("initial act distribution does not sum to 1")
        if self.min_turns < 2 or self.max_turns < self.min_turns:
            raise ConfigError("need max_turns >= min_turns >= 2")


def _pick_words(rng: np.random.Generator, words: list[str], bias: float) -> tuple[str, str]:
    if bias > 0 and rng.random() < bias:
        first = words[0]
    else:
        first = words[int(rng.integers(len(words)))]
    rest = [w for w in words if w != first]
    second = rest[int(rng.integers(len(rest)))]
    return first, second


def _render(act: DialogueAct, topic_words: list[str], new_words: list[str] | None,
            rng: np.random.Generator, bias: float) -> str:
    template = TEMPLATES[act][int(rng.integers(len(TEMPLATES[act])))]
    w1, w2 = _pick_words(rng, topic_words, bias)
    fields = {"w1": w1, "w2": w2}
    if new_words is not None:
        v1, v2 = _pick_words(rng, new_words, 0.0)
        fields.update(v1=v1, v2=v2)
    return template.format(**fields)


def generate_toy_corpus(seed: int, n_dialogues: int,
                        config: ToyWorldConfig | None = None) -> Corpus:
    """Deterministic synthetic corpus; every turn's true act is its gold label."""
    cfg = config or ToyWorldConfig()
    rng = np.random.default_rng(seed)
    transition = cfg.transition / cfg.transition.sum(axis=1, keepdims=True)
    initial = cfg.initial / cfg.initial.sum()

    corpus: Corpus = []
    for i in range(n_dialogues):
        topic = int(rng.integers(len(TOPICS)))
        n_turns = int(rng.integers(cfg.min_turns, cfg.max_turns + 1))
        turns: list[Utterance] = []
        act_idx: int | None = None
        for k in range(n_turns):
            p = initial if act_idx is None else transition[act_idx]
            act_idx = int(rng.choice(N_ACTS, p=p))
            act = DialogueAct(act_idx)
            new_words = None
            if act.is_context_switch:
                choices = [t for t in range(len(TOPICS)) if t != topic]
                topic = choices[int(rng.integers(len(choices)))]
                new_words = TOPICS[topic][1]
            text = _render(act, TOPICS[topic][1] if new_words is None else new_words,
                           new_words, rng, cfg.primary_word_bias)
            turns.append(Utterance(speaker="AB"[k % 2], text=text,
                                   gold=ActDistribution.one_hot(act)))
        corpus.append(Dialogue(id=f"toy-{seed}-{i:05d}", turns=turns))
    return corpus
