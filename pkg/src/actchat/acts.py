"""The seven dialogue acts and distributions over them.

Acts combine what an utterance does with the conversational context
(maintain it or switch it) and its speech function (statement, question,
answer), plus a catch-all for greetings, thanks, and similar moves.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import DataError

N_ACTS = 7


class DialogueAct(enum.IntEnum):
    """Categorical label for the conversational function of an utterance."""

    CM_S = 0  # keep the current context, make a statement
    CM_Q = 1  # keep the current context, ask a question
    CM_A = 2  # keep the current context, answer the previous turn
    CS_S = 3  # switch to a new context with a statement
    CS_Q = 4  # switch to a new context with a question
    CS_A = 5  # answer the previous turn while opening a new context
    OTHER = 6  # greetings, thanks, requests, and similar

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def marker(self) -> str:
        """Vocabulary token that prefixes generator input for this act."""
        return f"<{_LABELS[self]}>"

    @property
    def is_context_switch(self) -> bool:
        return self in (DialogueAct.CS_S, DialogueAct.CS_Q, DialogueAct.CS_A)

    @property
    def is_question(self) -> bool:
        return self in (DialogueAct.CM_Q, DialogueAct.CS_Q)

    @classmethod
    def from_label(cls, label: str) -> "DialogueAct":
        try:
            return _BY_LABEL[label]
        except KeyError:
            raise DataError(f"unknown dialogue act label {label!r}") from None


_LABELS = {
    DialogueAct.CM_S: "CM.S",
    DialogueAct.CM_Q: "CM.Q",
    DialogueAct.CM_A: "CM.A",
    DialogueAct.CS_S: "CS.S",
    DialogueAct.CS_Q: "CS.Q",
    DialogueAct.CS_A: "CS.A",
    DialogueAct.OTHER: "O",
}
_BY_LABEL = {label: act for act, label in _LABELS.items()}

ACT_DEFINITIONS = {
    DialogueAct.CM_S: "Keeps the current topic going with information, a suggestion, or a comment.",
    DialogueAct.CM_Q: "Asks a question inside the current topic, e.g. to clarify or confirm.",
    DialogueAct.CM_A: "Answers or responds to the previous turn within the current topic.",
    DialogueAct.CS_S: "Moves the conversation to a new topic by stating new content.",
    DialogueAct.CS_Q: "Moves the conversation to a new topic by asking about something new.",
    DialogueAct.CS_A: "Replies to the previous turn while opening up a new topic.",
    DialogueAct.OTHER: "Greetings, thanks, requests, and other conversational housekeeping.",
}


class ActDistribution:
    """A probability vector over the seven acts; must sum to 1 within 1e-6."""

    __slots__ = ("probs",)

    def __init__(self, probs):
        p = np.asarray(probs, dtype=np.float64)
        if p.shape != (N_ACTS,):
            raise DataError(f"act distribution needs {N_ACTS} entries, got shape {p.shape}")
        if (p < 0).any():
            raise DataError("act distribution has negative entries")
        if abs(float(p.sum()) - 1.0) > 1e-6:
            raise DataError(f"act distribution sums to {p.sum():.8f}, not 1")
        self.probs = p

    @classmethod
    def one_hot(cls, act: DialogueAct) -> "ActDistribution":
        p = np.zeros(N_ACTS)
        p[int(act)] = 1.0
        return cls(p)

    @classmethod
    def from_votes(cls, votes) -> "ActDistribution":
        """Distribution from rater votes, e.g. three annotator labels."""
        p = np.zeros(N_ACTS)
        for act in votes:
            p[int(act)] += 1.0
        if p.sum() == 0:
            raise DataError("no votes given")
        return cls(p / p.sum())

    def argmax(self) -> DialogueAct:
        """Most probable act; ties resolve to the lowest act index."""
        return DialogueAct(int(np.argmax(self.probs)))

    def tolist(self) -> list[float]:
        return [float(x) for x in self.probs]

    def __eq__(self, other):
        return isinstance(other, ActDistribution) and np.array_equal(self.probs, other.probs)

    def __repr__(self):
        return f"ActDistribution({self.tolist()})"
