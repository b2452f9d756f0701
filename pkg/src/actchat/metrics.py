"""Evaluation battery: BLEU, embedding similarity, distinct-n, novelty,
and dialogue-length engagement statistics.

All functions take tokenized sentences (lists of token strings) and are
pure, so corpus-level values are invariant to the order of the pairs.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .acts import DialogueAct
from .errors import DataError, EmptyInputError

Sentence = Sequence[str]

BLEU_EPS = 1e-9


def _ngrams(tokens: Sentence, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_n(candidates: Sequence[Sentence], references: Sequence[Sentence], n: int) -> float:
    """Corpus-level BLEU-n: geometric mean of clipped 1..n gram precisions
    with the brevity penalty; zero match counts fall back to a tiny epsilon
    so small corpora stay finite."""
    if n not in (1, 2):
        raise DataError("bleu_n supports n in {1, 2}")
    if len(candidates) != len(references):
        raise DataError("candidates and references must align")
    if not candidates:
        raise EmptyInputError("bleu over an empty corpus")
    log_sum = 0.0
    for order in range(1, n + 1):
        matched = 0
        total = 0
        for cand, ref in zip(candidates, references):
            c_counts = _ngrams(cand, order)
            r_counts = _ngrams(ref, order)
            matched += sum(min(c, r_counts[g]) for g, c in c_counts.items())
            total += sum(c_counts.values())
        if total == 0:
            precision = 1.0  # no n-grams of this order exist, vacuously perfect
        else:
            precision = matched / total if matched else BLEU_EPS / total
        log_sum += math.log(precision)
    cand_len = sum(len(c) for c in candidates)
    ref_len = sum(len(r) for r in references)
    if cand_len == 0:
        return 0.0
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * math.exp(log_sum / n)


def _sentence_vectors(sentence: Sentence, vectors: Mapping[str, np.ndarray]):
    return [np.asarray(vectors[t], dtype=np.float64) for t in sentence if t in vectors]


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def _extrema(vecs: list[np.ndarray]) -> np.ndarray:
    """Per-dimension value of largest magnitude; the positive value wins ties."""
    m = np.stack(vecs)
    hi = m.max(axis=0)
    lo = m.min(axis=0)
    return np.where(np.abs(lo) > np.abs(hi), lo, hi)


def embedding_metrics(candidates: Sequence[Sentence], references: Sequence[Sentence],
                      vectors: Mapping[str, np.ndarray]) -> dict:
    """Average, extrema, and greedy-match embedding similarity.

    Pairs where either sentence has no in-vocabulary word are skipped and
    counted in the report.
    """
    if len(candidates) != len(references):
        raise DataError("candidates and references must align")
    sums = {"average": 0.0, "extrema": 0.0, "greedy": 0.0}
    used = 0
    skipped = 0
    for cand, ref in zip(candidates, references):
        cv = _sentence_vectors(cand, vectors)
        rv = _sentence_vectors(ref, vectors)
        if not cv or not rv:
            skipped += 1
            continue
        used += 1
        sums["average"] += _cosine(np.mean(cv, axis=0), np.mean(rv, axis=0))
        sums["extrema"] += _cosine(_extrema(cv), _extrema(rv))
        fwd = float(np.mean([max(_cosine(a, b) for b in rv) for a in cv]))
        bwd = float(np.mean([max(_cosine(b, a) for a in cv) for b in rv]))
        sums["greedy"] += 0.5 * (fwd + bwd)
    out = {k: (v / used if used else 0.0) for k, v in sums.items()}
    out["pairs_used"] = used
    out["pairs_skipped"] = skipped
    return out


def distinct_n(responses: Sequence[Sentence], n: int) -> float:
    """Unique n-grams across all responses over total n-gram occurrences."""
    if n not in (1, 2):
        raise DataError("distinct_n supports n in {1, 2}")
    seen = set()
    total = 0
    for resp in responses:
        for i in range(len(resp) - n + 1):
            seen.add(tuple(resp[i:i + n]))
            total += 1
    return len(seen) / total if total else 0.0


def out_of_context_ratio(context: Sentence, response: Sentence) -> float:
    """Share of response tokens (counted per occurrence) that never appear
    in the context."""
    if not response:
        raise EmptyInputError("out_of_context_ratio of an empty response")
    context_set = set(context)
    novel = sum(1 for t in response if t not in context_set)
    return novel / len(response)


@dataclass
class EngagementReport:
    n_dialogues: int
    mean_length: float
    pct_with_context_switch: float
    pct_with_question: float
    mean_length_with_cs: float
    mean_length_without_cs: float

    def to_json(self) -> dict:
        return self.__dict__.copy()


def engagement_report(dialogues: Sequence[Sequence[DialogueAct]]) -> EngagementReport:
    """Length and act-usage statistics over act-annotated transcripts.

    Input is one act sequence per dialogue (acts of every turn in order).
    """
    if not dialogues:
        raise EmptyInputError("engagement report over no dialogues")
    lengths = np.array([len(d) for d in dialogues], dtype=np.float64)
    has_cs = np.array([any(DialogueAct(int(a)).is_context_switch for a in d)
                       for d in dialogues])
    has_q = np.array([any(DialogueAct(int(a)).is_question for a in d) for d in dialogues])
    with_cs = lengths[has_cs]
    without_cs = lengths[~has_cs]
    return EngagementReport(
        n_dialogues=len(dialogues),
        mean_length=float(lengths.mean()),
        pct_with_context_switch=float(has_cs.mean()),
        pct_with_question=float(has_q.mean()),
        mean_length_with_cs=float(with_cs.mean()) if with_cs.size else 0.0,
        mean_length_without_cs=float(without_cs.mean()) if without_cs.size else 0.0,
    )


def bootstrap_mean_diff(sample_a: Sequence[float], sample_b: Sequence[float],
                        n_resamples: int = 10000, seed: int = 0,
                        level: float = 0.95) -> tuple[float, float]:
    """Percentile bootstrap interval for mean(sample_b) - mean(sample_a)."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise EmptyInputError("bootstrap needs nonempty samples")
    rng = np.random.default_rng(seed)
    diffs = np.empty(n_resamples)
    for i in range(n_resamples):
        diffs[i] = (b[rng.integers(0, b.size, b.size)].mean()
                    - a[rng.integers(0, a.size, a.size)].mean())
    lo = float(np.quantile(diffs, (1.0 - level) / 2))
    hi = float(np.quantile(diffs, 1.0 - (1.0 - level) / 2))
    return lo, hi
