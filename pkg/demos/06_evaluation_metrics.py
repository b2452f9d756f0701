#!/usr/bin/env python3
"""The evaluation battery on worked examples: BLEU with clipping and the
brevity penalty, three embedding similarities, distinct-n diversity, the
out-of-context ratio, and the engagement report over transcripts.
"""

import numpy as np

from actchat.acts import DialogueAct
from actchat.metrics import (bleu_n, distinct_n, embedding_metrics, engagement_report,
                             out_of_context_ratio)

print("== BLEU ==")
cases = [
    (["the", "soup", "was", "great"], ["the", "soup", "was", "great"]),
    (["the", "soup", "was", "great"], ["the", "soup", "tasted", "great"]),
    (["soup", "soup", "soup"], ["soup"]),
]
for cand, ref in cases:
    print(f"  cand={' '.join(cand)!r:34s} ref={' '.join(ref)!r:28s}"
          f" bleu1={bleu_n([cand], [ref], 1):.3f} bleu2={bleu_n([cand], [ref], 2):.3f}")

print()
print("== embedding similarity (average / extrema / greedy) ==")
vectors = {"soup": np.array([1.0, 0.0]), "tea": np.array([0.8, 0.6]),
           "rain": np.array([0.0, 1.0])}
for cand, ref in ([["soup"], ["tea"]], [["soup"], ["rain"]], [["soup", "tea"], ["rain"]]):
    out = embedding_metrics([cand], [ref], vectors)
    print(f"  {str(cand):18s} vs {str(ref):12s} avg={out['average']:.3f}"
          f" ext={out['extrema']:.3f} greedy={out['greedy']:.3f}")

print()
print("== diversity and novelty ==")
responses = [["yes", "i", "agree"], ["yes", "i", "agree"], ["what", "about", "tea"]]
print(f"  distinct-1 {distinct_n(responses, 1):.3f}, distinct-2 {distinct_n(responses, 2):.3f}")
context = ["do", "you", "like", "soup"]
for resp in (["yes", "i", "like", "soup"], ["what", "about", "the", "weather"]):
    print(f"  OOC({' '.join(resp)!r}) = {out_of_context_ratio(context, resp):.2f}")

print()
print("== engagement over act-annotated transcripts ==")
transcripts = [
    [DialogueAct.CM_S, DialogueAct.CM_Q, DialogueAct.CM_A],
    [DialogueAct.CM_S, DialogueAct.CS_S, DialogueAct.CM_S, DialogueAct.CM_Q,
     DialogueAct.CS_Q, DialogueAct.CM_A],
    [DialogueAct.CM_S, DialogueAct.CM_S],
]
report = engagement_report(transcripts)
for key, value in report.to_json().items():
    print(f"  {key}: {value}")
print("dialogues that switch context run longer here, the pattern the")
print("act policy is trained to exploit.")
