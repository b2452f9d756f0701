"""Dialogue-act controlled open-domain dialogue generation.

An act classifier tags conversations, an act policy picks what kind of
move to make next, an act-conditioned encoder-decoder writes the reply,
and a self-play REINFORCE loop tunes the policy for long, relevant
conversations. Everything runs on a small hand-rolled reverse-mode
autodiff tape over numpy arrays.
"""

from .acts import ACT_DEFINITIONS, ActDistribution, DialogueAct
from .bundle import ModelBundle, load_bundle, save_bundle
from .classifier import ActClassifier, ClassifierConfig, evaluate_classifier, train_classifier
from .config import AppConfig, load_config
from .corpus import (Dialogue, Utterance, Vocabulary, build_vocab, corpus_stats,
                     fleiss_kappa, read_jsonl, tag_corpus, tokenize, write_jsonl)
from .generator import GenerationNet, GeneratorConfig, SpecialIds
from .matcher import MatcherNet, MatcherConfig, train_matcher
from .metrics import (bleu_n, distinct_n, embedding_metrics, engagement_report,
                      out_of_context_ratio)
from .policy import PolicyConfig, PolicyNet
from .selfplay import (RlConfig, estimate_reward, reinforce_step, should_terminate,
                       simulate_dialogue, train_rl)
from .tape import ParameterStore, Tape, Tensor, cosine, cross_entropy, softmax
from .toyworld import ToyWorldConfig, generate_toy_corpus

__version__ = "0.1.0"
