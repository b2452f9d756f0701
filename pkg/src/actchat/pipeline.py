"""End-to-end pipeline commands: corpus generation, classifier training and
tagging, joint supervised training of the policy and generator, matcher
training, self-play RL, simulation, and the evaluation battery.

Every command is a plain function over (config, paths, seed) that writes
its artifacts deterministically: rerunning with the same inputs produces
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import tape as T
from .acts import ActDistribution
from .bundle import ModelBundle, load_bundle, save_bundle
from .classifier import ActClassifier, train_classifier, evaluate_classifier
from .config import AppConfig
from .corpus import (Corpus, Dialogue, Utterance, Vocabulary, build_vocab, corpus_stats,
                     detokenize, read_jsonl, tag_corpus, tokenize_corpus, write_jsonl)
from .errors import DataError
from .generator import GenerationNet, SpecialIds
from .layers import AdaDelta
from .matcher import MatcherNet, train_matcher
from .metrics import (bleu_n, distinct_n, embedding_metrics, engagement_report,
                      out_of_context_ratio)
from .policy import PolicyNet
from .selfplay import simulate_dialogue, train_rl
from .tape import Tape
from .toyworld import ToyWorldConfig, generate_toy_corpus, transition_with_cs_mass


def _dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")


def _session_turns(turns) -> list:
    out = []
    for t in turns:
        if t.act is None:
            raise DataError("pipeline needs act labels on every turn; run tagging first")
        out.append((t.tokens, t.act))
    return out


# --------------------------------------------------------------- gen-corpus

def gen_corpus(cfg: AppConfig, out_dir, seed: int) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    c = cfg.corpus
    if c.cs_mass > 0:
        transition, initial = transition_with_cs_mass(c.cs_mass)
        world = ToyWorldConfig(min_turns=c.min_turns, max_turns=c.max_turns,
                               transition=transition, initial=initial,
                               primary_word_bias=c.primary_word_bias)
    else:
        world = ToyWorldConfig(min_turns=c.min_turns, max_turns=c.max_turns,
                               primary_word_bias=c.primary_word_bias)
    corpus = generate_toy_corpus(seed, c.n_dialogues, world)
    n_train = int(len(corpus) * c.train_frac)
    n_val = int(len(corpus) * c.val_frac)
    splits = {"train": corpus[:n_train],
              "val": corpus[n_train:n_train + n_val],
              "test": corpus[n_train + n_val:]}
    vocab = build_vocab((t.text for d in splits["train"] for t in d.turns), c.vocab_size)
    _dump_json(vocab.to_json(), out / "vocab.json")
    stats = {}
    for name, part in splits.items():
        write_jsonl(part, out / f"{name}.jsonl")
        stats[name] = corpus_stats(part).to_json()
    _dump_json(stats, out / "stats.json")
    return stats


def load_split(data_dir, name: str, vocab: Vocabulary) -> Corpus:
    corpus = read_jsonl(Path(data_dir) / f"{name}.jsonl")
    tokenize_corpus(corpus, vocab)
    return corpus


def load_vocab(data_dir) -> Vocabulary:
    tokens = json.loads((Path(data_dir) / "vocab.json").read_text(encoding="utf-8"))
    return Vocabulary.from_json(tokens)


# ----------------------------------------------------------- act classifier

def cmd_train_classifier(cfg: AppConfig, data_dir, bundle_path, seed: int) -> dict:
    vocab = load_vocab(data_dir)
    train = load_split(data_dir, "train", vocab)
    val = load_split(data_dir, "val", vocab)
    tc = cfg.classifier_train
    tc.seed = seed
    embeddings = None
    if tc.embeddings_file:
        embeddings = embedding_table(load_word_vectors(tc.embeddings_file), vocab,
                                     cfg.classifier.word_emb, seed)
    clf = ActClassifier(len(vocab), cfg.classifier, rng=np.random.default_rng(seed),
                        embeddings=embeddings)
    history = train_classifier(clf, train, tc, val=val)
    bundle = ModelBundle(vocab=vocab, config=cfg.to_dict(), classifier=clf)
    save_bundle(bundle, bundle_path)
    val_acc = evaluate_classifier(clf, val)
    return {"epochs": len(history), "val_accuracy": val_acc}


def cmd_tag(bundle_path, data_dir, out_dir, names=("train", "val", "test")) -> dict:
    bundle = load_bundle(bundle_path)
    if bundle.classifier is None:
        raise DataError("bundle has no classifier; train one first")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    counts = {}
    for name in names:
        corpus = load_split(data_dir, name, bundle.vocab)
        tagged = tag_corpus(corpus, bundle.classifier)
        write_jsonl(tagged, out / f"{name}.jsonl")
        counts[name] = sum(len(d.turns) for d in tagged)
    _dump_json(bundle.vocab.to_json(), out / "vocab.json")
    return counts


# --------------------------------------------------- joint supervised model

def train_sl(policy: PolicyNet, generator: GenerationNet, corpus: Corpus, cfg,
             val: Corpus | None = None) -> list[dict]:
    """Joint supervised training: per turn, the generator's teacher-forced
    NLL plus the policy's act NLL, both minimized with AdaDelta. Validation
    perplexity drives the halve-then-stop learning-rate schedule."""
    shared = getattr(cfg, "share_embeddings", False)
    if shared:
        if policy.cfg.word_emb != generator.cfg.word_emb:
            raise DataError("shared embeddings need equal policy/generator widths")
        policy.store.replace("emb", generator.store["emb"])
    opt_p = AdaDelta(policy.store, rho=cfg.rho, epsilon=cfg.epsilon, lr=cfg.lr)
    opt_g = AdaDelta(generator.store, rho=cfg.rho, epsilon=cfg.epsilon, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    history = []
    prev_ppl = math.inf
    rising_epochs = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(corpus))
        gen_nll = 0.0
        pol_nll = 0.0
        batch = cfg.batch_dialogues or len(corpus)
        for start in range(0, len(corpus), batch):
            tp = Tape()
            p_pol = policy.store.bind(tp)
            p_gen = generator.store.bind(tp)
            if shared:
                p_pol["emb"] = p_gen["emb"]  # one leaf, gradients from both losses
            loss_gen = None
            loss_pol = None
            for di in order[start:start + batch]:
                d = corpus[int(di)]
                turns = _session_turns(d.turns)
                dists = policy.prefix_distributions_t(p_pol, turns)
                for k, (tokens, act) in enumerate(turns):
                    term = T.cross_entropy(dists[k], ActDistribution.one_hot(act).probs)
                    loss_pol = term if loss_pol is None else loss_pol + term
                    if k >= 1:
                        u_prev = turns[k - 1][0]
                        u_prev2 = turns[k - 2][0] if k >= 2 else None
                        nll = -generator.sequence_log_prob_t(p_gen, act, u_prev,
                                                             u_prev2, tokens)
                        loss_gen = nll if loss_gen is None else loss_gen + nll
            if loss_pol is None:
                continue
            total = loss_pol if loss_gen is None else loss_gen + loss_pol
            tp.backward(total)
            opt_p.step({n: p_pol[n].grad for n in policy.store.names()
                        if not (shared and n == "emb")})
            opt_g.step({n: p_gen[n].grad for n in generator.store.names()})
            pol_nll += loss_pol.item()
            gen_nll += 0.0 if loss_gen is None else loss_gen.item()
        record = {"epoch": epoch, "generation_nll": gen_nll, "policy_nll": pol_nll,
                  "lr": opt_g.lr}
        if val is not None:
            ppl = validation_perplexity(generator, val)
            record["val_perplexity"] = ppl
            if ppl > prev_ppl:
                rising_epochs += 1
                opt_g.lr *= 0.5
                opt_p.lr *= 0.5
            else:
                rising_epochs = 0
            prev_ppl = ppl
        history.append(record)
        if rising_epochs >= 2:
            break
    return history


def validation_perplexity(generator: GenerationNet, corpus: Corpus) -> float:
    """Per-token perplexity of teacher-forced generation, <eos> included."""
    total_nll = 0.0
    total_tokens = 0
    p = generator.store.bind(None)
    for d in corpus:
        turns = _session_turns(d.turns)
        for k in range(1, len(turns)):
            tokens, act = turns[k]
            u_prev = turns[k - 1][0]
            u_prev2 = turns[k - 2][0] if k >= 2 else None
            total_nll -= generator.sequence_log_prob_t(p, act, u_prev, u_prev2,
                                                       tokens).item()
            total_tokens += len(tokens) + 1
    return math.exp(total_nll / max(total_tokens, 1))


def cmd_train_sl(cfg: AppConfig, data_dir, bundle_path, seed: int) -> dict:
    bundle = load_bundle(bundle_path)
    vocab = bundle.vocab
    train = load_split(data_dir, "train", vocab)
    val = load_split(data_dir, "val", vocab)
    rng = np.random.default_rng(seed)
    policy = PolicyNet(len(vocab), cfg.policy, rng=rng)
    generator = GenerationNet(len(vocab), SpecialIds.from_vocab(vocab), cfg.generator,
                              rng=rng)
    history = train_sl(policy, generator, train, cfg.sl, val=val)
    bundle.policy = policy
    bundle.generator = generator
    save_bundle(bundle, bundle_path)
    return {"epochs": len(history), "history": history}


def cmd_train_matcher(cfg: AppConfig, data_dir, bundle_path, seed: int) -> dict:
    bundle = load_bundle(bundle_path)
    train = load_split(data_dir, "train", bundle.vocab)
    net = MatcherNet(len(bundle.vocab), cfg.matcher, rng=np.random.default_rng(seed))
    tc = cfg.matcher_train
    tc.seed = seed
    history = train_matcher(net, train, bundle.vocab.sep_id, tc)
    bundle.matcher = net
    save_bundle(bundle, bundle_path)
    return {"epochs": len(history), "final_loss": history[-1]["train_loss"]}


# ------------------------------------------------------------ reinforcement

def cmd_train_rl(cfg: AppConfig, data_dir, bundle_path, curves_path, seed: int) -> dict:
    bundle = load_bundle(bundle_path)
    for missing in ("policy", "generator", "matcher"):
        if getattr(bundle, missing) is None:
            raise DataError(f"bundle has no {missing}; finish supervised training first")
    train = load_split(data_dir, "train", bundle.vocab)
    curves = train_rl(bundle.policy, bundle.generator, bundle.matcher, train,
                      cfg.rl, np.random.default_rng(seed))
    with open(curves_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "mean_reward", "mean_length"])
        for row in curves:
            writer.writerow([row["iteration"], repr(row["mean_reward"]),
                             repr(row["mean_length"])])
    save_bundle(bundle, bundle_path)
    return {"iterations": len(curves),
            "final_mean_length": curves[-1]["mean_length"] if curves else 0.0}


# ----------------------------------------------------------------- simulate

def simulate_corpus(bundle: ModelBundle, openers: Corpus, episodes: int, rl_cfg,
                    seed: int) -> Corpus:
    """Self-play transcripts seeded with opening messages sampled from a
    tagged corpus; responses sample from the top-k beam results."""
    rng = np.random.default_rng(seed)
    usable = [d for d in openers if d.turns and d.turns[0].act is not None]
    if not usable:
        raise DataError("no tagged opening messages available")
    out = []
    for i in range(episodes):
        opener = usable[int(rng.integers(len(usable)))].turns[0]
        record = simulate_dialogue(bundle.policy, bundle.generator,
                                   [(opener.tokens, opener.act)], rl_cfg, rng,
                                   act_mode="sample", response_mode="sample")
        turns = [Utterance(speaker="A", text=opener.text, tokens=list(opener.tokens),
                           predicted=opener.act)]
        for t in record.generated:
            turns.append(Utterance(speaker=t.speaker,
                                   text=detokenize(t.tokens, bundle.vocab),
                                   tokens=list(t.tokens), predicted=t.act))
        out.append(Dialogue(id=f"sim-{seed}-{i:05d}", turns=turns,
                            termination=record.termination))
    return out


def cmd_simulate(cfg: AppConfig, data_dir, bundle_path, out_dir, episodes: int,
                 seed: int) -> dict:
    bundle = load_bundle(bundle_path)
    test = load_split(data_dir, "test", bundle.vocab)
    transcripts = simulate_corpus(bundle, test, episodes, cfg.rl, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(transcripts, out / "transcripts.jsonl")
    report = engagement_report([[t.act for t in d.turns] for d in transcripts])
    _dump_json(report.to_json(), out / "engagement.json")
    return report.to_json()


# --------------------------------------------------------------------- eval

def generator_word_vectors(bundle: ModelBundle) -> dict[str, np.ndarray]:
    emb = bundle.generator.store["emb"]
    return {tok: emb[i] for i, tok in enumerate(bundle.vocab.tokens)}


def load_word_vectors(path) -> dict[str, np.ndarray]:
    """External embedding file: one token followed by its numbers per line."""
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) > 1:
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
    return vectors


def embedding_table(vectors: dict[str, np.ndarray], vocab: Vocabulary,
                    width: int, seed: int) -> np.ndarray:
    """Vocabulary-aligned embedding matrix from external vectors; tokens the
    file does not cover keep their random initialization."""
    from .layers import uniform_init

    rng = np.random.default_rng(seed)
    table = uniform_init(rng, len(vocab), width)
    for i, tok in enumerate(vocab.tokens):
        vec = vectors.get(tok)
        if vec is not None:
            if vec.shape != (width,):
                raise DataError(f"vector for {tok!r} has length {vec.shape[0]}, "
                                f"expected {width}")
            table[i] = vec
    return table


def evaluate_responses(bundle: ModelBundle, test: Corpus, eval_cfg,
                       vectors: dict | None = None) -> dict:
    """Response quality for given contexts: the last turn of each test
    dialogue is the reference, every turn before it is context."""
    vocab = bundle.vocab
    vectors = vectors if vectors is not None else generator_word_vectors(bundle)
    candidates = []
    references = []
    contexts = []
    ooc = []
    for d in test:
        if len(d.turns) < 2:
            continue
        context_turns = _session_turns(d.turns[:-1])
        reference = d.turns[-1]
        act = bundle.policy.select_act(context_turns, mode="greedy")
        u_prev = context_turns[-1][0]
        u_prev2 = context_turns[-2][0] if len(context_turns) >= 2 else None
        tokens = bundle.generator.beam_search(act, u_prev, u_prev2,
                                              beam_size=eval_cfg.beam_size,
                                              max_len=eval_cfg.max_response_len)[0][0]
        cand_words = vocab.decode(tokens)
        ref_words = vocab.decode(reference.tokens)
        ctx_words = [w for t, _ in context_turns for w in vocab.decode(t)]
        candidates.append(cand_words)
        references.append(ref_words)
        contexts.append(ctx_words)
        ooc.append(out_of_context_ratio(ctx_words, cand_words))
    if not candidates:
        raise DataError("no test dialogue has at least two turns")
    emb = embedding_metrics(candidates, references, vectors)
    return {
        "pairs": len(candidates),
        "bleu_1": bleu_n(candidates, references, 1),
        "bleu_2": bleu_n(candidates, references, 2),
        "embedding_average": emb["average"],
        "embedding_extrema": emb["extrema"],
        "embedding_greedy": emb["greedy"],
        "pairs_skipped_for_embeddings": emb["pairs_skipped"],
        "distinct_1": distinct_n(candidates, 1),
        "distinct_2": distinct_n(candidates, 2),
        "mean_out_of_context": float(np.mean(ooc)),
        "mean_response_length": float(np.mean([len(c) for c in candidates])),
    }


def cmd_eval(cfg: AppConfig, data_dir, bundle_path, out_dir, seed: int,
             vectors_path=None) -> dict:
    bundle = load_bundle(bundle_path)
    test = load_split(data_dir, "test", bundle.vocab)
    vectors = load_word_vectors(vectors_path) if vectors_path else None
    report = evaluate_responses(bundle, test, cfg.eval, vectors)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(report, out / "metrics.json")
    keys = sorted(report)
    with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        writer.writerow([repr(report[k]) if isinstance(report[k], float) else report[k]
                         for k in keys])
    return report
