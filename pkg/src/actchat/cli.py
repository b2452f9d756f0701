"""Command-line entry points for the full pipeline and the chat service.

All commands read one config file (plus section.key=value overrides) and
seed every source of randomness from --seed, so reruns with identical
inputs reproduce identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import pipeline
from .acts import DialogueAct
from .bundle import load_bundle
from .config import load_config
from .errors import ActChatError
from .service import ChatService, make_server


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="SECTION.KEY=VALUE", help="override one config value")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actchat",
        description="dialogue-act controlled dialogue generation pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate the synthetic training corpus")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory for the splits")

    p = sub.add_parser("train-classifier", help="train the dialogue act classifier")
    _add_common(p)
    p.add_argument("--data", required=True, help="directory with train/val/test.jsonl")
    p.add_argument("--bundle", required=True, help="model bundle to write")

    p = sub.add_parser("tag", help="tag corpus splits with a trained classifier")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True, help="directory for tagged splits")

    p = sub.add_parser("train-sl", help="jointly train the act policy and generator")
    _add_common(p)
    p.add_argument("--data", required=True, help="directory with tagged splits")
    p.add_argument("--bundle", required=True)

    p = sub.add_parser("train-matcher", help="train the relevance matcher")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--bundle", required=True)

    p = sub.add_parser("train-rl", help="optimize the policy with self-play RL")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--curves", required=True, help="learning-curve CSV to write")

    p = sub.add_parser("simulate", help="run self-play episodes and report engagement")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--episodes", type=int, default=200)

    p = sub.add_parser("eval", help="score generated responses against references")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--vectors", default=None,
                   help="optional external word-vector file for embedding metrics")

    p = sub.add_parser("chat", help="interactive terminal chat with act steering")
    _add_common(p)
    p.add_argument("--data", required=True, help="tagged corpus for opening messages")
    p.add_argument("--bundle", required=True)

    p = sub.add_parser("serve", help="start the HTTP chat service")
    _add_common(p)
    p.add_argument("--data", required=True, help="tagged corpus for opening messages")
    p.add_argument("--bundle", required=True)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    return parser


def _service_from_args(args, cfg):
    bundle = load_bundle(args.bundle)
    openers = pipeline.load_split(args.data, "test", bundle.vocab)
    return ChatService(bundle, openers, beam_size=cfg.service.beam_size,
                       threshold=cfg.service.threshold,
                       max_response_len=cfg.service.max_response_len, seed=args.seed)


def _run_chat_repl(service: ChatService) -> int:
    session, payload = service.create_session()
    print(f"[bot/{payload['bot']['act']}] {payload['bot']['text']}")
    print("commands: /act CM.S..O to pin the next act, /quit to leave")
    pinned = None
    while not session.terminated:
        try:
            line = input("> ").strip()
        except EOFError:
            break
        if not line:
            continue
        if line == "/quit":
            break
        if line.startswith("/act"):
            name = line.split(None, 1)[1].strip() if " " in line else ""
            pinned = DialogueAct.from_label(name) if name else None
            print(f"(next act pinned to {pinned.label if pinned else 'policy choice'})")
            continue
        reply = service.chat_turn(session, line, pinned)
        pinned = None
        print(f"[bot/{reply['bot']['act']}] {reply['bot']['text']}")
        if reply["terminated"]:
            print(f"(session ended: {reply['cause']})")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        if args.command == "gen-corpus":
            out = pipeline.gen_corpus(cfg, args.out, args.seed)
        elif args.command == "train-classifier":
            out = pipeline.cmd_train_classifier(cfg, args.data, args.bundle, args.seed)
        elif args.command == "tag":
            out = pipeline.cmd_tag(args.bundle, args.data, args.out)
        elif args.command == "train-sl":
            out = pipeline.cmd_train_sl(cfg, args.data, args.bundle, args.seed)
        elif args.command == "train-matcher":
            out = pipeline.cmd_train_matcher(cfg, args.data, args.bundle, args.seed)
        elif args.command == "train-rl":
            out = pipeline.cmd_train_rl(cfg, args.data, args.bundle, args.curves,
                                        args.seed)
        elif args.command == "simulate":
            out = pipeline.cmd_simulate(cfg, args.data, args.bundle, args.out,
                                        args.episodes, args.seed)
        elif args.command == "eval":
            out = pipeline.cmd_eval(cfg, args.data, args.bundle, args.out, args.seed,
                                    vectors_path=args.vectors)
        elif args.command == "chat":
            return _run_chat_repl(_service_from_args(args, cfg))
        elif args.command == "serve":
            service = _service_from_args(args, cfg)
            host = args.host or cfg.service.host
            port = cfg.service.port if args.port is None else args.port
            server = make_server(service, host, port)
            print(f"serving on http://{server.server_address[0]}:{server.server_address[1]}")
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                pass
            finally:
                server.server_close()
            return 0
        else:  # pragma: no cover - argparse guards this
            return 2
    except (ActChatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(out, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
