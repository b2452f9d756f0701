"""Bit-exact checkpoint format and the bundle of all trained networks.

File layout: magic bytes "DAGM", one version byte, a 4-byte little-endian
length, UTF-8 JSON metadata (config echo, vocabulary, per-net tensor
names and shapes), the tensor payload as little-endian float32 in
metadata order, and finally a 4-byte little-endian CRC32 of the payload.
Values are stored at 32-bit precision; loading restores float64 arrays,
so save - load - save is byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import ActClassifier, ClassifierConfig
from .corpus import Vocabulary
from .errors import BundleError
from .generator import GenerationNet, GeneratorConfig, SpecialIds
from .matcher import MatcherConfig, MatcherNet
from .policy import PolicyConfig, PolicyNet
from .tape import ParameterStore

MAGIC = b"DAGM"
VERSION = 1

_NET_ORDER = ("classifier", "policy", "generator", "matcher")
_NET_CONFIGS = {"classifier": ClassifierConfig, "policy": PolicyConfig,
                "generator": GeneratorConfig, "matcher": MatcherConfig}


@dataclass
class ModelBundle:
    vocab: Vocabulary
    config: dict
    classifier: ActClassifier | None = None
    policy: PolicyNet | None = None
    generator: GenerationNet | None = None
    matcher: MatcherNet | None = None

    def nets(self):
        return {name: getattr(self, name) for name in _NET_ORDER
                if getattr(self, name) is not None}


def save_bundle(bundle: ModelBundle, path) -> None:
    meta = {"config": bundle.config, "vocab": bundle.vocab.to_json(), "nets": {}}
    payload = bytearray()
    for name, net in bundle.nets().items():
        tensors = []
        for tensor_name, arr in net.store.items():
            tensors.append([tensor_name, list(arr.shape)])
            payload.extend(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        meta["nets"][name] = {"cfg": dataclasses.asdict(net.cfg), "tensors": tensors}
    blob = json.dumps(meta, sort_keys=True, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(bytes(payload))))


def load_bundle(path) -> ModelBundle:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 5 or raw[:len(MAGIC)] != MAGIC:
        raise BundleError(f"{path}: not a model bundle (bad magic)")
    version = raw[len(MAGIC)]
    if version != VERSION:
        raise BundleError(f"{path}: unsupported bundle version {version}")
    offset = len(MAGIC) + 1
    (meta_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    if offset + meta_len > len(raw):
        raise BundleError(f"{path}: truncated metadata")
    try:
        meta = json.loads(raw[offset:offset + meta_len].decode("utf-8"))
    except ValueError as exc:
        raise BundleError(f"{path}: corrupt metadata: {exc}") from exc
    offset += meta_len

    payload_len = 0
    for name in _NET_ORDER:
        if name in meta["nets"]:
            for _, shape in meta["nets"][name]["tensors"]:
                payload_len += 4 * int(np.prod(shape, dtype=np.int64))
    if len(raw) - offset != payload_len + 4:
        raise BundleError(f"{path}: truncated or oversized payload")
    payload = raw[offset:offset + payload_len]
    (crc,) = struct.unpack_from("<I", raw, offset + payload_len)
    if zlib.crc32(payload) != crc:
        raise BundleError(f"{path}: payload checksum mismatch")

    vocab = Vocabulary.from_json(meta["vocab"])
    bundle = ModelBundle(vocab=vocab, config=meta["config"])
    cursor = 0
    for name in _NET_ORDER:
        if name not in meta["nets"]:
            continue
        entry = meta["nets"][name]
        store = ParameterStore()
        for tensor_name, shape in entry["tensors"]:
            count = int(np.prod(shape, dtype=np.int64))
            arr = np.frombuffer(payload, dtype="<f4", count=count,
                                offset=cursor).astype(np.float64).reshape(shape)
            cursor += 4 * count
            store.add(tensor_name, arr)
        cfg = _NET_CONFIGS[name](**entry["cfg"])
        setattr(bundle, name, _build_net(name, cfg, store, vocab))
    return bundle


def _build_net(name: str, cfg, store: ParameterStore, vocab: Vocabulary):
    vocab_size = len(vocab)
    if name == "classifier":
        return ActClassifier(vocab_size, cfg, store=store)
    if name == "policy":
        return PolicyNet(vocab_size, cfg, store=store)
    if name == "generator":
        return GenerationNet(vocab_size, SpecialIds.from_vocab(vocab), cfg, store=store)
    return MatcherNet(vocab_size, cfg, store=store)
