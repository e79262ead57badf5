"""Versioned binary snapshots of a trained model.

A checkpoint must be enough to score a fresh corpus, so besides the
parameter tensors it carries the run configuration, the vocabulary, the
entity table and the topic-model counts.  Layout::

    magic  b"NGCH"
    version  uint32, little endian
    header length  uint64, little endian
    header  UTF-8 JSON: config, vocab, entities, topic scalars and an
            ordered array directory with name, shape and dtype
    payload  the arrays from the directory, raw bytes, in order

Loading rebuilds fresh parameter containers of the recorded shapes and
copies the payload in, so a round trip is bit exact.
"""

import json
import struct

import numpy as np

from .corpus import EntityTable, Vocabulary
from .encoder import TextEncoderParams
from .topics import TopicModel
from .trainer import MlpParams, ModelBundle, TrainConfig, config_dict
from .transformer import TransformerParams

__all__ = ["MAGIC", "VERSION", "save_checkpoint", "load_checkpoint"]

MAGIC = b"NGCH"
VERSION = 1


def _array_entries(bundle: ModelBundle) -> list:
    t = bundle.topics
    entries = [
        ("topics.word_topic", t.word_topic),
        ("topics.doc_topic", t.doc_topic),
        ("topics.topic_totals", t.topic_totals),
        ("topics.assignments",
         np.concatenate([np.asarray(a, dtype=np.int64) for a in t.assignments])
         if t.assignments else np.zeros(0, dtype=np.int64)),
    ]
    groups = [("encoder", bundle.encoder.tensors()),
              ("classifier", bundle.classifier.tensors())]
    if bundle.transformer is not None:
        groups.insert(1, ("transformer", bundle.transformer.tensors()))
    for prefix, tensors in groups:
        entries.extend((f"{prefix}.{i}", ten.data)
                       for i, ten in enumerate(tensors))
    return entries


def save_checkpoint(path: str, bundle: ModelBundle) -> None:
    entries = _array_entries(bundle)
    t = bundle.topics
    header = {
        "config": config_dict(bundle.config),
        "vocab": {
            "token_to_id": bundle.vocab.token_to_id,
            "id_to_token": bundle.vocab.id_to_token,
            "freq": bundle.vocab.freq,
        },
        "entities": {
            "surface_to_id": bundle.entities.surface_to_id,
            "id_to_surface": bundle.entities.id_to_surface,
            "doc_freq": list(bundle.entities.doc_freq),
            "lowercase_forms": sorted(bundle.entities.lowercase_forms),
        },
        "topics": {
            "k": t.k, "alpha": t.alpha, "beta": t.beta,
            "vocab_size": t.vocab_size, "rng_seed": t.rng_seed,
            "assignment_lengths": [len(a) for a in t.assignments],
        },
        "has_transformer": bundle.transformer is not None,
        "arrays": [
            {"name": name, "shape": list(arr.shape), "dtype": arr.dtype.str}
            for name, arr in entries
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, len(blob)))
        fh.write(blob)
        for _, arr in entries:
            fh.write(np.ascontiguousarray(arr).tobytes())


def _read_header(fh, path):
    magic = fh.read(len(MAGIC))
    if magic != MAGIC:
        raise ValueError(f"{path} is not a checkpoint file")
    version, blob_len = struct.unpack("<IQ", fh.read(12))
    if version != VERSION:
        raise ValueError(f"{path} has checkpoint version {version}, "
                         f"expected {VERSION}")
    return json.loads(fh.read(blob_len).decode("utf-8"))


def _read_arrays(fh, directory, path) -> dict:
    out = {}
    for entry in directory:
        shape = tuple(entry["shape"])
        dtype = np.dtype(entry["dtype"])
        count = int(np.prod(shape)) if shape else 1
        raw = fh.read(count * dtype.itemsize)
        if len(raw) != count * dtype.itemsize:
            raise ValueError(f"{path} is truncated at {entry['name']}")
        out[entry["name"]] = np.frombuffer(raw, dtype=dtype).reshape(shape)
    return out


def _fill(params, arrays: dict, prefix: str, path: str) -> None:
    for i, ten in enumerate(params.tensors()):
        arr = arrays[f"{prefix}.{i}"]
        if arr.shape != ten.data.shape:
            raise ValueError(
                f"{path}: {prefix}.{i} has shape {arr.shape}, "
                f"the config implies {ten.data.shape}")
        ten.data[...] = arr


def load_checkpoint(path: str) -> ModelBundle:
    with open(path, "rb") as fh:
        header = _read_header(fh, path)
        arrays = _read_arrays(fh, header["arrays"], path)

    raw_cfg = dict(header["config"])
    raw_cfg["split"] = tuple(raw_cfg["split"])
    cfg = TrainConfig(**raw_cfg)

    v = header["vocab"]
    vocab = Vocabulary(token_to_id=dict(v["token_to_id"]),
                       id_to_token=list(v["id_to_token"]),
                       freq={k: int(n) for k, n in v["freq"].items()})
    e = header["entities"]
    entities = EntityTable(surface_to_id=dict(e["surface_to_id"]),
                           id_to_surface=list(e["id_to_surface"]),
                           doc_freq=[int(n) for n in e["doc_freq"]],
                           lowercase_forms=frozenset(e["lowercase_forms"]))
    ts = header["topics"]
    flat = arrays["topics.assignments"]
    assignments, at = [], 0
    for length in ts["assignment_lengths"]:
        assignments.append(flat[at:at + length].copy())
        at += length
    topics = TopicModel(
        k=int(ts["k"]), alpha=float(ts["alpha"]), beta=float(ts["beta"]),
        vocab_size=int(ts["vocab_size"]),
        word_topic=arrays["topics.word_topic"].copy(),
        doc_topic=arrays["topics.doc_topic"].copy(),
        topic_totals=arrays["topics.topic_totals"].copy(),
        assignments=assignments, rng_seed=int(ts["rng_seed"]))

    rng = np.random.default_rng(0)
    encoder = TextEncoderParams.init(len(vocab.id_to_token), cfg.d_w,
                                     cfg.d // 2, rng)
    _fill(encoder, arrays, "encoder", path)
    transformer = None
    if header["has_transformer"]:
        transformer = TransformerParams.init(cfg.d, cfg.layers, cfg.heads,
                                             rng)
        _fill(transformer, arrays, "transformer", path)
    d_hid = cfg.d_hid if cfg.d_hid else max(2, cfg.d // 2)
    classifier = MlpParams.init(cfg.d, d_hid, rng)
    _fill(classifier, arrays, "classifier", path)

    return ModelBundle(config=cfg, vocab=vocab, entities=entities,
                       topics=topics, encoder=encoder,
                       transformer=transformer, classifier=classifier)
