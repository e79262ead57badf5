"""Writers for run artifacts: CSV tables, graph stats and the manifest.

Every table is comma separated with a ``.`` decimal point, LF line
endings and a mandatory header row.  Floats are written with ``repr``,
which round-trips exactly, so a deterministic run produces bitwise
identical files.  The manifest records the fully resolved configuration
and a content hash per input file and nothing volatile, which makes it
sufficient to reproduce the run.
"""

import csv
import dataclasses
import hashlib
import json

__all__ = [
    "METRICS_HEADER", "ROC_HEADER", "TOPICS_HEADER", "SAMPLE_HEADER",
    "ABLATION_HEADER", "HISTORY_HEADER",
    "write_metrics_csv", "write_roc_csv", "write_topics_csv",
    "write_sample_csv", "write_ablation_csv", "write_sweep_csv",
    "write_history_csv", "write_graph_stats", "blob_sha1", "write_manifest",
]

METRICS_HEADER = ("round", "split", "acc", "m_pre", "m_rec", "m_f1", "auc")
ROC_HEADER = ("threshold", "fpr", "tpr")
TOPICS_HEADER = ("k", "perplexity", "coherence")
SAMPLE_HEADER = ("root_id", "position", "node_kind", "node_index")
ABLATION_HEADER = ("variant", "acc", "m_pre", "m_rec", "m_f1", "auc")
HISTORY_HEADER = ("phase", "epoch", "loss", "val_acc", "val_f1")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_rows(path: str, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def write_metrics_csv(path: str, rows) -> None:
    """``rows`` holds (round, split name, Metrics) triples."""
    _write_rows(path, METRICS_HEADER, (
        (rnd, split, m.accuracy, m.macro_precision, m.macro_recall,
         m.macro_f1, m.auc)
        for rnd, split, m in rows))


def write_roc_csv(path: str, roc) -> None:
    """``roc`` holds (threshold, fpr, tpr) triples, endpoints included."""
    _write_rows(path, ROC_HEADER, roc)


def write_topics_csv(path: str, rows) -> None:
    """``rows`` holds (k, perplexity, coherence) triples."""
    _write_rows(path, TOPICS_HEADER, rows)


def write_sample_csv(path: str, rows) -> None:
    """``rows`` holds (root id, position, node kind, node index) tuples."""
    _write_rows(path, SAMPLE_HEADER, rows)


def write_ablation_csv(path: str, rows) -> None:
    """``rows`` holds (variant, acc, m_pre, m_rec, m_f1, auc) tuples."""
    _write_rows(path, ABLATION_HEADER, rows)


def write_sweep_csv(path: str, axes, rows) -> None:
    """``axes`` names the swept knobs; each row is axis values followed by
    acc, m_pre, m_rec, m_f1, auc."""
    _write_rows(path, tuple(axes) + ABLATION_HEADER[1:], rows)


def write_history_csv(path: str, history) -> None:
    """``history`` is the trainer's per-epoch record list."""
    _write_rows(path, HISTORY_HEADER, (
        (h.get("phase"), h.get("epoch"), h.get("loss"),
         h.get("val_acc"), h.get("val_f1"))
        for h in history))


def write_graph_stats(path: str, stats: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key, value in stats.items():
            fh.write(f"{key} = {value}\n")


def blob_sha1(data: bytes) -> str:
    """Content hash in git's blob form, so files can be cross-checked
    against ``git hash-object``."""
    head = f"blob {len(data)}\0".encode("ascii")
    return hashlib.sha1(head + data).hexdigest()


def _plain_config(cfg) -> dict:
    data = dataclasses.asdict(cfg)
    return {key: list(value) if isinstance(value, tuple) else value
            for key, value in data.items()}


def write_manifest(path: str, cfg, inputs: dict | None = None,
                   extras: dict | None = None) -> None:
    """Record the resolved configuration, the seed and one content hash
    per named input file.  Nothing volatile goes in, so equal runs write
    equal manifests.  ``cfg`` may be any config dataclass with a ``seed``
    field."""
    hashes = {}
    for name, file_path in (inputs or {}).items():
        with open(file_path, "rb") as fh:
            hashes[name] = blob_sha1(fh.read())
    manifest = {
        "config": _plain_config(cfg),
        "seed": cfg.seed,
        "inputs": hashes,
    }
    for key, value in (extras or {}).items():
        if key in manifest:
            raise ValueError(f"manifest key collision: {key}")
        manifest[key] = value
    with open(path, "w", newline="", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
