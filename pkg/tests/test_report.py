import json

import numpy as np
import pytest

from newsgraph.metrics import evaluate_metrics
from newsgraph.report import (blob_sha1, write_ablation_csv, write_graph_stats,
                              write_history_csv, write_manifest,
                              write_metrics_csv, write_roc_csv,
                              write_sample_csv, write_sweep_csv,
                              write_topics_csv)
from newsgraph.trainer import TrainConfig


def _metrics():
    probs = np.array([[0.9, 0.1], [0.2, 0.8], [0.3, 0.7], [0.6, 0.4]])
    return evaluate_metrics(probs, np.array([0, 1, 0, 0]))


def test_metrics_csv_layout(tmp_path):
    path = tmp_path / "metrics.csv"
    m = _metrics()
    write_metrics_csv(str(path), [(1, "train", m), (1, "test", m)])
    lines = path.read_bytes().decode("utf-8").split("\n")
    assert lines[0] == "round,split,acc,m_pre,m_rec,m_f1,auc"
    assert lines[1].startswith("1,train,0.75,")
    assert len(lines) == 4 and lines[3] == ""
    assert "\r" not in path.read_bytes().decode("utf-8")


def test_metrics_csv_is_deterministic(tmp_path):
    m = _metrics()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_metrics_csv(str(a), [(1, "test", m)])
    write_metrics_csv(str(b), [(1, "test", m)])
    assert a.read_bytes() == b.read_bytes()


def test_metrics_csv_leaves_auc_blank_for_one_class(tmp_path):
    probs = np.array([[0.9, 0.1], [0.8, 0.2]])
    m = evaluate_metrics(probs, np.array([0, 0]))
    path = tmp_path / "metrics.csv"
    write_metrics_csv(str(path), [(1, "val", m)])
    assert path.read_text(encoding="utf-8").splitlines()[1].endswith(",")


def test_roc_csv_endpoints(tmp_path):
    m = _metrics()
    path = tmp_path / "roc.csv"
    write_roc_csv(str(path), m.roc)
    rows = path.read_text(encoding="utf-8").splitlines()
    assert rows[0] == "threshold,fpr,tpr"
    first = rows[1].split(",")
    last = rows[-1].split(",")
    assert float(first[0]) > 0.8  # beyond the top score
    assert (float(first[1]), float(first[2])) == (0.0, 0.0)
    assert (float(last[1]), float(last[2])) == (1.0, 1.0)


def test_topics_and_sample_csv_headers(tmp_path):
    t = tmp_path / "topics.csv"
    write_topics_csv(str(t), [(2, 145.2, -3.1), (4, 120.0, -3.4)])
    assert t.read_text(encoding="utf-8").splitlines()[0] == \
        "k,perplexity,coherence"
    s = tmp_path / "sample.csv"
    write_sample_csv(str(s), [("a-1", 0, "news", 0), ("a-1", 1, "entity", 4)])
    got = s.read_text(encoding="utf-8").splitlines()
    assert got[0] == "root_id,position,node_kind,node_index"
    assert got[2] == "a-1,1,entity,4"


def test_ablation_and_sweep_csv(tmp_path):
    a = tmp_path / "ablate.csv"
    write_ablation_csv(str(a), [("full", 0.9, 0.9, 0.9, 0.9, 0.95)])
    assert a.read_text(encoding="utf-8").splitlines()[0] == \
        "variant,acc,m_pre,m_rec,m_f1,auc"
    s = tmp_path / "sweep.csv"
    write_sweep_csv(str(s), ("wl", "r"), [(4, 0.1, 0.8, 0.8, 0.8, 0.8, 0.9)])
    assert s.read_text(encoding="utf-8").splitlines()[0] == \
        "wl,r,acc,m_pre,m_rec,m_f1,auc"


def test_history_csv_blanks_missing_fields(tmp_path):
    path = tmp_path / "history.csv"
    write_history_csv(str(path), [
        {"phase": 1, "epoch": 1, "loss": 0.7},
        {"phase": 2, "epoch": 1, "loss": 0.6, "val_acc": 0.5, "val_f1": 0.4},
    ])
    rows = path.read_text(encoding="utf-8").splitlines()
    assert rows[0] == "phase,epoch,loss,val_acc,val_f1"
    assert rows[1] == "1,1,0.7,,"
    assert rows[2] == "2,1,0.6,0.5,0.4"


def test_graph_stats_text(tmp_path):
    path = tmp_path / "stats.txt"
    write_graph_stats(str(path), {"news_nodes": 40, "entity_nodes": 12})
    assert path.read_text(encoding="utf-8") == \
        "news_nodes = 40\nentity_nodes = 12\n"


def test_blob_sha1_matches_git_convention():
    # `git hash-object` of a file containing exactly "hello\n"
    assert blob_sha1(b"hello\n") == \
        "ce013625030ba8dba906f756967f9e9ca394464a"


def test_manifest_contents(tmp_path):
    corpus = tmp_path / "corpus.txt"
    corpus.write_bytes(b"hello\n")
    path = tmp_path / "manifest.json"
    cfg = TrainConfig(wl=9, seed=4)
    write_manifest(str(path), cfg, inputs={"corpus": str(corpus)},
                   extras={"command": "train"})
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["seed"] == 4
    assert data["config"]["wl"] == 9
    assert data["config"]["split"] == [0.8, 0.1, 0.1]
    assert data["inputs"]["corpus"] == \
        "ce013625030ba8dba906f756967f9e9ca394464a"
    assert data["command"] == "train"
    assert "time" not in path.read_text(encoding="utf-8").lower()


def test_manifest_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cfg = TrainConfig()
    write_manifest(str(a), cfg)
    write_manifest(str(b), cfg)
    assert a.read_bytes() == b.read_bytes()


def test_manifest_rejects_key_collisions(tmp_path):
    with pytest.raises(ValueError, match="collision"):
        write_manifest(str(tmp_path / "m.json"), TrainConfig(),
                       extras={"config": {}})
