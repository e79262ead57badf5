"""End-to-end checks of the command line surface.

Commands run in-process through run_command with throwaway output
directories, so every test sees real artifacts without subprocess cost.
"""

import csv
import json
import os

import pytest

from newsgraph.checkpoint import load_checkpoint
from newsgraph.cli import run_command
from newsgraph.corpus import load_corpus, write_corpus
from newsgraph.synth import SynthSpec, generate_synthetic
from newsgraph.trainer import ABLATION_VARIANTS

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

SYNTH_FLAGS = ["--clusters", "2", "--entities-per-cluster", "6",
               "--words-per-cluster", "20", "--articles-per-cluster", "12",
               "--fake-fraction", "0.25", "--sentences", "6",
               "--words-per-sentence", "5", "--subtopics-per-cluster", "2",
               "--real-mentions", "4,5", "--fake-mentions", "2,2",
               "--seed", "7"]

FAST_FLAGS = ["--min-freq", "1", "--topics", "4", "--lda-iterations", "10",
              "--d", "8", "--d-w", "4", "--heads", "2", "--layers", "1",
              "--lambda-t", "1", "--wl", "5", "--epochs", "2",
              "--phase1-epochs", "1", "--batch-size", "8", "--patience", "5",
              "--split", "0.6,0.2,0.2", "--lr", "0.001", "--seed", "1"]


@pytest.fixture(scope="module")
def corpus_path(tmp_path_factory):
    spec = SynthSpec(clusters=2, entities_per_cluster=6, words_per_cluster=20,
                     articles_per_cluster=12, fake_fraction=0.25, sentences=6,
                     words_per_sentence=5, subtopics_per_cluster=2,
                     real_mentions=(4, 5), fake_mentions=(2, 2), seed=7)
    path = tmp_path_factory.mktemp("corpus") / "corpus.tsv"
    write_corpus(generate_synthetic(spec), str(path))
    return str(path)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _out(tmp_path, name):
    return str(tmp_path / name)


def test_synth_writes_corpus_and_manifest(tmp_path):
    out = _out(tmp_path, "s")
    assert run_command(["synth", *SYNTH_FLAGS, "--out-dir", out]) == 0
    articles = load_corpus(os.path.join(out, "corpus.tsv"))
    assert len(articles) == 24
    assert sum(a.label for a in articles) == 6
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["command"] == "synth"
    assert manifest["config"]["clusters"] == 2
    assert manifest["seed"] == 7


def test_synth_output_passes_ingest(tmp_path):
    out = _out(tmp_path, "s")
    assert run_command(["synth", *SYNTH_FLAGS, "--out-dir", out]) == 0
    rc = run_command(["ingest", "--corpus", os.path.join(out, "corpus.tsv"),
                      "--min-freq", "1", "--out-dir", _out(tmp_path, "i")])
    assert rc == 0


def test_ingest_reports_counts(corpus_path, tmp_path, capsys):
    out = _out(tmp_path, "i")
    assert run_command(["ingest", "--corpus", corpus_path, "--min-freq", "1",
                        "--out-dir", out]) == 0
    stdout = capsys.readouterr().out
    assert "articles = 24" in stdout
    assert "fake = 6" in stdout
    text = open(os.path.join(out, "ingest_stats.txt")).read()
    assert "vocab_size = " in text
    assert "entities = 12" in text


def test_missing_corpus_exits_2_with_path(tmp_path, capsys):
    rc = run_command(["ingest", "--corpus", "/nowhere/missing.tsv",
                      "--out-dir", _out(tmp_path, "i")])
    assert rc == 2
    assert "/nowhere/missing.tsv" in capsys.readouterr().err


def test_unknown_subcommand_exits_1():
    assert run_command(["frobnicate"]) == 1


def test_unknown_flag_exits_1():
    assert run_command(["synth", "--no-such-flag", "3"]) == 1


def test_help_exits_0():
    assert run_command(["--help"]) == 0


def test_topics_csv_and_figure(corpus_path, tmp_path):
    out = _out(tmp_path, "t")
    rc = run_command(["topics", "--corpus", corpus_path, "--k", "2,4",
                      "--min-freq", "1", "--lda-iterations", "10",
                      "--out-dir", out])
    assert rc == 0
    rows = _read_csv(os.path.join(out, "topic_eval.csv"))
    assert rows[0] == ["k", "perplexity", "coherence"]
    assert [r[0] for r in rows[1:]] == ["2", "4"]
    assert all(float(r[1]) > 0 for r in rows[1:])
    png = open(os.path.join(out, "topic_eval.png"), "rb").read(8)
    assert png == PNG_MAGIC


def test_graph_stats_and_figure(corpus_path, tmp_path):
    out = _out(tmp_path, "g")
    rc = run_command(["graph", "--corpus", corpus_path, *FAST_FLAGS,
                      "--out-dir", out])
    assert rc == 0
    text = open(os.path.join(out, "graph_stats.txt")).read()
    assert "news_nodes = 24" in text
    assert "edges_news_news = " in text
    assert "mean_shared_entities = " in text
    png = open(os.path.join(out, "degree_hist.png"), "rb").read(8)
    assert png == PNG_MAGIC


def test_sample_dumps_walk_rows(corpus_path, tmp_path):
    out = _out(tmp_path, "w")
    rc = run_command(["sample", "--corpus", corpus_path, *FAST_FLAGS,
                      "--roots", "0..2", "--out-dir", out])
    assert rc == 0
    rows = _read_csv(os.path.join(out, "walks.csv"))
    assert rows[0] == ["root_id", "position", "node_kind", "node_index"]
    roots = {r[0] for r in rows[1:]}
    assert len(roots) == 3
    assert all(r[2] in {"news", "entity", "topic"} for r in rows[1:])
    first = [r for r in rows[1:] if r[0] == rows[1][0]]
    assert [r[1] for r in first] == [str(i) for i in range(len(first))]
    assert len(first) <= 5


def test_train_writes_all_artifacts(corpus_path, tmp_path):
    out = _out(tmp_path, "tr")
    rc = run_command(["train", "--corpus", corpus_path, *FAST_FLAGS,
                      "--out-dir", out])
    assert rc == 0
    rows = _read_csv(os.path.join(out, "metrics.csv"))
    assert rows[0] == ["round", "split", "acc", "m_pre", "m_rec", "m_f1",
                       "auc"]
    assert [(r[0], r[1]) for r in rows[1:]] == [
        ("0", "train"), ("0", "val"), ("0", "test")]
    roc = _read_csv(os.path.join(out, "roc.csv"))
    assert roc[0] == ["threshold", "fpr", "tpr"]
    assert roc[1][1:] == ["0.0", "0.0"]
    assert roc[-1][1:] == ["1.0", "1.0"]
    bundle = load_checkpoint(os.path.join(out, "model.ckpt"))
    assert bundle.config.wl == 5
    history = _read_csv(os.path.join(out, "history.csv"))
    assert len(history) > 1
    for name in ("roc.png", "history.png"):
        assert open(os.path.join(out, name), "rb").read(8) == PNG_MAGIC
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["command"] == "train"
    assert manifest["config"]["wl"] == 5
    assert manifest["config"]["split"] == [0.6, 0.2, 0.2]
    assert set(manifest["inputs"]) == {"corpus"}
    assert "time" not in manifest


def test_train_rounds_stacks_rows_and_reports_spread(corpus_path, tmp_path,
                                                     capsys):
    out = _out(tmp_path, "tr")
    rc = run_command(["train", "--corpus", corpus_path, *FAST_FLAGS,
                      "--rounds", "2", "--out-dir", out])
    assert rc == 0
    assert "±" in capsys.readouterr().out
    rows = _read_csv(os.path.join(out, "metrics.csv"))
    assert len(rows) == 7
    assert {r[0] for r in rows[1:]} == {"0", "1"}


def test_train_rerun_is_bitwise_identical(corpus_path, tmp_path):
    out_a, out_b = _out(tmp_path, "a"), _out(tmp_path, "b")
    for out in (out_a, out_b):
        rc = run_command(["train", "--corpus", corpus_path, *FAST_FLAGS,
                          "--out-dir", out])
        assert rc == 0
    for name in ("metrics.csv", "roc.csv", "history.csv", "manifest.json"):
        got = open(os.path.join(out_a, name), "rb").read()
        want = open(os.path.join(out_b, name), "rb").read()
        assert got == want, name


def test_config_file_overridden_by_flags(corpus_path, tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("wl = 4\nlr = 0.002\n# comment\n")
    out = _out(tmp_path, "tr")
    flags = [f for f in FAST_FLAGS if f not in ("--lr", "0.001")]
    rc = run_command(["train", "--corpus", corpus_path, *flags,
                      "--config", str(cfg_file), "--out-dir", out])
    assert rc == 0
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["config"]["wl"] == 5
    assert manifest["config"]["lr"] == 0.002
    assert set(manifest["inputs"]) == {"corpus", "config"}


def test_eval_writes_metrics_and_roc(corpus_path, tmp_path):
    train_out = _out(tmp_path, "tr")
    assert run_command(["train", "--corpus", corpus_path, *FAST_FLAGS,
                        "--out-dir", train_out]) == 0
    out = _out(tmp_path, "ev")
    rc = run_command(["eval", "--checkpoint",
                      os.path.join(train_out, "model.ckpt"),
                      "--corpus", corpus_path, "--out-dir", out])
    assert rc == 0
    rows = _read_csv(os.path.join(out, "metrics.csv"))
    assert rows[1][:2] == ["0", "all"]
    assert 0.0 <= float(rows[1][2]) <= 1.0
    roc = _read_csv(os.path.join(out, "roc.csv"))
    assert roc[1][1:] == ["0.0", "0.0"]
    assert roc[-1][1:] == ["1.0", "1.0"]
    assert open(os.path.join(out, "roc.png"), "rb").read(8) == PNG_MAGIC
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert set(manifest["inputs"]) == {"corpus", "checkpoint"}


def test_eval_missing_checkpoint_exits_2(corpus_path, tmp_path, capsys):
    rc = run_command(["eval", "--checkpoint", "/nowhere/model.ckpt",
                      "--corpus", corpus_path,
                      "--out-dir", _out(tmp_path, "ev")])
    assert rc == 2
    assert "/nowhere/model.ckpt" in capsys.readouterr().err


def test_ablate_emits_exactly_eight_variant_rows(corpus_path, tmp_path):
    out = _out(tmp_path, "ab")
    rc = run_command(["ablate", "--corpus", corpus_path, *FAST_FLAGS,
                      "--epochs", "1", "--phase1-epochs", "0",
                      "--out-dir", out])
    assert rc == 0
    rows = _read_csv(os.path.join(out, "ablation.csv"))
    assert rows[0] == ["variant", "acc", "m_pre", "m_rec", "m_f1", "auc"]
    assert len(rows) == 9
    assert [r[0] for r in rows[1:]] == list(ABLATION_VARIANTS)
    assert open(os.path.join(out, "ablation.png"), "rb").read(8) == PNG_MAGIC


@pytest.fixture(scope="module")
def sweep_base(tmp_path_factory):
    """In the sweep command the five sweepable knobs are grid flags, so
    their base values travel in a config file instead."""
    path = tmp_path_factory.mktemp("cfg") / "base.cfg"
    path.write_text("wl = 5\nlayers = 1\nd = 8\nlambda_t = 1\n"
                    "min_freq = 1\ntopics = 4\nlda_iterations = 10\n"
                    "d_w = 4\nheads = 2\nepochs = 1\nphase1_epochs = 0\n"
                    "batch_size = 8\npatience = 5\nsplit = 0.6,0.2,0.2\n"
                    "lr = 0.001\nseed = 1\n")
    return ["--config", str(path)]


def test_sweep_wl_r_grid_shape(corpus_path, sweep_base, tmp_path):
    out = _out(tmp_path, "sw")
    rc = run_command(["sweep", "--corpus", corpus_path, *sweep_base,
                      "--wl", "4..5", "--r", "0.2,0.5", "--out-dir", out])
    assert rc == 0
    rows = _read_csv(os.path.join(out, "sweep_wl_r.csv"))
    assert rows[0][:2] == ["wl", "r"]
    assert len(rows) == 5
    assert [(r[0], r[1]) for r in rows[1:]] == [
        ("4", "0.2"), ("4", "0.5"), ("5", "0.2"), ("5", "0.5")]
    png = open(os.path.join(out, "sweep_wl_r.png"), "rb").read(8)
    assert png == PNG_MAGIC


def test_sweep_param_grid(corpus_path, sweep_base, tmp_path):
    out = _out(tmp_path, "sw")
    rc = run_command(["sweep", "--corpus", corpus_path, *sweep_base,
                      "--lambda-t", "1,2", "--out-dir", out])
    assert rc == 0
    rows = _read_csv(os.path.join(out, "sweep_lambda_t.csv"))
    assert rows[0][0] == "lambda_t"
    assert [r[0] for r in rows[1:]] == ["1", "2"]
    png = open(os.path.join(out, "sweep_lambda_t.png"), "rb").read(8)
    assert png == PNG_MAGIC


def test_sweep_without_grid_exits_1(corpus_path, sweep_base, tmp_path,
                                    capsys):
    rc = run_command(["sweep", "--corpus", corpus_path, *sweep_base,
                      "--out-dir", _out(tmp_path, "sw")])
    assert rc == 1
    assert "--wl" in capsys.readouterr().err


def test_sweep_malformed_grid_exits_1(corpus_path, sweep_base, tmp_path):
    rc = run_command(["sweep", "--corpus", corpus_path, *sweep_base,
                      "--wl", "8..4", "--out-dir", _out(tmp_path, "sw")])
    assert rc == 1


def test_bad_flag_value_exits_2(corpus_path, tmp_path):
    rc = run_command(["train", "--corpus", corpus_path, *FAST_FLAGS,
                      "--wl", "not-a-number",
                      "--out-dir", _out(tmp_path, "tr")])
    assert rc == 2
