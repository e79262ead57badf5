import numpy as np
import pytest

from newsgraph.checkpoint import (MAGIC, VERSION, load_checkpoint,
                                  save_checkpoint)
from newsgraph.synth import SynthSpec, generate_synthetic
from newsgraph.trainer import TrainConfig, evaluate_bundle, train


def _articles():
    spec = SynthSpec(clusters=2, entities_per_cluster=4, words_per_cluster=12,
                     articles_per_cluster=10, fake_fraction=0.3, sentences=4,
                     words_per_sentence=4, subtopics_per_cluster=2,
                     real_mentions=(2, 3), fake_mentions=(1, 1), seed=3)
    return generate_synthetic(spec)


def _config(**overrides):
    base = dict(wl=5, restart=0.3, lambda_t=1, topics=4, layers=1, heads=2,
                d=8, d_w=4, lr=1e-3, epochs=2, split=(0.6, 0.2, 0.2), seed=1,
                min_freq=1, lda_iterations=10, batch_size=8, patience=5,
                phase1_epochs=1)
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture(scope="module")
def trained():
    articles = _articles()
    return articles, train(articles, _config())


def test_round_trip_is_bit_exact(trained, tmp_path):
    articles, result = trained
    path = str(tmp_path / "model.ckpt")
    save_checkpoint(path, result.bundle)
    loaded = load_checkpoint(path)

    assert loaded.config == result.bundle.config
    assert loaded.vocab.token_to_id == result.bundle.vocab.token_to_id
    assert loaded.entities.id_to_surface == result.bundle.entities.id_to_surface
    assert loaded.entities.lowercase_forms == result.bundle.entities.lowercase_forms
    np.testing.assert_array_equal(loaded.topics.word_topic,
                                  result.bundle.topics.word_topic)
    np.testing.assert_array_equal(loaded.topics.doc_topic,
                                  result.bundle.topics.doc_topic)
    for got, want in zip(loaded.encoder.tensors(),
                         result.bundle.encoder.tensors()):
        np.testing.assert_array_equal(got.data, want.data)
    for got, want in zip(loaded.transformer.tensors(),
                         result.bundle.transformer.tensors()):
        np.testing.assert_array_equal(got.data, want.data)
    for got, want in zip(loaded.classifier.tensors(),
                         result.bundle.classifier.tensors()):
        np.testing.assert_array_equal(got.data, want.data)


def test_loaded_bundle_scores_identically(trained, tmp_path):
    articles, result = trained
    path = str(tmp_path / "model.ckpt")
    save_checkpoint(path, result.bundle)
    loaded = load_checkpoint(path)
    probs_a, _, _ = evaluate_bundle(result.bundle, articles)
    probs_b, _, _ = evaluate_bundle(loaded, articles)
    np.testing.assert_array_equal(probs_a, probs_b)


def test_text_only_bundle_round_trips(tmp_path):
    articles = _articles()
    result = train(articles, _config(ablation="no_hg"))
    assert result.bundle.transformer is None
    path = str(tmp_path / "flat.ckpt")
    save_checkpoint(path, result.bundle)
    loaded = load_checkpoint(path)
    assert loaded.transformer is None
    probs_a, _, _ = evaluate_bundle(result.bundle, articles)
    probs_b, _, _ = evaluate_bundle(loaded, articles)
    np.testing.assert_array_equal(probs_a, probs_b)


def test_rejects_foreign_files(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"PK\x03\x04 definitely not ours")
    with pytest.raises(ValueError, match="not a checkpoint"):
        load_checkpoint(str(path))


def test_rejects_unknown_version(trained, tmp_path):
    _, result = trained
    path = tmp_path / "model.ckpt"
    save_checkpoint(str(path), result.bundle)
    blob = bytearray(path.read_bytes())
    blob[len(MAGIC)] = VERSION + 1
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="version"):
        load_checkpoint(str(path))


def test_rejects_truncation(trained, tmp_path):
    _, result = trained
    path = tmp_path / "model.ckpt"
    save_checkpoint(str(path), result.bundle)
    blob = path.read_bytes()
    path.write_bytes(blob[:len(blob) - 16])
    with pytest.raises(ValueError, match="truncated"):
        load_checkpoint(str(path))
