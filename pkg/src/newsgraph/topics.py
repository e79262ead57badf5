"""Latent topic model: collapsed Gibbs sampling, held-out perplexity via
fold-in, and document-frequency coherence of the top words."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Document

__all__ = [
    "TopicModel",
    "fit_lda",
    "fold_in",
    "perplexity",
    "coherence",
    "top_topics",
    "topic_top_words",
]


@dataclass
class TopicModel:
    k: int
    alpha: float
    beta: float
    vocab_size: int
    word_topic: np.ndarray    # (k, V) int64 counts
    doc_topic: np.ndarray     # (D, k) int64 counts
    topic_totals: np.ndarray  # (k,) int64
    assignments: list         # per doc, int array of topic per token
    rng_seed: int

    def distribution(self, d: int) -> np.ndarray:
        """Smoothed per-document topic mix; sums to one."""
        counts = self.doc_topic[d]
        return (counts + self.alpha) / (counts.sum() + self.k * self.alpha)

    def distributions(self) -> list[np.ndarray]:
        return [self.distribution(d) for d in range(self.doc_topic.shape[0])]

    def phi(self) -> np.ndarray:
        """Smoothed topic-word matrix, rows sum to one."""
        return ((self.word_topic + self.beta).T /
                (self.topic_totals + self.beta * self.vocab_size)).T


def _gibbs_pass(tokens_by_doc, z_by_doc, doc_topic, word_topic, topic_totals,
                alpha, beta, vocab_size, rng):
    bv = beta * vocab_size
    for d, tokens in enumerate(tokens_by_doc):
        z = z_by_doc[d]
        dt = doc_topic[d]
        for pos in range(tokens.shape[0]):
            w = tokens[pos]
            t_old = z[pos]
            dt[t_old] -= 1
            word_topic[t_old, w] -= 1
            topic_totals[t_old] -= 1
            p = (dt + alpha) * (word_topic[:, w] + beta) / (topic_totals + bv)
            c = np.cumsum(p)
            t_new = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
            if t_new >= p.shape[0]:
                t_new = p.shape[0] - 1
            z[pos] = t_new
            dt[t_new] += 1
            word_topic[t_new, w] += 1
            topic_totals[t_new] += 1


def fit_lda(docs: list[Document], k: int, alpha: float | None = None,
            beta: float = 0.01, iterations: int = 200, seed: int = 0,
            vocab_size: int | None = None) -> TopicModel:
    """Collapsed Gibbs sampling over flattened documents.

    alpha defaults to 50/k. Same seed, same corpus -> identical model.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    tokens_by_doc = [np.asarray(d.tokens(), dtype=np.int64) for d in docs]
    total = sum(t.shape[0] for t in tokens_by_doc)
    if total == 0:
        raise ValueError("cannot fit topics on a corpus with no tokens")
    if k > total:
        raise ValueError(f"k={k} exceeds the corpus token count {total}")
    if alpha is None:
        alpha = 50.0 / k
    if vocab_size is None:
        vocab_size = int(max(t.max() for t in tokens_by_doc if t.size)) + 1

    rng = np.random.default_rng(seed)
    doc_topic = np.zeros((len(docs), k), dtype=np.int64)
    word_topic = np.zeros((k, vocab_size), dtype=np.int64)
    topic_totals = np.zeros(k, dtype=np.int64)
    z_by_doc = []
    for d, tokens in enumerate(tokens_by_doc):
        z = rng.integers(0, k, size=tokens.shape[0])
        z_by_doc.append(z)
        for pos in range(tokens.shape[0]):
            doc_topic[d, z[pos]] += 1
            word_topic[z[pos], tokens[pos]] += 1
            topic_totals[z[pos]] += 1

    for _ in range(iterations):
        _gibbs_pass(tokens_by_doc, z_by_doc, doc_topic, word_topic,
                    topic_totals, alpha, beta, vocab_size, rng)

    return TopicModel(k, alpha, beta, vocab_size, word_topic, doc_topic,
                      topic_totals, z_by_doc, seed)


def fold_in(model: TopicModel, tokens, sweeps: int = 20,
            salt: int = 0) -> np.ndarray:
    """Estimate a topic mix for an unseen document against frozen word-topic
    counts. Deterministic given the model seed and salt."""
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.size == 0:
        return np.full(model.k, 1.0 / model.k)
    rng = np.random.default_rng(np.random.SeedSequence(
        (model.rng_seed, 0x0F01D, salt)))
    bv = model.beta * model.vocab_size
    phi_w = (model.word_topic + model.beta) / \
        (model.topic_totals + bv)[:, None]  # frozen
    z = rng.integers(0, model.k, size=tokens.shape[0])
    counts = np.bincount(z, minlength=model.k).astype(np.float64)
    for _ in range(sweeps):
        for pos in range(tokens.shape[0]):
            counts[z[pos]] -= 1
            p = (counts + model.alpha) * phi_w[:, tokens[pos]]
            c = np.cumsum(p)
            t_new = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
            if t_new >= model.k:
                t_new = model.k - 1
            z[pos] = t_new
            counts[t_new] += 1
    return (counts + model.alpha) / (tokens.shape[0] + model.k * model.alpha)


def perplexity(model: TopicModel, heldout: list[Document]) -> float:
    """exp(-mean log p(w|d)) over all held-out tokens; topic mixes come from
    fold-in, word probabilities from the frozen model. Smoothing keeps
    unknown tokens finite."""
    phi = model.phi()
    total_ll = 0.0
    n_tokens = 0
    for d_idx, doc in enumerate(heldout):
        tokens = np.asarray(doc.tokens(), dtype=np.int64)
        if tokens.size == 0:
            continue
        theta = fold_in(model, tokens, salt=d_idx)
        probs = theta @ phi[:, tokens]
        total_ll += float(np.log(probs).sum())
        n_tokens += tokens.size
    if n_tokens == 0:
        raise ValueError("held-out set has no tokens")
    return math.exp(-total_ll / n_tokens)


def topic_top_words(model: TopicModel, topic: int, n: int = 10) -> list[int]:
    """Most probable word ids for a topic, ties to the lower id. The reserved
    unknown id 0 is not a word and is excluded."""
    counts = model.word_topic[topic].astype(np.float64).copy()
    counts[0] = -1.0
    order = np.lexsort((np.arange(model.vocab_size), -counts))
    return [int(w) for w in order[:n] if counts[w] >= 0.0]


def coherence(model: TopicModel, docs: list[Document], top_n: int = 10) -> float:
    """Mean over topics of the pairwise log((co-doc-freq + 1) / doc-freq)
    score of each topic's top words; denominator is the higher-ranked word's
    document frequency."""
    doc_sets = [set(d.tokens()) for d in docs]
    scores = []
    for t in range(model.k):
        top = topic_top_words(model, t, top_n)
        total = 0.0
        for m in range(1, len(top)):
            for l in range(m):
                df = sum(top[l] in s for s in doc_sets)
                if df == 0:
                    continue
                codf = sum(top[l] in s and top[m] in s for s in doc_sets)
                total += math.log((codf + 1.0) / df)
        scores.append(total)
    if not scores:
        raise ValueError("model has no topics")
    return float(np.mean(scores))


def top_topics(dist, lambda_t: int) -> list[int]:
    """Indices of the lambda_t largest probabilities, ties to the lower id."""
    dist = np.asarray(dist, dtype=np.float64)
    if lambda_t < 1:
        raise ValueError("lambda_t must be >= 1")
    order = np.lexsort((np.arange(dist.shape[0]), -dist))
    return [int(t) for t in order[:lambda_t]]
