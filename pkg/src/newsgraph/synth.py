"""Synthetic news corpus with planted cross-source anomalies.

Articles fall into topical clusters with disjoint word pools.  A real
article quotes organizations from its own cluster; a fake one keeps its
cluster's body text but quotes organizations from a different cluster.
The tell is deliberately kept out of the token statistics: organization
names are unique pseudo-words with no cluster marker, fake articles
repeat their few foreign names so the name density matches the real
articles, and body words carry no label signal at all.  What remains is
the identity mismatch between an article's words and the organizations
it quotes, which only becomes visible once articles are linked through
shared mentions.

Names are two capitalized pseudo-words; body words carry a digit so the
mention detector can never mistake them for names.  Each cluster mixes
several latent subtopics, giving a topic model real structure to
recover.  Cluster membership is appended to the article id (``a0017c2``
lives in cluster 2) so downstream checks can read the ground truth back
from a written corpus file.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import RawArticle

_CONSONANTS = "bcdfglmnprstvz"
_VOWELS = "aeiou"


def _pseudo_word(rng, taken: set) -> str:
    """A fresh pronounceable lowercase word, never repeated per corpus."""
    while True:
        parts = []
        for _ in range(int(rng.integers(2, 4))):
            parts.append(_CONSONANTS[int(rng.integers(len(_CONSONANTS)))])
            parts.append(_VOWELS[int(rng.integers(len(_VOWELS)))])
        word = "".join(parts)
        if word not in taken:
            taken.add(word)
            return word


@dataclass
class SynthSpec:
    clusters: int = 4
    entities_per_cluster: int = 10
    words_per_cluster: int = 60
    articles_per_cluster: int = 50
    fake_fraction: float = 0.2
    sentences: int = 5
    words_per_sentence: int = 8
    subtopics_per_cluster: int = 4
    real_mentions: tuple = (2, 4)
    fake_mentions: tuple = (2, 4)
    seed: int = 0


def _validate(spec: SynthSpec) -> None:
    if spec.clusters < 2:
        raise ValueError("need at least two clusters to plant a mismatch")
    if spec.articles_per_cluster < 1:
        raise ValueError("articles_per_cluster must be positive")
    if not 0.0 <= spec.fake_fraction <= 1.0:
        raise ValueError("fake_fraction must lie in [0, 1]")
    if spec.words_per_sentence < 2:
        raise ValueError("sentences must have room around a mention")
    if spec.subtopics_per_cluster < 1:
        raise ValueError("subtopics_per_cluster must be positive")
    if spec.words_per_cluster < spec.subtopics_per_cluster:
        raise ValueError("word pool smaller than the subtopic count")
    for low, high in (spec.real_mentions, spec.fake_mentions):
        if not 1 <= low <= high:
            raise ValueError("mention ranges must satisfy 1 <= low <= high")
        if high > spec.entities_per_cluster:
            raise ValueError("mention range exceeds the names per cluster")
    if spec.real_mentions[1] > spec.sentences:
        raise ValueError("more mentions than sentences to hold them")
    if spec.entities_per_cluster < 2:
        raise ValueError("need at least two names per cluster")


def _fake_quotas(spec: SynthSpec) -> list[int]:
    total = spec.clusters * spec.articles_per_cluster
    n_fake = round(total * spec.fake_fraction)
    base, extra = divmod(n_fake, spec.clusters)
    return [base + (1 if c < extra else 0) for c in range(spec.clusters)]


def generate_synthetic(spec: SynthSpec) -> list[RawArticle]:
    _validate(spec)
    rng = np.random.default_rng(spec.seed)
    n_clusters = spec.clusters
    n_words = spec.words_per_cluster
    n_sub = spec.subtopics_per_cluster

    taken: set = set()
    names = [[(_pseudo_word(rng, taken), _pseudo_word(rng, taken))
              for _ in range(spec.entities_per_cluster)]
             for c in range(n_clusters)]
    pools = [[f"w{c}x{i}" for i in range(n_words)] for c in range(n_clusters)]
    subtopics = [rng.dirichlet(np.full(n_words, 0.25), size=n_sub)
                 for _ in range(n_clusters)]

    drafts = []
    for c, quota in enumerate(_fake_quotas(spec)):
        fake_rows = set(rng.choice(spec.articles_per_cluster, size=quota,
                                   replace=False).tolist())
        for a in range(spec.articles_per_cluster):
            fake = a in fake_rows
            theta = rng.dirichlet(np.full(n_sub, 0.6))
            sents = []
            for _ in range(spec.sentences):
                picks = rng.choice(n_sub, size=spec.words_per_sentence,
                                   p=theta)
                sents.append([pools[c][int(rng.choice(n_words,
                                                      p=subtopics[c][z]))]
                              for z in picks])

            # Both labels insert the same number of name mentions, so the
            # token stream alone cannot separate them.  A fake article just
            # spreads its insertions over fewer distinct names, all taken
            # from another cluster.
            insertions = int(rng.integers(spec.real_mentions[0],
                                          spec.real_mentions[1] + 1))
            source, distinct = c, insertions
            if fake:
                source = int((c + 1 + rng.integers(n_clusters - 1))
                             % n_clusters)
                distinct = min(int(rng.integers(spec.fake_mentions[0],
                                                spec.fake_mentions[1] + 1)),
                               insertions)
            chosen = rng.choice(spec.entities_per_cluster, size=distinct,
                                replace=False)
            rows = rng.choice(spec.sentences, size=insertions, replace=False)
            mentions = []
            for slot, sent in enumerate(rows):
                first, second = names[source][int(chosen[slot % distinct])]
                at = int(rng.integers(1, len(sents[sent])))
                surface = f"{first.capitalize()} {second.capitalize()}"
                sents[sent][at:at] = surface.split()
                mentions.append((int(sent), surface))

            seen: dict = {}
            for sent, surface in sorted(mentions):
                seen.setdefault(surface, None)
            text = " ".join(" ".join(words) + "." for words in sents)
            drafts.append((c, int(fake), text, tuple(seen)))

    order = rng.permutation(len(drafts))
    return [RawArticle(id=f"a{i:04d}c{drafts[j][0]}", label=drafts[j][1],
                       text=drafts[j][2], entities=drafts[j][3])
            for i, j in enumerate(order)]


def article_cluster(article_id: str) -> int:
    """Read the planted cluster back out of a generated article id."""
    head, _, tail = article_id.rpartition("c")
    if not head or not tail.isdigit():
        raise ValueError(f"id {article_id!r} carries no cluster suffix")
    return int(tail)
