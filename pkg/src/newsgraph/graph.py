"""The news/entity/topic graph.

Three node kinds, three edge kinds: news-entity (mention), news-topic (the
document's strongest topics), and news-news. A news pair is linked when its
shared-entity count beats the mean over pairs that share at least one entity,
or when both articles peak on the same topic. Entities and topics never link
to each other directly; news relate through them.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .corpus import Document, EntityTable, Vocabulary
from .encoder import TextEncoderParams
from .topics import TopicModel, top_topics, topic_top_words

__all__ = [
    "GraphError",
    "NodeKind",
    "NodeId",
    "HeteroGraph",
    "build_graph",
    "node_features",
    "neighbors",
    "drop_kinds",
    "graph_stats",
]


class GraphError(ValueError):
    pass


class NodeKind(IntEnum):
    NEWS = 0
    ENTITY = 1
    TOPIC = 2


@dataclass(frozen=True, order=True)
class NodeId:
    kind: NodeKind
    index: int


@dataclass
class HeteroGraph:
    n_news: int
    n_entities: int
    n_topics: int
    adj: dict  # NodeId -> tuple of NodeId, sorted, symmetric, no self loops
    mean_shared_entities: float
    lambda_t: int
    features: dict = field(default_factory=dict)  # NodeId -> (d,) ndarray

    def count(self, kind: NodeKind) -> int:
        return {NodeKind.NEWS: self.n_news, NodeKind.ENTITY: self.n_entities,
                NodeKind.TOPIC: self.n_topics}[kind]

    def has_node(self, node: NodeId) -> bool:
        return 0 <= node.index < self.count(node.kind)

    def edge_set(self) -> set:
        return {tuple(sorted((a, b))) for a, nbrs in self.adj.items()
                for b in nbrs}


def build_graph(docs: list[Document], dists: list[np.ndarray], lambda_t: int = 3,
                n_entities: int | None = None, edge_pairs: str = "sharing",
                edge_topic: str = "top1") -> HeteroGraph:
    """Assemble the graph from annotated documents and their topic mixes.

    edge_pairs picks the population for the shared-entity mean: "sharing"
    (pairs with at least one shared entity) or "all" (every unordered pair).
    edge_topic picks the topic rule: "top1" (equal argmax) or "overlap"
    (top-lambda_t sets intersect).
    """
    if len(docs) != len(dists):
        raise GraphError("one topic distribution per document required")
    if edge_pairs not in ("sharing", "all"):
        raise GraphError(f"unknown edge_pairs rule {edge_pairs!r}")
    if edge_topic not in ("top1", "overlap"):
        raise GraphError(f"unknown edge_topic rule {edge_topic!r}")
    n = len(docs)
    n_topics = len(dists[0]) if n else 0
    entity_sets = [d.entity_ids() for d in docs]
    if n_entities is None:
        n_entities = max((max(s) + 1 for s in entity_sets if s), default=0)

    edges: set[tuple[NodeId, NodeId]] = set()

    def connect(a: NodeId, b: NodeId):
        if a != b:
            edges.add((a, b) if a < b else (b, a))

    # mention edges
    for i, ents in enumerate(entity_sets):
        news = NodeId(NodeKind.NEWS, i)
        for e in ents:
            if e >= n_entities:
                raise GraphError(f"entity id {e} out of range")
            connect(news, NodeId(NodeKind.ENTITY, e))

    # topic edges from each document's strongest topics
    tops = [top_topics(dist, lambda_t) for dist in dists]
    for i, ts in enumerate(tops):
        news = NodeId(NodeKind.NEWS, i)
        for t in ts:
            connect(news, NodeId(NodeKind.TOPIC, t))

    # shared-entity counts via an entity -> documents index
    by_entity: dict[int, list[int]] = defaultdict(list)
    for i, ents in enumerate(entity_sets):
        for e in sorted(ents):
            by_entity[e].append(i)
    shared: Counter[tuple[int, int]] = Counter()
    for members in by_entity.values():
        for a_pos in range(len(members)):
            for b_pos in range(a_pos + 1, len(members)):
                shared[(members[a_pos], members[b_pos])] += 1

    if edge_pairs == "sharing":
        mean_shared = (sum(shared.values()) / len(shared)) if shared else 0.0
    else:
        n_pairs = n * (n - 1) // 2
        mean_shared = (sum(shared.values()) / n_pairs) if n_pairs else 0.0

    for (i, j), count in shared.items():
        if count > mean_shared:
            connect(NodeId(NodeKind.NEWS, i), NodeId(NodeKind.NEWS, j))

    if edge_topic == "top1":
        by_top: dict[int, list[int]] = defaultdict(list)
        for i, ts in enumerate(tops):
            by_top[ts[0]].append(i)
        for members in by_top.values():
            for a_pos in range(len(members)):
                for b_pos in range(a_pos + 1, len(members)):
                    connect(NodeId(NodeKind.NEWS, members[a_pos]),
                            NodeId(NodeKind.NEWS, members[b_pos]))
    else:
        top_sets = [set(ts) for ts in tops]
        for i in range(n):
            for j in range(i + 1, n):
                if top_sets[i] & top_sets[j]:
                    connect(NodeId(NodeKind.NEWS, i), NodeId(NodeKind.NEWS, j))

    adj: dict[NodeId, list[NodeId]] = defaultdict(list)
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    return HeteroGraph(
        n_news=n, n_entities=n_entities, n_topics=n_topics,
        adj={k: tuple(sorted(v)) for k, v in adj.items()},
        mean_shared_entities=float(mean_shared), lambda_t=lambda_t)


def _pad_to(vec: np.ndarray, d: int) -> np.ndarray:
    if vec.shape[0] >= d:
        return vec[:d].astype(np.float64)
    out = np.zeros(d)
    out[:vec.shape[0]] = vec
    return out


def _to_position_scale(vec: np.ndarray, d: int) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return vec
    return vec * (np.sqrt(d / 2.0) / norm)


def node_features(graph: HeteroGraph, article_vectors: np.ndarray,
                  encoder: TextEncoderParams, model: TopicModel,
                  entities: EntityTable, vocab: Vocabulary) -> dict:
    """Feature table: article vectors for news rows; mean word-embedding rows
    for entity surfaces and topic top words, zero-padded to the news width.

    Every nonzero row is rescaled to norm sqrt(d/2), which is exactly the
    norm of one sinusoidal position row.  The raw rows differ in magnitude
    by an order (article vectors are attention-pooled, entity rows are
    two-word means), and whatever is much smaller than the position signal
    is effectively invisible downstream.

    Entities whose surface tokens are all out of vocabulary get a zero vector;
    their count lands in graph_stats.
    """
    if article_vectors.shape[0] != graph.n_news:
        raise GraphError("need one article vector per news node")
    d = article_vectors.shape[1]
    emb = encoder.embedding.data
    table: dict[NodeId, np.ndarray] = {}
    for i in range(graph.n_news):
        table[NodeId(NodeKind.NEWS, i)] = _to_position_scale(
            article_vectors[i].astype(np.float64), d)
    for e in range(graph.n_entities):
        ids = [vocab.lookup(tok) for tok in entities.id_to_surface[e].split()]
        ids = [t for t in ids if t != 0]
        vec = emb[ids].mean(axis=0) if ids else np.zeros(emb.shape[1])
        table[NodeId(NodeKind.ENTITY, e)] = _to_position_scale(
            _pad_to(vec, d), d)
    for t in range(graph.n_topics):
        words = topic_top_words(model, t, 10)
        vec = emb[words].mean(axis=0) if words else np.zeros(emb.shape[1])
        table[NodeId(NodeKind.TOPIC, t)] = _to_position_scale(
            _pad_to(vec, d), d)
    return table


def neighbors(graph: HeteroGraph, node: NodeId) -> tuple:
    if not graph.has_node(node):
        raise GraphError(f"node {node} not in graph")
    return graph.adj.get(node, ())


def drop_kinds(graph: HeteroGraph, drop_entities: bool = False,
               drop_topics: bool = False) -> HeteroGraph:
    """Remove whole node kinds (for the structure ablations). News-news edges
    survive; they were derived from entities/topics but exist independently."""
    def keep(node: NodeId) -> bool:
        if drop_entities and node.kind == NodeKind.ENTITY:
            return False
        if drop_topics and node.kind == NodeKind.TOPIC:
            return False
        return True

    adj = {a: tuple(b for b in nbrs if keep(b))
           for a, nbrs in graph.adj.items() if keep(a)}
    adj = {a: nbrs for a, nbrs in adj.items() if nbrs}
    return HeteroGraph(
        n_news=graph.n_news,
        n_entities=0 if drop_entities else graph.n_entities,
        n_topics=0 if drop_topics else graph.n_topics,
        adj=adj, mean_shared_entities=graph.mean_shared_entities,
        lambda_t=graph.lambda_t,
        features={k: v for k, v in graph.features.items() if keep(k)})


def graph_stats(graph: HeteroGraph) -> dict:
    """Key/value summary used by the CLI report."""
    kind_edges = Counter()
    for a, b in graph.edge_set():
        kind_edges[f"edges_{a.kind.name.lower()}_{b.kind.name.lower()}"] += 1
    degrees = [len(v) for v in graph.adj.values()]
    isolated = (graph.n_news + graph.n_entities + graph.n_topics
                - len(graph.adj))
    hist = Counter(degrees)
    if isolated:
        hist[0] += isolated
    zero_feats = sum(
        1 for node, vec in graph.features.items()
        if node.kind == NodeKind.ENTITY and not vec.any())
    stats = {
        "news_nodes": graph.n_news,
        "entity_nodes": graph.n_entities,
        "topic_nodes": graph.n_topics,
        "edges_total": len(graph.edge_set()),
        "edges_news_news": kind_edges.get("edges_news_news", 0),
        "edges_news_entity": kind_edges.get("edges_news_entity", 0),
        "edges_news_topic": kind_edges.get("edges_news_topic", 0),
        "mean_shared_entities": round(graph.mean_shared_entities, 6),
        "lambda_t": graph.lambda_t,
        "zero_feature_entities": zero_feats,
        "degree_histogram": dict(sorted(hist.items())),
    }
    return stats
