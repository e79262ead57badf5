"""Random walk with restart around a news node, and the padded feature
matrix a walk becomes before entering the transformer.

A walk keeps the distinct nodes in first-visit order, root first, until it
has collected ``wl`` of them or hits the 100*wl step budget (disconnected
neighborhoods stop early and get padded/masked).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphError, HeteroGraph, NodeId, NodeKind

__all__ = [
    "RwrSequence",
    "SequenceMatrix",
    "rwr_step",
    "sample_subgraph",
    "sequence_matrix",
    "walk_seed",
]


@dataclass
class RwrSequence:
    root: NodeId
    nodes: list  # distinct NodeIds, nodes[0] == root
    wl: int


@dataclass
class SequenceMatrix:
    matrix: np.ndarray  # (wl, d) float64, padded rows all zero
    mask: np.ndarray    # (wl,) bool, True on real rows
    nodes: list


def rwr_step(graph: HeteroGraph, current: NodeId, root: NodeId, r: float,
             rng: np.random.Generator) -> NodeId:
    """One transition: restart to the root with probability r, otherwise move
    to a uniformly random neighbor; a dead end also returns the root."""
    if not (0.0 <= r <= 1.0):
        raise ValueError(f"restart probability {r} outside [0, 1]")
    adj = graph.adj.get(current, ())
    if rng.random() < r or not adj:
        return root
    return adj[int(rng.integers(len(adj)))]


def sample_subgraph(graph: HeteroGraph, root: NodeId, wl: int, r: float,
                    seed: int) -> RwrSequence:
    if root.kind != NodeKind.NEWS:
        raise GraphError(f"walk root must be a news node, got {root.kind.name}")
    if not graph.has_node(root):
        raise GraphError(f"root {root} not in graph")
    if wl < 1:
        raise ValueError("wl must be >= 1")
    rng = np.random.default_rng(seed)
    nodes = [root]
    seen = {root}
    current = root
    budget = 100 * wl
    steps = 0
    while len(nodes) < wl and steps < budget:
        current = rwr_step(graph, current, root, r, rng)
        steps += 1
        if current not in seen:
            seen.add(current)
            nodes.append(current)
    return RwrSequence(root=root, nodes=nodes, wl=wl)


def sequence_matrix(graph: HeteroGraph, seq: RwrSequence) -> SequenceMatrix:
    if not graph.features:
        raise GraphError("graph has no feature table")
    first = next(iter(graph.features.values()))
    d = first.shape[0]
    mat = np.zeros((seq.wl, d))
    mask = np.zeros(seq.wl, dtype=bool)
    for i, node in enumerate(seq.nodes):
        vec = graph.features.get(node)
        if vec is None:
            raise GraphError(f"no feature for node {node}")
        mat[i] = vec
        mask[i] = True
    return SequenceMatrix(matrix=mat, mask=mask, nodes=list(seq.nodes))


def walk_seed(global_seed: int, root_index: int, epoch: int = 0) -> int:
    """Stable per-walk seed so fixed walks stay fixed across runs."""
    ss = np.random.SeedSequence((global_seed, root_index, epoch))
    return int(ss.generate_state(1)[0])
