"""Network shapes, push-target selection, and the observer choice.

The topology fixes who may talk to whom; each node then pushes to at
most k of its topology neighbors, the closest by XOR distance between
synthesized 256-bit node ids (mirroring how real nodes pick targets
from their peer table). The observer is the hop-farthest node from the
source, which in a complete network is simply a direct neighbor.
"""

from __future__ import annotations

from collections import deque

import networkx as nx
import numpy as np

from marketpalace.errors import ParameterError
from marketpalace.p2p.peers import xor_distance


def build_adjacency(
    topology: str, num_nodes: int, degree: int | None, rng: np.random.Generator
) -> list[list[int]]:
    if topology == "complete":
        return [[j for j in range(num_nodes) if j != i] for i in range(num_nodes)]
    if topology == "ring":
        if num_nodes == 2:
            return [[1], [0]]
        return [
            sorted({(i - 1) % num_nodes, (i + 1) % num_nodes})
            for i in range(num_nodes)
        ]
    if topology == "random":
        if degree is None:
            raise ParameterError("random topology needs a degree")
        if (degree * num_nodes) % 2 != 0:
            raise ParameterError("degree * num_nodes must be even")
        graph_seed = int(rng.integers(0, 2**31 - 1))
        graph = nx.random_regular_graph(degree, num_nodes, seed=graph_seed)
        return [sorted(graph.neighbors(i)) for i in range(num_nodes)]
    raise ParameterError(f"unknown topology {topology!r}")


def synthesize_node_ids(num_nodes: int, rng: np.random.Generator) -> list[str]:
    return [bytes(rng.bytes(32)).hex() for _ in range(num_nodes)]


def push_targets(
    adjacency: list[list[int]], node_ids: list[str], k: int
) -> list[list[int]]:
    """Per node: its topology neighbors, capped to the k XOR-closest."""
    targets = []
    for i, neigh in enumerate(adjacency):
        ranked = sorted(
            neigh, key=lambda j: (xor_distance(node_ids[i], node_ids[j]), node_ids[j])
        )
        targets.append(ranked[:k])
    return targets


def hop_distances(adjacency: list[list[int]], source: int) -> list[int | None]:
    """BFS hop counts from ``source``; None for unreachable nodes."""
    dist: list[int | None] = [None] * len(adjacency)
    dist[source] = 0
    queue = deque([source])
    while queue:
        node = queue.popleft()
        for nxt in adjacency[node]:
            if dist[nxt] is None:
                dist[nxt] = dist[node] + 1
                queue.append(nxt)
    return dist


def pick_observer(adjacency: list[list[int]], source: int = 0) -> int:
    """The hop-farthest reachable node from the source, lowest index on ties."""
    dist = hop_distances(adjacency, source)
    best = None
    for i, d in enumerate(dist):
        if i == source or d is None:
            continue
        if best is None or d > dist[best]:
            best = i
    if best is None:
        raise ParameterError("source has no reachable peers")
    return best
