"""Deterministic two-phase Louvain community detection.

Standard Louvain: repeated local moves to the neighbor community with the
best modularity gain, then coarsening, until no move improves modularity.
Determinism is pinned down hard so splits are reproducible from a seed-free
input: nodes are visited in ascending id order, a move happens only on a
strict gain over staying, and ties between candidate communities go to the
smallest community id.
"""

from __future__ import annotations

import numpy as np

from ..errors import NoEdges
from ..graph import Graph

_MAX_SWEEPS = 1000  # safety valve; strict-gain moves terminate long before


def modularity(g: Graph, assignment) -> float:
    """Q = (1/2m) sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j) on a simple graph."""
    assignment = np.asarray(assignment, dtype=np.int64)
    edges = g.undirected_edges()
    if len(edges) == 0:
        raise NoEdges("modularity needs at least one edge")
    two_m = 2.0 * len(edges)
    deg = g.degrees().astype(np.float64)

    same = assignment[edges[:, 0]] == assignment[edges[:, 1]]
    internal = 2.0 * np.count_nonzero(same)  # both directions

    num_comms = int(assignment.max()) + 1
    tot = np.zeros(num_comms)
    np.add.at(tot, assignment, deg)
    return internal / two_m - float(np.sum((tot / two_m) ** 2))


def _local_moves(adj: list[dict], k: list[float], two_m: float) -> tuple[list[int], bool]:
    """Phase 1 on one level; returns (node -> community, any_move_happened)."""
    n = len(adj)
    node_comm = list(range(n))
    comm_tot = list(k)
    moved_any = False

    for _ in range(_MAX_SWEEPS):
        moved_this_sweep = False
        for i in range(n):
            c = node_comm[i]
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                if j != i:
                    b = node_comm[j]
                    links[b] = links.get(b, 0.0) + w
            comm_tot[c] -= k[i]

            best_comm = c
            best_gain = links.get(c, 0.0) - k[i] * comm_tot[c] / two_m
            for b in sorted(links):
                if b == c:
                    continue
                gain = links[b] - k[i] * comm_tot[b] / two_m
                if gain > best_gain:
                    best_comm, best_gain = b, gain

            comm_tot[best_comm] += k[i]
            node_comm[i] = best_comm
            if best_comm != c:
                moved_this_sweep = True
                moved_any = True
        if not moved_this_sweep:
            break
    return node_comm, moved_any


def _relabel(node_comm: list[int]) -> tuple[list[int], int]:
    """Dense community ids in order of first appearance (ascending node id)."""
    remap: dict[int, int] = {}
    out = []
    for c in node_comm:
        if c not in remap:
            remap[c] = len(remap)
        out.append(remap[c])
    return out, len(remap)


def _coarsen(adj: list[dict], node_comm: list[int], num_comms: int) -> list[dict]:
    coarse: list[dict] = [dict() for _ in range(num_comms)]
    for i, nbrs in enumerate(adj):
        ci = node_comm[i]
        row = coarse[ci]
        for j, w in nbrs.items():
            cj = node_comm[j]
            row[cj] = row.get(cj, 0.0) + w
    return coarse


def louvain_partition(g: Graph) -> np.ndarray:
    """Node -> community assignment with Q >= Q(singleton partition)."""
    edges = g.undirected_edges()
    if len(edges) == 0:
        raise NoEdges("louvain_partition needs at least one edge")

    # Level-0 adjacency as dict rows (unit weights, no self-loops).
    adj: list[dict] = [dict() for _ in range(g.num_nodes)]
    for u, v in edges:
        adj[u][v] = adj[u].get(v, 0.0) + 1.0
        adj[v][u] = adj[v].get(u, 0.0) + 1.0
    two_m = 2.0 * len(edges)

    mapping = np.arange(g.num_nodes)
    while True:
        # Coarse self-entries hold the full internal weight (both directions),
        # so k_i = sum_j A_ij needs no extra self-loop term.
        k = [sum(row.values()) for row in adj]
        node_comm, moved = _local_moves(adj, k, two_m)
        node_comm, num_comms = _relabel(node_comm)
        if not moved or num_comms == len(adj):
            break
        mapping = np.asarray(node_comm, dtype=np.int64)[mapping]
        adj = _coarsen(adj, node_comm, num_comms)
        if num_comms == 1:
            break

    final, _ = _relabel(list(mapping))
    return np.asarray(final, dtype=np.int64)
