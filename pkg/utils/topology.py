#!/usr/bin/env python3
"""
Proximity Graph Utilities
Builds the leader-follower proximity graph and its matrix objects
(follower Laplacian, incidence, leader adjacency, topology matrix H)
"""

import hashlib
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Sequence, Set, Tuple

import networkx as nx
import numpy as np
from scipy.linalg import eigvalsh
from scipy.spatial.distance import cdist, pdist, squareform

from utils.errors import ConfigurationError, ContractViolation

Edge = Tuple[int, int]

LEADER = 0


@dataclass(frozen=True)
class ProximityGraph:
    """Follower edges use labels 1..n with i < j; leader_adj[i-1] is a_{i0}"""
    n: int
    follower_edges: FrozenSet[Edge]
    leader_adj: Tuple[bool, ...]
    R: float

    def neighbors(self, i: int) -> List[int]:
        """Sorted neighbor labels of follower i, leader first when adjacent"""
        found = [LEADER] if self.leader_adj[i - 1] else []
        others = sorted(j if k == i else k for k, j in self.follower_edges if i in (k, j))
        return found + others

    def edge_set(self) -> FrozenSet[Edge]:
        """All edges, leader edges written (0, i)"""
        leader_edges = {(LEADER, i + 1) for i, adjacent in enumerate(self.leader_adj) if adjacent}
        return frozenset(self.follower_edges | leader_edges)

    def edge_hash(self) -> str:
        """Short digest of the edge set, stable across runs"""
        text = ";".join(f"{i}-{j}" for i, j in sorted(self.edge_set()))
        return hashlib.sha256(text.encode("ascii")).hexdigest()[:16]


@dataclass(frozen=True)
class TopologyMatrices:
    L_F: np.ndarray
    D_F: np.ndarray
    Lambda: np.ndarray
    H: np.ndarray
    edges: Tuple[Edge, ...]


def build_graph(q_0, q, R: float) -> ProximityGraph:
    """Neighbors are pairs strictly closer than R"""
    if R <= 0:
        raise ConfigurationError(f"sensing radius must be positive, got {R}")
    leader = np.asarray(q_0, dtype=float).reshape(1, -1)
    followers = np.asarray(q, dtype=float)
    if followers.ndim != 2 or followers.shape[1] != leader.shape[1]:
        raise ConfigurationError(
            f"position dimension mismatch: leader {leader.shape[1]}, followers {followers.shape}")
    n = followers.shape[0]

    edges: Set[Edge] = set()
    if n > 1:
        distances = squareform(pdist(followers))
        rows, cols = np.nonzero(np.triu(distances < R, k=1))
        edges = {(int(i) + 1, int(j) + 1) for i, j in zip(rows, cols)}

    leader_distances = cdist(followers, leader)[:, 0] if n else np.zeros(0)
    leader_adj = tuple(bool(d < R) for d in leader_distances)
    return ProximityGraph(n=n, follower_edges=frozenset(edges), leader_adj=leader_adj, R=float(R))


def matrices(g: ProximityGraph) -> TopologyMatrices:
    """Incidence orientation: the lower label is the positive end"""
    edges = tuple(sorted(g.follower_edges))
    D_F = np.zeros((g.n, len(edges)), dtype=np.int64)
    for k, (i, j) in enumerate(edges):
        D_F[i - 1, k] = 1
        D_F[j - 1, k] = -1
    L_F = D_F @ D_F.T
    Lambda = np.diag(np.array(g.leader_adj, dtype=np.int64))
    return TopologyMatrices(L_F=L_F, D_F=D_F, Lambda=Lambda, H=L_F + Lambda, edges=edges)


def leader_reaches_all(g: ProximityGraph) -> bool:
    """True iff every follower has a directed path from the leader"""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(g.n + 1))
    for i, adjacent in enumerate(g.leader_adj, start=1):
        if adjacent:
            graph.add_edge(LEADER, i)
    for i, j in g.follower_edges:
        graph.add_edge(i, j)
        graph.add_edge(j, i)
    return len(nx.descendants(graph, LEADER)) == g.n


def min_eig_sym(M) -> float:
    """Smallest eigenvalue of a symmetric matrix"""
    matrix = np.asarray(M, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {matrix.shape}")
    if matrix.size == 0:
        raise ContractViolation("empty matrix has no eigenvalues")
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-12):
        raise ContractViolation("matrix is not symmetric within 1e-12")
    return float(eigvalsh(matrix, subset_by_index=[0, 0])[0])


def is_subgraph(a: ProximityGraph, b: ProximityGraph) -> bool:
    if a.n != b.n:
        raise ConfigurationError(f"graph sizes differ: {a.n} vs {b.n}")
    if not a.follower_edges <= b.follower_edges:
        return False
    return all(b_adj or not a_adj for a_adj, b_adj in zip(a.leader_adj, b.leader_adj))


def permute(g: ProximityGraph, perm: Sequence[int]) -> ProximityGraph:
    """Relabel followers: old label i becomes perm[i-1]"""
    if sorted(perm) != list(range(1, g.n + 1)):
        raise ConfigurationError(f"not a permutation of 1..{g.n}: {list(perm)}")
    edges = {tuple(sorted((perm[i - 1], perm[j - 1]))) for i, j in g.follower_edges}
    leader_adj = [False] * g.n
    for i, adjacent in enumerate(g.leader_adj, start=1):
        leader_adj[perm[i - 1] - 1] = adjacent
    return ProximityGraph(n=g.n, follower_edges=frozenset(edges), leader_adj=tuple(leader_adj), R=g.R)


def edge_changes(previous: ProximityGraph, current: ProximityGraph) -> Tuple[Set[Edge], Set[Edge]]:
    """(added, removed) between two graphs, leader edges as (0, i)"""
    before, after = previous.edge_set(), current.edge_set()
    return set(after - before), set(before - after)


def remove_edges(g: ProximityGraph, edges: Iterable[Edge]) -> ProximityGraph:
    """Copy of g without the given edges (leader edges as (0, i))"""
    dropped = set(edges)
    leader_adj = tuple(adj and (LEADER, i) not in dropped for i, adj in enumerate(g.leader_adj, start=1))
    return ProximityGraph(n=g.n, follower_edges=frozenset(g.follower_edges - dropped),
                          leader_adj=leader_adj, R=g.R)
