#!/usr/bin/env python3
"""
Tests for the proximity graph and its matrices
"""

import math

import numpy as np
import pytest

from utils.errors import ConfigurationError, ContractViolation
from utils.topology import (LEADER, build_graph, edge_changes, is_subgraph, leader_reaches_all,
                            matrices, min_eig_sym, permute, remove_edges)

CASE1_LEADER = (-80.0, 200.0, 0.0)
CASE1_FOLLOWERS = [(-80.0, 90.0, 0.0), (100.0, 90.0, 0.0), (100.0, -100.0, 0.0), (-80.0, -100.0, 0.0)]


@pytest.fixture
def case1_graph():
    return build_graph(CASE1_LEADER, CASE1_FOLLOWERS, 200.0)


def test_case1_edges(case1_graph):
    assert case1_graph.follower_edges == {(1, 2), (1, 4), (2, 3), (3, 4)}
    assert case1_graph.leader_adj == (True, False, False, False)
    assert case1_graph.edge_set() == {(0, 1), (1, 2), (1, 4), (2, 3), (3, 4)}
    assert case1_graph.neighbors(1) == [LEADER, 2, 4]
    assert case1_graph.neighbors(3) == [2, 4]


def test_case1_topology_matrix(case1_graph):
    tm = matrices(case1_graph)
    expected_H = np.array([[3, -1, 0, -1],
                           [-1, 2, -1, 0],
                           [0, -1, 2, -1],
                           [-1, 0, -1, 2]])
    assert np.array_equal(tm.H, expected_H)
    assert np.array_equal(tm.L_F, tm.D_F @ tm.D_F.T)
    assert np.all(tm.L_F.sum(axis=1) == 0)
    assert tm.D_F.shape == (4, 4)

    # the symmetric block of H has characteristic polynomial x^3 - 7x^2 + 12x - 2
    roots = np.roots([1.0, -7.0, 12.0, -2.0])
    assert min_eig_sym(tm.H) == pytest.approx(float(np.min(roots.real)), abs=1e-12)
    assert min_eig_sym(tm.H) == pytest.approx(0.1864, abs=1e-4)


def test_incidence_orientation(case1_graph):
    tm = matrices(case1_graph)
    for k, (i, j) in enumerate(tm.edges):
        assert i < j
        assert tm.D_F[i - 1, k] == 1 and tm.D_F[j - 1, k] == -1
        assert np.count_nonzero(tm.D_F[:, k]) == 2


def test_sensing_radius_is_strict():
    g = build_graph((0.0, 0.0, 0.0), [(200.0, 0.0, 0.0), (0.0, 199.999, 0.0)], 200.0)
    assert g.leader_adj == (False, True)
    assert g.follower_edges == frozenset()


def test_single_follower_has_no_follower_edges():
    g = build_graph((0.0, 0.0), [(10.0, 0.0)], 50.0)
    tm = matrices(g)
    assert g.n == 1
    assert tm.D_F.shape == (1, 0)
    assert np.array_equal(tm.H, np.array([[1]]))


def test_leader_reachability(case1_graph):
    assert leader_reaches_all(case1_graph)
    stranded = build_graph((0.0, 0.0, 0.0), [(50.0, 0.0, 0.0), (900.0, 0.0, 0.0)], 200.0)
    assert not leader_reaches_all(stranded)
    assert min_eig_sym(matrices(stranded).H) == pytest.approx(0.0, abs=1e-12)


def test_min_eig_sym_closed_form():
    assert min_eig_sym([[2.0, -1.0], [-1.0, 1.0]]) == pytest.approx((3 - math.sqrt(5)) / 2, abs=1e-12)


@pytest.mark.parametrize("matrix", [
    [[1.0, 2.0], [0.0, 1.0]],
    [[1.0, 2.0, 3.0]],
    np.zeros((0, 0)),
])
def test_min_eig_sym_rejects_bad_input(matrix):
    with pytest.raises(ContractViolation):
        min_eig_sym(matrix)


def test_build_graph_rejects_bad_input():
    with pytest.raises(ConfigurationError):
        build_graph((0.0, 0.0, 0.0), [(1.0, 2.0)], 200.0)
    with pytest.raises(ConfigurationError):
        build_graph((0.0, 0.0, 0.0), [(1.0, 2.0, 3.0)], 0.0)


def test_subgraph_ordering(case1_graph):
    smaller = remove_edges(case1_graph, [(1, 2), (LEADER, 1)])
    assert is_subgraph(smaller, case1_graph)
    assert not is_subgraph(case1_graph, smaller)
    difference = matrices(case1_graph).H - matrices(smaller).H
    assert min_eig_sym(difference) >= -1e-10


def test_permutation_consistency(case1_graph):
    perm = [3, 1, 4, 2]
    P = np.zeros((4, 4), dtype=np.int64)
    for old, new in enumerate(perm):
        P[new - 1, old] = 1
    permuted = permute(case1_graph, perm)
    assert np.array_equal(P @ matrices(case1_graph).H @ P.T, matrices(permuted).H)
    with pytest.raises(ConfigurationError):
        permute(case1_graph, [1, 1, 2, 3])


def test_edge_changes_and_hash(case1_graph):
    smaller = remove_edges(case1_graph, [(2, 3)])
    added, removed = edge_changes(smaller, case1_graph)
    assert added == {(2, 3)} and removed == set()
    assert smaller.edge_hash() != case1_graph.edge_hash()
    again = build_graph(CASE1_LEADER, CASE1_FOLLOWERS, 200.0)
    assert again.edge_hash() == case1_graph.edge_hash()


def test_random_reachable_graphs_are_positive_definite():
    from engine.verification import random_tree_positions

    rng = np.random.default_rng(5)
    for _ in range(50):
        positions = random_tree_positions(rng, int(rng.integers(1, 8)), 200.0)
        g = build_graph(positions[0], positions[1:], 200.0)
        assert leader_reaches_all(g)
        assert min_eig_sym(matrices(g).H) > 1e-10
