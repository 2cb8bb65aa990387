from itertools import combinations

import numpy as np
import pytest

from hacest.hac import HacTree, tau_ordering_violations
from hacest.structure import estimate_structure, linkage_similarity

# pairwise taus consistent with every similarity printed for the worked
# five-variable example (loops k = 1..4)
WORKED_TAUS = np.array([
    [1.000, 0.527, 0.215, 0.210, 0.210],
    [0.527, 1.000, 0.214, 0.212, 0.212],
    [0.215, 0.214, 1.000, 0.406, 0.406],
    [0.210, 0.212, 0.406, 1.000, 0.685],
    [0.210, 0.212, 0.406, 0.685, 1.000],
])


def naive_structure(T):
    """Direct re-averaging over leaf sets at every step; ties to the smallest id pair."""
    d = len(T)
    leaves = {i: [i] for i in range(1, d + 1)}
    active = list(range(1, d + 1))
    joins, taus = [], []
    for k in range(1, d):
        best = None
        for a, b in combinations(sorted(active), 2):
            s = np.mean([T[i - 1, j - 1] for i in leaves[a] for j in leaves[b]])
            if best is None or s > best[0] + 1e-12:
                best = (s, a, b)
        s, a, b = best
        leaves[d + k] = leaves[a] + leaves[b]
        active = [x for x in active if x not in (a, b)] + [d + k]
        joins.append((a, b))
        taus.append(s)
    return joins, taus


def random_tau_matrix(rng, d):
    A = rng.uniform(-0.2, 0.9, (d, d))
    T = (A + A.T) / 2
    np.fill_diagonal(T, 1.0)
    return T


def test_worked_example():
    est = estimate_structure(WORKED_TAUS)
    assert est.tree.edges() == {frozenset(e) for e in
                                [(4, 6), (5, 6), (1, 7), (2, 7), (3, 8), (6, 8), (7, 9), (8, 9)]}
    assert [round(est.fork_taus[v], 3) for v in est.tree.forks] == [0.685, 0.527, 0.406, 0.212]
    assert linkage_similarity(WORKED_TAUS, [1, 2], [3, 4, 5]) == pytest.approx(0.212, abs=5e-4)


def test_three_leaf_example():
    T = np.array([[1, 0.8, 0.2], [0.8, 1, 0.2], [0.2, 0.2, 1]])
    est = estimate_structure(T)
    assert est.tree.children == {4: (1, 2), 5: (3, 4)}
    assert est.fork_taus == {4: pytest.approx(0.8), 5: pytest.approx(0.2)}


def test_two_leaves():
    est = estimate_structure(np.array([[1, 0.3], [0.3, 1]]))
    assert est.tree.children == {3: (1, 2)}
    assert est.fork_taus[3] == pytest.approx(0.3)


def test_linkage_similarity_singletons_and_weights():
    rng = np.random.default_rng(0)
    T = random_tau_matrix(rng, 6)
    assert linkage_similarity(T, [2], [5]) == T[1, 4]
    s, t, r = [1, 2], [3], [4, 5, 6]
    combined = linkage_similarity(T, s + t, r)
    weighted = (2 * linkage_similarity(T, s, r) + 1 * linkage_similarity(T, t, r)) / 3
    assert combined == pytest.approx(weighted, abs=1e-15)


def test_incremental_update_agrees_with_direct_averaging():
    rng = np.random.default_rng(1)
    for _ in range(200):
        d = int(rng.integers(2, 12))
        T = random_tau_matrix(rng, d)
        est = estimate_structure(T)
        joins, taus = naive_structure(T)
        assert [est.tree.children[v] for v in est.tree.forks] == joins
        assert np.allclose([est.fork_taus[v] for v in est.tree.forks], taus, rtol=0, atol=1e-13)


def test_monotone_dendrogram_on_random_matrices():
    rng = np.random.default_rng(2)
    for _ in range(300):
        T = random_tau_matrix(rng, int(rng.integers(3, 11)))
        est = estimate_structure(T)
        assert tau_ordering_violations(est.tree, est.fork_taus) == []


def test_join_order_invariant_under_shift():
    rng = np.random.default_rng(3)
    for _ in range(50):
        T = random_tau_matrix(rng, 7)
        shifted = T + 0.05
        np.fill_diagonal(shifted, 1.0)
        assert estimate_structure(T).tree == estimate_structure(shifted).tree


def test_ties_go_to_smallest_pair():
    T = np.full((4, 4), 0.5)
    np.fill_diagonal(T, 1.0)
    est = estimate_structure(T)
    assert est.tree.children[5] == (1, 2)
    assert isinstance(est.tree, HacTree) and est.tree.is_binary
