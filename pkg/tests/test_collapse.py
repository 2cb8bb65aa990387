import math

import numpy as np
import pytest

from conftest import random_tree
from hacest.collapse import (
    closest_pair,
    collapse_once,
    collapse_sequence,
    cross_child_average,
    estimate_fork_count,
    parse_policy,
    select_collapsed,
)
from hacest.errors import DomainError
from hacest.estimate import EstimatorConfig, estimate
from hacest.generators import Generator, tau_of_theta
from hacest.hac import HacTree, check_snc, from_nested, star
from hacest.kendall import pseudo_observations, tau_matrix
from hacest.sample import sample_hac


def clusters(tree):
    return {v: frozenset(tree.leaves(v)) for v in tree.forks}


def random_tau_matrix(rng, d):
    A = rng.uniform(0.0, 0.8, (d, d))
    T = (A + A.T) / 2
    np.fill_diagonal(T, 1.0)
    return T


def oracle_step(tree, fork_taus, T, reest):
    """Recompute one collapsing step from leaf clusters and youngest common ancestors."""
    cl = clusters(tree)
    tau_by_cluster = {cl[v]: fork_taus[v] for v in tree.forks}
    pairs = [(cl[v], cl[w]) for v in tree.forks for w in tree.child_forks(v)]
    dist = [abs(tau_by_cluster[a] - tau_by_cluster[b]) for a, b in pairs]
    delta = min(dist)
    return delta, tau_by_cluster, pairs, dist


def test_sequence_matches_cluster_oracle():
    rng = np.random.default_rng(0)
    for _ in range(60):
        d = int(rng.integers(3, 10))
        tree = random_tree(rng, d, labelled=False, binary=bool(rng.random() < 0.5))
        if tree.k < 2:
            continue
        T = random_tau_matrix(rng, d)
        fork_taus = {v: float(rng.random()) for v in tree.forks}
        for reest in ("KTauAvg", "TauMin"):
            trace = collapse_sequence(tree, T, reest, fork_taus=fork_taus)
            assert len(trace) == tree.k
            assert trace[0].delta == 0.0 and trace[-1].k == 1
            for prev, nxt in zip(trace.steps, trace.steps[1:]):
                delta, tau_by_cluster, pairs, dist = oracle_step(prev.tree, prev.fork_taus, T, reest)
                assert nxt.delta == delta
                new_cl = set(clusters(nxt.tree).values())
                removed = set(clusters(prev.tree).values()) - new_cl
                assert len(removed) == 1 and new_cl < set(clusters(prev.tree).values())
                (gone,) = removed
                parent = next(a for (a, b), x in zip(pairs, dist) if b == gone and x == delta)
                merged = next(v for v in nxt.tree.forks if frozenset(nxt.tree.leaves(v)) == parent)
                if reest == "KTauAvg":
                    vals = [T[i - 1, j - 1] for i in range(1, d + 1) for j in range(i + 1, d + 1)
                            if nxt.tree.yca(i, j) == merged]
                    expected = sum(vals) / len(vals)
                else:
                    expected = min(tau_by_cluster[parent], tau_by_cluster[gone])
                assert nxt.fork_taus[merged] == pytest.approx(expected, abs=1e-14)
                for v in nxt.tree.forks:
                    if v != merged:
                        assert nxt.fork_taus[v] == tau_by_cluster[frozenset(nxt.tree.leaves(v))]


def test_closest_pair_ties_lowest_ids():
    tree = HacTree(4, {5: (1, 2), 6: (3, 4), 7: (5, 6)})
    assert closest_pair(tree, {5: 0.5, 6: 0.5, 7: 0.3})[:2] == (7, 5)


def test_single_fork_cannot_collapse():
    with pytest.raises(DomainError):
        collapse_once(star(3, Generator("C", 1.0)), reest="TauMin")


def test_cross_child_average():
    T = np.array([[1, .1, .2], [.1, 1, .3], [.2, .3, 1]])
    assert cross_child_average(T, [(1,), (2, 3)]) == pytest.approx(0.15)
    assert cross_child_average(T, [(1,), (2,), (3,)]) == pytest.approx(0.2)


@pytest.mark.parametrize("x", [0.01, 0.3, 1.0])
def test_fork_count_three_leaves(x):
    assert estimate_fork_count([0.0, x]) == 2


@pytest.mark.parametrize("d", [3, 5, 10, 20])
def test_fork_count_linear_distances(d):
    assert estimate_fork_count([0.07 * i for i in range(d - 1)]) == d - 1


def test_fork_count_first_big_jump():
    assert estimate_fork_count([0.0, 0.01, 0.02, 0.5]) == 2
    assert estimate_fork_count([0.0, 0.0, 0.0, 0.0, 0.9]) == 2
    with pytest.raises(DomainError):
        estimate_fork_count([0.0])
    with pytest.raises(DomainError):
        estimate_fork_count([0.0, 1.0], d=4)


def test_policies_and_csv():
    rng = np.random.default_rng(1)
    tree = random_tree(rng, 6, labelled=False, binary=True)
    T = random_tau_matrix(rng, 6)
    trace = collapse_sequence(tree, T, "KTauAvg", fork_taus={v: 0.1 * (v - 6) for v in tree.forks})
    assert select_collapsed(trace, "binary") is trace[0]
    assert select_collapsed(trace, "ac").k == 1
    assert select_collapsed(trace, "forks=3").k == 3
    assert select_collapsed(trace, "auto").k == estimate_fork_count(trace)
    with pytest.raises(DomainError):
        select_collapsed(trace, "forks=6")
    with pytest.raises(ValueError):
        parse_policy("forks=x")
    lines = trace.to_csv().splitlines()
    assert lines[0] == "forks_remaining,delta"
    assert [int(r.split(",")[0]) for r in lines[1:]] == [5, 4, 3, 2, 1]
    assert [float(r.split(",")[1]) for r in lines[1:]] == trace.deltas


def test_labelled_collapse_keeps_nesting_condition():
    rng = np.random.default_rng(2)
    for fam in ("C", "12", "19", "20", "A"):
        for _ in range(10):
            tree = random_tree(rng, int(rng.integers(3, 8)), family=fam, binary=True)
            T = random_tau_matrix(rng, tree.d)
            for reest in ("KTauAvg", "TauMin"):
                for step in collapse_sequence(tree, T, reest):
                    assert check_snc(step.tree)[0]
                    assert {step.tree.label(v).family for v in step.tree.forks} == {fam}
                    for v in step.tree.forks:
                        g = step.tree.label(v)
                        assert step.fork_taus[v] == pytest.approx(tau_of_theta(g.family, g.theta))


def test_labelled_collapse_records_trims():
    # the merged fork keeps child (3, 4); a cross-child average above its tau is clamped down
    tree = from_nested(4, (Generator("C", 1.0), [1, (Generator("C", 1.05), [2, (Generator("C", 3.0), [3, 4])])]))
    T = np.full((4, 4), 0.9)
    T[2, 3] = T[3, 2] = 0.6
    np.fill_diagonal(T, 1.0)
    step = collapse_once(tree, T, "KTauAvg")
    assert step.k == 2
    (event,) = step.trim_events
    assert event.raw == pytest.approx(2 * 0.9 / (1 - 0.9))
    assert event.trimmed == 3.0
    assert step.tree.label(step.tree.root) == Generator("C", 3.0)
    assert check_snc(step.tree)[0]


def test_pre_and_post_agree_for_homogeneous_clayton():
    model = from_nested(6, (Generator("C", 0.5), [
        (Generator("C", 2.0), [1, 2, 3]), (Generator("C", 3.0), [4, 5, 6])]))
    cfg = EstimatorConfig(("C",))
    compared = 0
    for seed in range(8):
        U = pseudo_observations(sample_hac(model, 400, seed))
        pre = estimate(U, cfg, "pre", "KTauAvg", "auto")
        post = estimate(U, cfg, "post", "KTauAvg", "auto")
        if pre.trim_events or post.trim_events:
            continue
        compared += 1
        assert pre.tree.skeleton() == post.tree.skeleton()
        for v in pre.tree.forks:
            assert pre.tree.label(v).theta == pytest.approx(post.tree.label(v).theta, rel=1e-10)
        assert pre.trace.deltas == pytest.approx(post.trace.deltas, abs=1e-12)
    assert compared >= 4
