"""Threshold-free collapsing of binary HACs into non-binary ones.

A binary tree is collapsed one parent-child fork pair at a time, always
merging the pair whose Kendall's taus are closest.  The merged fork keeps
the parent's family, and its parameter is re-estimated either from all
cross-child sample taus (``KTauAvg``) or as the smaller of the two taus
(``TauMin``).  Trees without generator labels are collapsed on their fork
taus alone, which is what the pre-collapsing pipeline needs.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping

import numpy as np

from .errors import DomainError
from .generators import Generator, PARAM_RANGE, tau_of_theta, trimmed_theta_of_tau
from .hac import HacTree, renumbered
from .nesting import (
    NestingSet,
    TrimEvent,
    child_interval,
    intersect_all,
    n2,
    parent_interval,
    trim,
)

REESTIMATORS = ("KTauAvg", "TauMin")


@dataclass(frozen=True)
class CollapseStep:
    tree: HacTree
    delta: float
    fork_taus: dict[int, float]
    n1_sets: dict[int, NestingSet] | None = None
    trim_events: tuple[TrimEvent, ...] = ()

    @property
    def k(self) -> int:
        return self.tree.k


@dataclass(frozen=True)
class CollapseTrace:
    """Trees ``C_1, ..., C_{d-1}`` with ``d-1, ..., 1`` forks and their minimal distances."""
    steps: tuple[CollapseStep, ...]
    d: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "d", self.steps[0].tree.d)

    def __len__(self):
        return len(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def __iter__(self):
        return iter(self.steps)

    @property
    def deltas(self) -> list[float]:
        return [s.delta for s in self.steps]

    def with_forks(self, k: int) -> CollapseStep:
        for s in self.steps:
            if s.k == k:
                return s
        raise DomainError(f"no tree with {k} forks in the trace")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["forks_remaining", "delta"])
        for s in self.steps:
            w.writerow([s.k, repr(s.delta)])
        return buf.getvalue()


def cross_child_average(taus, groups) -> float:
    """Mean sample tau over all leaf pairs drawn from two different groups."""
    T = np.asarray(taus, dtype=float)
    vals = [T[i - 1, j - 1]
            for ga, gb in combinations(groups, 2) for i in ga for j in gb]
    return math.fsum(vals) / len(vals)


def _fork_taus_of(tree: HacTree) -> dict[int, float]:
    return {v: tau_of_theta(tree.label(v).family, tree.label(v).theta) for v in tree.forks}


def closest_pair(tree: HacTree, fork_taus: Mapping[int, float]) -> tuple[int, int, float]:
    """Parent-child fork pair with the smallest tau distance.

    Ties go to the lowest parent id, then the lowest child id.
    """
    best = None
    for v in tree.forks:
        for w in sorted(tree.child_forks(v)):
            dist = abs(fork_taus[v] - fork_taus[w])
            if best is None or dist < best[2]:
                best = (v, w, dist)
    if best is None:
        raise DomainError("a tree with a single fork cannot be collapsed")
    return best


def _admissible_range(tree, v, family, merged_children, parent_gen, n1_sets, n0):
    r = PARAM_RANGE[family]
    for c in merged_children:
        if c > tree.d:
            r = r.intersect(parent_interval(family, tree.label(c)))
    if parent_gen is not None:
        r = r.intersect(child_interval(parent_gen, family))
    if n1_sets is not None:
        parts = [n1_sets[c] if c > tree.d else n0 for c in merged_children]
        admissible = intersect_all(parts).get(family)
        if admissible is None:
            raise DomainError(f"family {family} is not admissible for merged fork {v}")
        r = r.intersect(admissible)
    return r


def collapse_once(tree: HacTree, taus=None, reest: str = "KTauAvg",
                  fork_taus: Mapping[int, float] | None = None,
                  n1_sets: Mapping[int, NestingSet] | None = None,
                  n0: NestingSet | None = None, case: str | None = None) -> CollapseStep:
    """Merge the closest parent-child fork pair.

    For a labelled tree the merged fork keeps the parent family; its new
    parameter is clamped so that the sufficient nesting condition holds with
    the merged fork's parent and children and, when ``n1_sets`` (the
    admissible-parent sets of every fork) are given, so that it stays inside
    the intersection of its children's sets.  ``n0`` is the set used for
    leaf children and ``case`` selects the parent-admissibility mapping.
    For an unlabelled tree ``fork_taus`` is required and only taus change.
    """
    if reest not in REESTIMATORS:
        raise ValueError(f"unknown re-estimator {reest!r}; expected one of {REESTIMATORS}")
    if tree.k < 2:
        raise DomainError("a tree with a single fork cannot be collapsed")
    labelled = tree.labels is not None
    if labelled:
        fork_taus = _fork_taus_of(tree)
    elif fork_taus is None:
        raise DomainError("an unlabelled tree needs fork taus")
    if n1_sets is not None and (n0 is None or case is None):
        raise DomainError("n1_sets require n0 and case")
    if reest == "KTauAvg" and taus is None:
        raise DomainError("KTauAvg needs the sample tau matrix")

    v, w, delta = closest_pair(tree, fork_taus)
    merged = []
    for c in tree.children[v]:
        merged.extend(tree.children[w] if c == w else (c,))
    children = {u: cs for u, cs in tree.children.items() if u != w}
    children[v] = tuple(merged)

    if reest == "KTauAvg":
        new_tau = cross_child_average(taus, [tree.leaves(c) for c in merged])
    else:
        new_tau = min(fork_taus[v], fork_taus[w])

    new_taus = {u: t for u, t in fork_taus.items() if u != w}
    labels = None
    events = []
    new_n1 = None
    if labelled:
        fam = tree.label(v).family
        if reest == "TauMin" and new_tau == fork_taus[v]:
            raw, in_range = tree.label(v).theta, True
        else:
            raw, in_range = trimmed_theta_of_tau(fam, new_tau)
        p = tree.parent(v)
        r = _admissible_range(tree, v, fam, merged, None if p is None else tree.label(p),
                              n1_sets, n0)
        theta = trim(raw, r)
        if theta != raw or not in_range:
            events.append((v, fam, raw if in_range else math.nan, theta))
        labels = {u: g for u, g in tree.labels.items() if u != w}
        labels[v] = Generator(fam, theta)
        new_taus[v] = tau_of_theta(fam, theta)
        if n1_sets is not None:
            new_n1 = {u: s for u, s in n1_sets.items() if u != w}
            parts = [n1_sets[c] if c > tree.d else n0 for c in merged]
            new_n1[v] = intersect_all(parts) & n2(case, fam, theta)
    else:
        new_taus[v] = new_tau

    new_tree, mapping = renumbered(tree.d, children, labels)
    remap = {mapping[u]: t for u, t in new_taus.items()}
    n1_out = None if new_n1 is None else {mapping[u]: s for u, s in new_n1.items()}
    trims = tuple(TrimEvent(mapping[u], f, a, b) for u, f, a, b in events)
    return CollapseStep(new_tree, delta, remap, n1_out, trims)


def collapse_sequence(tree: HacTree, taus=None, reest: str = "KTauAvg",
                      fork_taus: Mapping[int, float] | None = None,
                      n1_sets: Mapping[int, NestingSet] | None = None,
                      n0: NestingSet | None = None, case: str | None = None) -> CollapseTrace:
    """Collapse repeatedly down to a single fork; the first step has ``delta = 0``."""
    if tree.labels is not None:
        fork_taus = _fork_taus_of(tree)
    elif fork_taus is None:
        raise DomainError("an unlabelled tree needs fork taus")
    steps = [CollapseStep(tree, 0.0, dict(fork_taus),
                          None if n1_sets is None else dict(n1_sets))]
    while steps[-1].tree.k > 1:
        last = steps[-1]
        steps.append(collapse_once(last.tree, taus, reest, last.fork_taus,
                                   last.n1_sets, n0, case))
    return CollapseTrace(steps)


def estimate_fork_count(trace, d: int | None = None) -> int:
    """Number of forks chosen by the first above-average jump in the distances.

    ``trace`` is a :class:`CollapseTrace` or the distance sequence
    ``(delta_1, ..., delta_{d-1})``.  Returns ``d - i`` for the lowest ``i``
    in ``1..d-2`` with ``delta_{i+1} - delta_i >= delta_{d-1} / (d - 1)``.
    """
    deltas = trace.deltas if isinstance(trace, CollapseTrace) else list(trace)
    d = len(deltas) + 1 if d is None else d
    if d < 3:
        raise DomainError("the fork-count heuristic needs at least three leaves")
    if len(deltas) != d - 1:
        raise DomainError(f"expected {d - 1} distances, got {len(deltas)}")
    avg_step = deltas[d - 2] / (d - 1)
    for i in range(1, d - 1):
        if deltas[i] - deltas[i - 1] >= avg_step:
            return d - i
    raise AssertionError("some step must reach the average")


def parse_policy(policy: str) -> tuple[str, int | None]:
    policy = str(policy).strip()
    if policy in ("auto", "binary", "ac"):
        return policy, None
    if policy.startswith("forks="):
        try:
            return "forks", int(policy.split("=", 1)[1])
        except ValueError:
            pass
    raise ValueError(f"unknown fork policy {policy!r}; expected auto, binary, ac or forks=K")


def select_collapsed(trace: CollapseTrace, policy: str = "auto") -> CollapseStep:
    """Pick one tree from a trace: ``auto``, ``binary``, ``ac`` or ``forks=K``."""
    kind, k = parse_policy(policy)
    if kind == "binary":
        return trace[0]
    if kind == "ac":
        return trace[-1]
    if kind == "auto":
        if trace.d < 3:
            return trace[0]
        return trace.with_forks(estimate_fork_count(trace))
    if not 1 <= k <= trace.d - 1:
        raise DomainError(f"forks={k} outside 1..{trace.d - 1}")
    return trace.with_forks(k)
