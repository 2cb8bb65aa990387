"""Agglomerative structure estimation with average-tau linkage."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .hac import HacTree


@dataclass(frozen=True)
class StructureEstimate:
    tree: HacTree
    fork_taus: dict[int, float]

    @property
    def d(self) -> int:
        return self.tree.d


def linkage_similarity(taus, leaves_a, leaves_b) -> float:
    """Mean of ``taus[i, j]`` over ``i`` in ``leaves_a`` and ``j`` in ``leaves_b`` (1-based)."""
    T = np.asarray(taus, dtype=float)
    vals = [T[i - 1, j - 1] for i in leaves_a for j in leaves_b]
    if not vals:
        raise ValueError("leaf sets must be non-empty")
    return math.fsum(vals) / len(vals)


def estimate_structure(taus) -> StructureEstimate:
    """Binary structure and fork taus from a Kendall's tau matrix.

    At every step the two active nodes with the largest average pairwise
    tau between their leaf sets are joined; ties go to the smallest id pair.
    Similarities of a merged node are updated from its two parts weighted by
    their leaf counts.
    """
    T = np.asarray(taus, dtype=float)
    d = T.shape[0]
    if T.shape != (d, d) or d < 2:
        raise ValueError("expected a square tau matrix of size >= 2")
    size = {i: 1 for i in range(1, d + 1)}
    sim: dict[tuple[int, int], float] = {}
    for i, j in combinations(range(1, d + 1), 2):
        sim[(i, j)] = float(T[i - 1, j - 1])
    active = list(range(1, d + 1))
    children: dict[int, tuple[int, int]] = {}
    fork_taus: dict[int, float] = {}
    for k in range(1, d):
        best = None
        for pair in combinations(active, 2):
            s = sim[pair]
            if best is None or s > best[0]:
                best = (s, pair)
        s, (i, j) = best
        m = d + k
        children[m] = (i, j)
        fork_taus[m] = s
        size[m] = size[i] + size[j]
        active.remove(i)
        active.remove(j)
        for r in active:
            s_ir = sim[(min(i, r), max(i, r))]
            s_jr = sim[(min(j, r), max(j, r))]
            sim[(r, m)] = (size[i] * s_ir + size[j] * s_jr) / size[m]
        active.append(m)
    return StructureEstimate(HacTree(d, children), fork_taus)
