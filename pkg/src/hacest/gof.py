"""Goodness-of-fit statistics for bivariate Archimedean copulas and HACs.

Three Cramér-von Mises type statistics are provided: ``E`` compares the
empirical copula with the model copula, ``K`` the empirical and model
Kendall distributions, and ``R`` the Rosenblatt-transformed sample with
the independence copula.  Pair statistics are combined over blocks of
column pairs by ``max`` or ``avg``.
"""

from __future__ import annotations

from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .generators import Generator, biv_ac_cdf, log_abs_dpsi_of_log, log_psi_inv
from .hac import HacTree, evaluate

KINDS = ("E", "K", "R")
AGGREGATIONS = ("max", "avg")

_CHUNK = 2_000_000


def _dominance_counts(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """For each query row, the number of sample rows that are <= it componentwise."""
    if points.shape[1] == 2:
        return _dominance_counts_2d(points, queries)
    return _dominance_counts_brute(points, queries)


def _dominance_counts_2d(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Bivariate dominance counts by a sweep over x with a Fenwick tree over y ranks."""
    ys = np.unique(points[:, 1])
    m = len(ys)
    p_rank = (np.searchsorted(ys, points[:, 1]) + 1).tolist()
    q_rank = np.searchsorted(ys, queries[:, 1], side="right").tolist()
    p_order = np.argsort(points[:, 0], kind="stable")
    px = points[p_order, 0].tolist()
    p_rank = [p_rank[i] for i in p_order]
    qx = queries[:, 0].tolist()
    fenwick = [0] * (m + 1)
    out = [0] * len(queries)
    n = len(px)
    j = 0
    for qi in np.argsort(queries[:, 0], kind="stable").tolist():
        x = qx[qi]
        while j < n and px[j] <= x:
            r = p_rank[j]
            while r <= m:
                fenwick[r] += 1
                r += r & -r
            j += 1
        r = q_rank[qi]
        c = 0
        while r > 0:
            c += fenwick[r]
            r -= r & -r
        out[qi] = c
    return np.asarray(out, dtype=np.int64)


def _dominance_counts_brute(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    n = len(points)
    step = max(1, _CHUNK // max(n, 1))
    out = np.empty(len(queries), dtype=np.int64)
    for start in range(0, len(queries), step):
        q = queries[start:start + step]
        le = np.all(points[None, :, :] <= q[:, None, :], axis=2)
        out[start:start + step] = le.sum(axis=1)
    return out


def empirical_copula(U, points) -> np.ndarray | float:
    """``C_n(p) = (1/n) #{i : U_i <= p}`` at one point or at each row of ``points``."""
    U = np.asarray(U, dtype=float)
    P = np.asarray(points, dtype=float)
    single = P.ndim == 1
    P = np.atleast_2d(P)
    r = _dominance_counts(U, P) / len(U)
    return float(r[0]) if single else r


def _model_cdf(model, U: np.ndarray) -> np.ndarray:
    if isinstance(model, Generator):
        if U.shape[1] != 2:
            raise ValueError("a generator describes a bivariate model; data must have 2 columns")
        return np.asarray(biv_ac_cdf(model, U[:, 0], U[:, 1]))
    if isinstance(model, HacTree):
        return np.asarray(evaluate(model, U))
    raise TypeError(f"unsupported model type {type(model).__name__}")


def sn_e(U, model) -> float:
    """``sum_i (C_n(U_i) - C(U_i))^2`` over the sample points."""
    U = np.asarray(U, dtype=float)
    emp = _dominance_counts(U, U) / len(U)
    return float(np.sum((emp - _model_cdf(model, U)) ** 2))


def kendall_dist_2ac(gen: Generator, t):
    """Kendall distribution ``K(t) = t - psi_inv(t) / (psi_inv)'(t)`` of a bivariate AC."""
    t_arr = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        ell = np.asarray(log_psi_inv(gen, t_arr))
        corr = np.exp(ell + log_abs_dpsi_of_log(gen, ell))
        r = np.where(t_arr >= 1, 1.0, np.where(t_arr <= 0, 0.0, t_arr + corr))
    r = np.clip(r, 0.0, 1.0)
    return float(r) if np.ndim(t) == 0 else r


def _sn_k_from_counts(counts: np.ndarray, kgrid: np.ndarray) -> float:
    """Statistic from integer dominance counts and ``K(j/n)`` for ``j = 0..n``."""
    n = len(counts)
    hist = np.bincount(counts, minlength=n + 1)
    Kn = np.cumsum(hist)[1:n] / n  # K_n(j/n), j = 1..n-1
    dK = kgrid[2:] - kgrid[1:-1]
    dK2 = kgrid[2:] ** 2 - kgrid[1:-1] ** 2
    return float(n / 3 + n * np.sum(Kn**2 * dK) - n * np.sum(Kn * dK2))


def kendall_grid(gen: Generator, n: int) -> np.ndarray:
    return np.asarray(kendall_dist_2ac(gen, np.arange(n + 1) / n))


def sn_k(u, v, gen: Generator) -> float:
    """Kendall-distribution statistic with pseudo-values ``V_i = C_n(U_i)``."""
    X = np.column_stack([u, v]).astype(float)
    counts = _dominance_counts(X, X)
    return _sn_k_from_counts(counts, kendall_grid(gen, len(X)))


def rosenblatt_2ac(u, v, gen: Generator) -> tuple[np.ndarray, np.ndarray]:
    """``(u, C(v | u))`` with ``C(v | u) = psi'(psi_inv(u) + psi_inv(v)) / psi'(psi_inv(u))``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        la = np.asarray(log_psi_inv(gen, u))
        lb = np.asarray(log_psi_inv(gen, v))
        e2 = np.exp(log_abs_dpsi_of_log(gen, np.logaddexp(la, lb)) - log_abs_dpsi_of_log(gen, la))
    e2 = np.where(np.isnan(e2), v, e2)
    return u.copy(), np.clip(e2, 0.0, 1.0)


def sn_r(u, v, gen: Generator) -> float:
    """Distance of the Rosenblatt-transformed sample to the independence copula."""
    e1, e2 = rosenblatt_2ac(u, v, gen)
    E = np.column_stack([e1, e2])
    Dn = _dominance_counts(E, E) / len(E)
    return float(np.sum((Dn - e1 * e2) ** 2))


def pair_statistic(kind: str, u, v, gen: Generator) -> float:
    if kind == "E":
        return sn_e(np.column_stack([u, v]), gen)
    if kind == "K":
        return sn_k(u, v, gen)
    if kind == "R":
        return sn_r(u, v, gen)
    raise ValueError(f"unknown statistic {kind!r}; expected one of {KINDS}")


def aggregate(values: Sequence[float], g: str) -> float:
    if g == "max":
        return float(max(values))
    if g == "avg":
        return float(np.mean(values))
    raise ValueError(f"unknown aggregation {g!r}; expected one of {AGGREGATIONS}")


class PairCache:
    """Caches generator-free parts of pair statistics for repeated candidate checks."""

    def __init__(self, U):
        self.U = np.asarray(U, dtype=float)
        self._counts: dict[tuple[int, int], np.ndarray] = {}
        self._kgrid: dict[Generator, np.ndarray] = {}

    def counts(self, i: int, j: int) -> np.ndarray:
        key = (i, j)
        if key not in self._counts:
            X = self.U[:, [i - 1, j - 1]]
            self._counts[key] = _dominance_counts(X, X)
        return self._counts[key]

    def statistic(self, kind: str, i: int, j: int, gen: Generator) -> float:
        u = self.U[:, i - 1]
        v = self.U[:, j - 1]
        n = len(u)
        if kind == "E":
            emp = self.counts(i, j) / n
            return float(np.sum((emp - np.asarray(biv_ac_cdf(gen, u, v))) ** 2))
        if kind == "K":
            if gen not in self._kgrid:
                self._kgrid[gen] = kendall_grid(gen, n)
            return _sn_k_from_counts(self.counts(i, j), self._kgrid[gen])
        return pair_statistic(kind, u, v, gen)


def block_pairs(groups: Sequence[Iterable[int]]) -> list[tuple[int, int]]:
    """Row-major list of leaf pairs across every pair of groups."""
    groups = [sorted(g) for g in groups]
    pairs = []
    for a in range(len(groups)):
        for b in range(a + 1, len(groups)):
            pairs.extend(product(groups[a], groups[b]))
    return pairs


def aggregate_gof(U, I: Iterable[int], J: Iterable[int], gen: Generator,
                  kind: str = "R", g: str = "max", cache: PairCache | None = None) -> float:
    """Pair statistic over all column pairs in ``I x J`` (1-based leaves), combined by ``g``."""
    return grouped_gof(U, [I, J], gen, kind, g, cache)


def grouped_gof(U, groups: Sequence[Iterable[int]], gen: Generator, kind: str = "R",
                g: str = "max", cache: PairCache | None = None) -> float:
    if kind not in KINDS:
        raise ValueError(f"unknown statistic {kind!r}; expected one of {KINDS}")
    cache = cache if cache is not None else PairCache(U)
    pairs = block_pairs(groups)
    vals = [cache.statistic(kind, i, j, gen) for i, j in pairs]
    if len(vals) == 1:
        return vals[0]
    return aggregate(vals, g)
