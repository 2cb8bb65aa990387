"""Pseudo-observations and sample Kendall's tau matrices."""

from __future__ import annotations

import numpy as np
from scipy import stats

from .errors import DataError


def as_matrix(data) -> np.ndarray:
    U = np.asarray(data, dtype=float)
    if U.ndim != 2:
        raise DataError(f"expected an n x d matrix, got shape {U.shape}")
    if U.shape[0] < 2 or U.shape[1] < 2:
        raise DataError(f"need at least 2 rows and 2 columns, got shape {U.shape}")
    if not np.all(np.isfinite(U)):
        raise DataError("data contains non-finite values")
    return U


def pseudo_observations(data) -> np.ndarray:
    """Column-wise ranks divided by ``n + 1``; ties get average ranks."""
    X = as_matrix(data)
    n = X.shape[0]
    return stats.rankdata(X, axis=0, method="average") / (n + 1)


def _concordant_pairs_bruteforce(x: np.ndarray, y: np.ndarray) -> int:
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    return int(np.count_nonzero(np.triu(dx * dy > 0, k=1)))


def sample_tau_bruteforce(x, y) -> float:
    """O(n^2) reference: ``4 P / (n (n - 1)) - 1`` with ``P`` strictly concordant pairs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    return 4 * _concordant_pairs_bruteforce(x, y) / (n * (n - 1)) - 1


def _tie_pairs(a: np.ndarray) -> int:
    _, counts = np.unique(a, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def _joint_tie_pairs(x: np.ndarray, y: np.ndarray) -> int:
    _, counts = np.unique(np.column_stack([x, y]), axis=0, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def concordant_pairs(x, y) -> int:
    """Number of index pairs ``k < l`` with ``(x_k - x_l)(y_k - y_l) > 0``.

    Uses the O(n log n) discordance count behind scipy's tau-b and recovers
    the strict concordance count from the tie corrections.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 2:
        return 0
    tot = n * (n - 1) // 2
    xtie = _tie_pairs(x)
    ytie = _tie_pairs(y)
    xytie = _joint_tie_pairs(x, y)
    untied = tot - xtie - ytie + xytie  # pairs tied in neither coordinate
    if xtie == tot or ytie == tot:
        return 0
    tau_b = stats.kendalltau(x, y).statistic
    # tau_b = (con - dis) / sqrt((tot - xtie) (tot - ytie)), con + dis = untied
    diff = tau_b * np.sqrt(float(tot - xtie) * float(tot - ytie))
    return int(round((untied + diff) / 2))


def sample_tau(x, y) -> float:
    """Sample Kendall's tau with the strict-concordance indicator."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("columns must be 1-D and of equal length")
    n = len(x)
    if n < 2:
        raise DataError("need at least two observations")
    return 4 * concordant_pairs(x, y) / (n * (n - 1)) - 1


def tau_matrix(data) -> np.ndarray:
    """Symmetric matrix of pairwise sample taus with unit diagonal."""
    U = as_matrix(data)
    d = U.shape[1]
    T = np.eye(d)
    for i in range(d):
        for j in range(i + 1, d):
            T[i, j] = T[j, i] = sample_tau(U[:, i], U[:, j])
    return T
