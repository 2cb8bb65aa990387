"""Sampling from Archimedean copulas and HACs.

Samples are built from frailties: a positive variable ``V`` whose Laplace
transform is the generator ``psi`` gives ``U_i = psi(E_i / V)`` with unit
exponentials ``E_i``.  For a nested fork the child frailty is drawn given
the parent one from the law with Laplace transform
``exp(-V0 * psi0_inv(psi1(t)))``.  All frailties are carried on the log
scale so that tiny values survive.

Randomness is drawn from one Philox stream per ``(seed, replicate, node)``,
so a node's draws do not depend on how other nodes are sampled.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, UnsupportedSampler
from .generators import Generator, psi_of_log
from .hac import HacTree, check_snc, evaluate, star

MAX_INVERSION_DIM = 6


def node_rng(seed: int, node: int, replicate: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replicate), int(node)))
    return np.random.Generator(np.random.Philox(ss))


# ----------------------------------------------------------- basic variates

def log_gamma_variates(rng, shape, scale=1.0) -> np.ndarray:
    """``log`` of Gamma(shape, scale) draws, accurate for tiny shapes."""
    shape = np.asarray(shape, dtype=float)
    out = np.empty(shape.shape)
    small = shape < 1
    big = ~small
    if np.any(big):
        out[big] = np.log(rng.gamma(shape[big]))
    if np.any(small):
        a = shape[small]
        # G(a) = G(a + 1) * U^(1/a)
        out[small] = np.log(rng.gamma(a + 1)) + np.log(rng.random(a.shape)) / a
    return out + np.log(scale)


def positive_stable(rng, alpha: float, size) -> np.ndarray:
    """Draws with Laplace transform ``exp(-t^alpha)``, ``0 < alpha <= 1``."""
    if alpha == 1:
        return np.ones(size)
    u = rng.uniform(0, np.pi, size)
    e = rng.exponential(1.0, size)
    a = np.sin(alpha * u) / np.sin(u) ** (1 / alpha)
    b = (np.sin((1 - alpha) * u) / e) ** ((1 - alpha) / alpha)
    return a * b


def tilted_stable(rng, alpha: float, time) -> np.ndarray:
    """Draws with Laplace transform ``exp(-time * ((1 + t)^alpha - 1))``.

    ``time`` may be an array.  The variate is a sum of ``ceil(time)`` pieces
    with time at most one each; every piece is a stable draw accepted with
    probability ``exp(-x)``.
    """
    time = np.asarray(time, dtype=float)
    if alpha == 1:
        return time.copy()
    flat = time.ravel()
    pieces = np.maximum(np.ceil(flat), 1).astype(np.int64)
    piece_time = np.repeat(flat / pieces, pieces)
    values = np.empty(piece_time.shape)
    todo = np.flatnonzero(piece_time > 0)
    values[piece_time <= 0] = 0.0
    while todo.size:
        s = piece_time[todo]
        x = s ** (1 / alpha) * positive_stable(rng, alpha, todo.size)
        ok = rng.random(todo.size) <= np.exp(-x)
        values[todo[ok]] = x[ok]
        todo = todo[~ok]
    starts = np.concatenate([[0], np.cumsum(pieces)[:-1]])
    return np.add.reduceat(values, starts).reshape(time.shape)


def log_tilted_stable(rng, alpha: float, log_time) -> np.ndarray:
    """``log`` of :func:`tilted_stable` draws for times given on the log scale.

    Times below ``exp(-700)`` would underflow; there the tilt is negligible
    and the draw is an untilted stable variate scaled by ``time^(1/alpha)``.
    """
    log_time = np.asarray(log_time, dtype=float)
    out = np.empty(log_time.shape)
    tiny = log_time < -700
    if np.any(~tiny):
        with np.errstate(divide="ignore"):
            out[~tiny] = np.log(tilted_stable(rng, alpha, np.exp(log_time[~tiny])))
    if np.any(tiny):
        s = positive_stable(rng, alpha, int(tiny.sum()))
        out[tiny] = log_time[tiny] / alpha + np.log(s)
    return out


# ----------------------------------------------------------- frailty laws

def log_frailty(rng, gen: Generator, n: int) -> np.ndarray:
    """``log V`` for ``n`` draws of the frailty whose Laplace transform is ``gen``."""
    f, th = gen.family, gen.theta
    if f == "A":
        return np.log(rng.geometric(1 - th, n).astype(float))
    if f == "C":
        return log_gamma_variates(rng, np.full(n, 1 / th))
    if f in ("12", "14"):
        alpha = 1 / th
        s = positive_stable(rng, alpha, n)
        w = rng.exponential(1.0, n) if f == "12" else rng.gamma(th, 1.0, n)
        return np.log(s) + np.log(w) / alpha
    if f == "19":
        w = rng.exponential(1.0, n)
        return log_gamma_variates(rng, w / th, math.exp(-th))
    if f == "20":
        g = np.exp(log_gamma_variates(rng, np.full(n, 1 / th)))
        return log_gamma_variates(rng, g, math.exp(-1))
    raise UnsupportedSampler(f"no frailty law for family {f}")


# parent-child family pairs with an exact conditional frailty law
EXACT_INNER = frozenset({
    ("A", "A"), ("A", "C"), ("A", "19"), ("A", "20"),
    ("C", "C"), ("C", "12"), ("C", "14"), ("C", "19"), ("C", "20"),
    ("12", "12"), ("19", "19"),
})


def log_inner_frailty(rng, parent: Generator, child: Generator, log_v0) -> np.ndarray:
    """``log V01`` given ``log V0`` for a child fork nested in a parent fork."""
    a0, t0 = parent.family, parent.theta
    a1, t1 = child.family, child.theta
    log_v0 = np.asarray(log_v0, dtype=float)
    v0 = np.exp(log_v0)
    n = log_v0.shape
    pair = (a0, a1)
    if pair == ("C", "C"):
        return log_tilted_stable(rng, t0 / t1, log_v0)
    if pair == ("A", "A"):
        p = (t1 - t0) / (1 - t0)
        m = np.rint(v0).astype(np.int64)
        if p == 0:
            return np.log(m.astype(float))
        return np.log((m + rng.negative_binomial(m, 1 - p)).astype(float))
    if a0 == "A" and a1 in ("C", "19", "20"):
        g = np.exp(log_gamma_variates(rng, v0)) * (1 - t0)
        if a1 == "C":
            return np.log(tilted_stable(rng, 1 / t1, g))
        if a1 == "19":
            return log_gamma_variates(rng, g / t1, math.exp(-t1))
        return log_gamma_variates(rng, tilted_stable(rng, 1 / t1, g), math.exp(-1))
    if a0 == "C" and a1 in ("12", "14"):
        alpha = t0 if a1 == "12" else t0 * t1
        log_t = log_tilted_stable(rng, alpha, log_v0)
        return t1 * log_t + np.log(positive_stable(rng, 1 / t1, n))
    if pair == ("C", "19"):
        return log_gamma_variates(rng, tilted_stable(rng, t0, v0) / t1, math.exp(-t1))
    if pair == ("C", "20"):
        return log_gamma_variates(rng, tilted_stable(rng, t0 / t1, v0), math.exp(-1))
    if pair == ("12", "12"):
        alpha = t0 / t1
        return log_v0 / alpha + np.log(positive_stable(rng, alpha, n))
    if pair == ("19", "19"):
        return -t1 + log_tilted_stable(rng, t0 / t1, log_v0 + t0)
    raise UnsupportedSampler(f"no conditional frailty law for parent {parent} and child {child}")


def has_exact_sampler(tree: HacTree) -> bool:
    return all((tree.label(v).family, tree.label(c).family) in EXACT_INNER
               for v in tree.forks for c in tree.child_forks(v))


# ----------------------------------------------------------- samplers

def sample_ac(gen: Generator, n: int, seed: int, d: int = 2, replicate: int = 0) -> np.ndarray:
    """``n`` draws from the ``d``-dimensional AC with generator ``gen``."""
    return sample_hac(star(d, gen), n, seed, replicate)


def sample_hac(tree: HacTree, n: int, seed: int, replicate: int = 0) -> np.ndarray:
    """``n`` draws from a HAC by nested frailties.

    Trees containing a parent-child family pair without an exact
    conditional law are sampled by :func:`conditional_inversion_sample`,
    which handles at most six leaves.
    """
    n = int(n)
    if n < 1:
        raise DomainError("sample size must be at least 1")
    ok, bad = check_snc(tree)
    if not ok:
        raise DomainError(f"tree violates the sufficient nesting condition at {bad}")
    if not has_exact_sampler(tree):
        return conditional_inversion_sample(tree, n, seed, replicate)
    with np.errstate(divide="ignore", under="ignore"):
        return _sample_frailties(tree, n, seed, replicate)


def _sample_frailties(tree: HacTree, n: int, seed: int, replicate: int) -> np.ndarray:
    log_v = {tree.root: log_frailty(node_rng(seed, tree.root, replicate), tree.label(tree.root), n)}
    U = np.empty((n, tree.d))
    for v in reversed(tree.forks):
        gen = tree.label(v)
        for c in tree.children[v]:
            rng = node_rng(seed, c, replicate)
            if c > tree.d:
                log_v[c] = log_inner_frailty(rng, gen, tree.label(c), log_v[v])
            else:
                e = rng.exponential(1.0, n)
                U[:, c - 1] = psi_of_log(gen, np.log(e) - log_v[v])
    return U


def _mixed_partial(tree: HacTree, points: np.ndarray, k: int) -> np.ndarray:
    """Central-difference mixed derivative of the copula in its first ``k`` arguments."""
    if k == 0:
        return evaluate(tree, points)
    h0 = np.finfo(float).eps ** (1 / (k + 2))
    h = np.minimum(h0, 0.5 * np.minimum(points[:, :k], 1 - points[:, :k]))
    total = np.zeros(len(points))
    for mask in range(2 ** k):
        signs = np.array([1.0 if mask >> b & 1 else -1.0 for b in range(k)])
        shifted = points.copy()
        shifted[:, :k] += signs * h
        total += np.prod(signs) * evaluate(tree, shifted)
    return total / np.prod(2 * h, axis=1)


def conditional_inversion_sample(tree: HacTree, n: int, seed: int, replicate: int = 0,
                                 iterations: int = 40) -> np.ndarray:
    """Sequential conditional-distribution sampling for trees with at most six leaves.

    The conditional distribution of ``U_k`` given ``U_1, ..., U_{k-1}`` is
    the ratio of mixed finite-difference derivatives of the copula; it is
    inverted by bisection.  Accuracy drops with each extra conditioning
    variable, which is why the dimension is limited.
    """
    d = tree.d
    if d > MAX_INVERSION_DIM:
        raise UnsupportedSampler(f"conditional inversion supports at most {MAX_INVERSION_DIM} leaves")
    n = int(n)
    if n < 1:
        raise DomainError("sample size must be at least 1")
    rng = node_rng(seed, 0, replicate)
    W = rng.random((n, d))
    U = np.ones((n, d))
    U[:, 0] = W[:, 0]
    for k in range(1, d):
        base = U.copy()
        denom = _mixed_partial(tree, base, k)
        lo = np.zeros(n)
        hi = np.ones(n)
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            base[:, k] = mid
            with np.errstate(invalid="ignore", divide="ignore"):
                cond = _mixed_partial(tree, base, k) / denom
            below = cond < W[:, k]
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        U[:, k] = 0.5 * (lo + hi)
    return U
