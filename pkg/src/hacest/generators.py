"""Completely monotone Archimedean generator families.

Six one-parameter families are supported, labelled ``A`` (Ali-Mikhail-Haq),
``C`` (Clayton), ``12``, ``14``, ``19`` and ``20`` (numbering of Nelsen's
catalogue).  Every function accepts scalars or numpy arrays for its
argument and is vectorised over it.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, TauRangeError
from .intervals import INF, Interval

FAMILIES = ("A", "C", "12", "14", "19", "20")

EPS = float(np.finfo(float).eps)
ONE_MINUS_EPS = math.nextafter(1.0, 0.0)
THETA_CAP = 1e6

PARAM_RANGE = {
    "A": Interval(0.0, 1.0, False, True),
    "C": Interval(0.0, INF, True, True),
    "12": Interval(1.0, INF, False, True),
    "14": Interval(1.0, INF, False, True),
    "19": Interval(0.0, INF, True, True),
    "20": Interval(0.0, INF, True, True),
}

# tau(Theta_a) for each family, as intervals
TAU_RANGE = {
    "A": Interval(0.0, 1 / 3, False, True),
    "C": Interval(0.0, 1.0, True, True),
    "12": Interval(1 / 3, 1.0, False, True),
    "14": Interval(1 / 3, 1.0, False, True),
    "19": Interval(1 / 3, 1.0, True, True),
    "20": Interval(0.0, 1.0, True, True),
}


def check_family(family: str) -> str:
    family = str(family)
    if family not in PARAM_RANGE:
        raise DomainError(f"unknown family {family!r}; expected one of {FAMILIES}")
    return family


def check_theta(family: str, theta: float) -> float:
    family = check_family(family)
    theta = float(theta)
    if theta not in PARAM_RANGE[family]:
        raise DomainError(f"theta={theta!r} outside {PARAM_RANGE[family]} for family {family}")
    return theta


@dataclass(frozen=True)
class Generator:
    """A member ``psi^(family, theta)`` of one of the supported families."""

    family: str
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "family", check_family(self.family))
        object.__setattr__(self, "theta", check_theta(self.family, self.theta))

    def __str__(self) -> str:
        return f"({self.family}, {self.theta:.6g})"

    def psi(self, t):
        return psi(self, t)

    def psi_inv(self, s):
        return psi_inv(self, s)

    @property
    def tau(self) -> float:
        return tau_of_theta(self.family, self.theta)


def _as_gen(gen) -> Generator:
    if isinstance(gen, Generator):
        return gen
    family, theta = gen
    return Generator(family, theta)


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def _softplus(x):
    return np.logaddexp(0.0, x)


def _log_expm1(y):
    """``log(exp(y) - 1)`` for ``y >= 0`` without overflow."""
    y = np.asarray(y, dtype=float)
    big = y > 30
    safe = np.where(big, 1.0, y)
    return np.where(big, y + np.log1p(-np.exp(-np.where(big, y, 30.0))), np.log(np.expm1(safe)))


# The heavy-tailed families (19, 20) have inverse generators that overflow
# doubles already at moderate arguments, so the core routines work with
# ell = log(t) instead of t.

def log_psi_inv(gen, s):
    """``log psi_inv(s)``; ``-inf`` at ``s = 1`` and ``+inf`` at ``s = 0``."""
    gen = _as_gen(gen)
    th = gen.theta
    s_arr = np.asarray(s, dtype=float)
    f = gen.family
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        inner = np.clip(s_arr, 1e-320, 1.0)
        ls = np.log(inner)
        if f == "A":
            r = np.log(np.log1p((1 - th) * (1 - inner) / inner))
        elif f == "C":
            r = _log_expm1(-th * ls)
        elif f == "12":
            r = th * (np.log1p(-inner) - ls)
        elif f == "14":
            r = th * _log_expm1(-ls / th)
        elif f == "19":
            r = th + _log_expm1(th * (1 - inner) / inner)
        else:
            r = 1.0 + _log_expm1(np.expm1(-th * ls))
        r = np.where(s_arr <= 0, np.inf, np.where(s_arr >= 1, -np.inf, r))
    return _out(r, s)


def psi_of_log(gen, ell):
    """``psi(exp(ell))``."""
    gen = _as_gen(gen)
    th = gen.theta
    ell = np.asarray(ell, dtype=float)
    f = gen.family
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        if f == "A":
            e = np.exp(-np.exp(ell))
            r = (1 - th) * e / (1 - th * e)
        elif f == "C":
            r = np.exp(-_softplus(ell) / th)
        elif f == "12":
            r = np.exp(-_softplus(ell / th))
        elif f == "14":
            r = np.exp(-th * _softplus(ell / th))
        elif f == "19":
            r = th / (th + _softplus(ell - th))
        else:
            r = np.exp(-np.log1p(_softplus(ell - 1.0)) / th)
        r = np.where(ell == np.inf, 0.0, r)
    return r


def log_abs_dpsi_of_log(gen, ell):
    """``log|psi'(exp(ell))|``."""
    gen = _as_gen(gen)
    th = gen.theta
    ell = np.asarray(ell, dtype=float)
    f = gen.family
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        if f == "A":
            t = np.exp(ell)
            q = th * np.exp(-t)
            return math.log1p(-th) - t - 2 * np.log1p(-q)
        if f == "C":
            return -math.log(th) - (1 / th + 1) * _softplus(ell)
        if f == "12":
            a = 1 / th
            return math.log(a) + (a - 1) * ell - 2 * _softplus(a * ell)
        if f == "14":
            a = 1 / th
            return (a - 1) * ell - (th + 1) * _softplus(a * ell)
        if f == "19":
            L = th + _softplus(ell - th)
            return math.log(th) - L - 2 * np.log(L)
        L = 1 + _softplus(ell - 1.0)
        return -math.log(th) - (1 / th + 1) * np.log(L) - np.logaddexp(ell, 1.0)


def log_d2psi_of_log(gen, ell):
    """``log psi''(exp(ell))``."""
    gen = _as_gen(gen)
    th = gen.theta
    ell = np.asarray(ell, dtype=float)
    f = gen.family
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        if f == "A":
            t = np.exp(ell)
            q = th * np.exp(-t)
            return math.log1p(-th) - t + np.log1p(q) - 3 * np.log1p(-q)
        if f == "C":
            return -math.log(th) + math.log1p(1 / th) - (1 / th + 2) * _softplus(ell)
        if f == "12":
            a = 1 / th
            return (math.log(a) + (a - 2) * ell - 3 * _softplus(a * ell)
                    + np.logaddexp(math.log(a + 1) + a * ell, _log_or_ninf(1 - a)))
        if f == "14":
            a = 1 / th
            return ((a - 2) * ell - (th + 2) * _softplus(a * ell)
                    + np.logaddexp(math.log(2) + a * ell, _log_or_ninf(1 - a)))
        if f == "19":
            L = th + _softplus(ell - th)
            return math.log(th) + np.log(L + 2) - 2 * L - 3 * np.log(L)
        L = 1 + _softplus(ell - 1.0)
        return (-math.log(th) - 2 * np.logaddexp(ell, 1.0) - (1 / th + 2) * np.log(L)
                + np.log(L + 1 / th + 1))


def _log_or_ninf(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _log_t(t):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(t, dtype=float))


def psi(gen, t):
    """Generator value ``psi(t)`` for ``t`` in ``[0, inf]``."""
    return _out(psi_of_log(gen, _log_t(t)), t)


def psi_inv(gen, s):
    """Inverse generator for ``s`` in ``[0, 1]``; ``psi_inv(0) = inf``."""
    with np.errstate(over="ignore"):
        return _out(np.exp(np.asarray(log_psi_inv(gen, s))), s)


def psi_deriv(gen, t, order: int = 1):
    """First or second derivative of the generator at ``t > 0``."""
    ell = _log_t(t)
    with np.errstate(over="ignore", under="ignore"):
        if order == 1:
            r = -np.exp(log_abs_dpsi_of_log(gen, ell))
        elif order == 2:
            r = np.exp(log_d2psi_of_log(gen, ell))
        else:
            raise ValueError(f"order must be 1 or 2, got {order!r}")
    return _out(r, t)


# ---------------------------------------------------------------- Kendall's tau

def _tau_amh(th: float) -> float:
    if th < 1e-3:
        return 2 * th / 9 + th**2 / 18 + th**3 / 45
    return 1 - 2 * (th + (1 - th) ** 2 * math.log1p(-th)) / (3 * th**2)


@functools.lru_cache(maxsize=65536)
def _tau_19(th: float) -> float:
    # tau = 1/3 + 2 th m / 3 with m = 1 - th e^th E1(th)
    if th <= 50:
        m = 1 - th * math.exp(th) * special.exp1(th)
    else:
        # asymptotic series sum_k (-1)^(k+1) k! / th^k; terms shrink until k ~ th
        m, term = 0.0, 1.0
        for k in range(1, 40):
            term *= k / th
            m += term if k % 2 else -term
    return 1 / 3 + 2 * th * m / 3


@functools.lru_cache(maxsize=65536)
def _tau_20(th: float) -> float:
    # e * int_0^1 t^(th+1) exp(-t^-th) dt, substituted w = t^-th - 1
    if th < 0.05:
        return _tau_20_near_independence(th)
    p = 2 + 2 / th
    val, _ = integrate.quad(lambda v: math.exp(-v - p * math.log1p(v)), 0, INF,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return 1 - (4 / th) * (1 / (th + 2) - val / th)


def _tau_20_near_independence(th: float) -> float:
    # tau = 1 - 4 int t psi'(t)^2 dt with the generator rescaled so that it
    # tends to exp(-t); integrating the difference to exp(-2t) avoids the
    # cancellation of the closed form for small theta
    def integrand(t):
        lg = -(1 / th + 1) * math.log1p(math.log1p(th * t)) - math.log1p(th * t)
        D = 2 * (t + lg)
        if D < 1:
            return t * math.exp(-2 * t) * math.expm1(D)
        return t * (math.exp(2 * lg) - math.exp(-2 * t))

    val, _ = integrate.quad(integrand, 0, INF, epsabs=1e-16, epsrel=1e-12, limit=400)
    return -4 * val


def tau_of_theta(family: str, theta: float) -> float:
    """Kendall's tau of the bivariate copula generated by ``(family, theta)``."""
    th = check_theta(family, theta)
    if family == "A":
        return _tau_amh(th)
    if family == "C":
        return th / (th + 2)
    if family == "12":
        return 1 - 2 / (3 * th)
    if family == "14":
        return 1 - 2 / (1 + 2 * th)
    if family == "19":
        return _tau_19(th)
    return _tau_20(th)


def theta_of_tau(family: str, tau: float) -> float:
    """Inverse of :func:`tau_of_theta`; raises :class:`TauRangeError` outside the range."""
    family = check_family(family)
    tau = float(tau)
    if tau not in TAU_RANGE[family]:
        raise TauRangeError(f"tau={tau!r} outside {TAU_RANGE[family]} for family {family}")
    if family == "C":
        return 2 * tau / (1 - tau)
    if family == "12":
        return 2 / (3 * (1 - tau))
    if family == "14":
        return (1 + tau) / (2 * (1 - tau))
    if family == "A":
        if tau == 0.0:
            return 0.0
        lo, hi = 0.0, ONE_MINUS_EPS
    elif family == "19":
        lo, hi = 1e-300, 1.0
        while _tau_19(hi) < tau and hi < THETA_CAP:
            lo, hi = hi, min(hi * 4, THETA_CAP)
    else:
        lo, hi = 1e-300, 1.0
        while _tau_20(hi) < tau and hi < THETA_CAP:
            lo, hi = hi, min(hi * 4, THETA_CAP)
    fn = lambda th: tau_of_theta(family, th) - tau
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo >= 0:
        return lo
    if f_hi <= 0:
        return hi
    return optimize.brentq(fn, lo, hi, xtol=1e-300, rtol=4 * EPS, maxiter=500)


def trimmed_theta_of_tau(family: str, tau: float) -> tuple[float, bool]:
    """Tau inversion with the fallback values used when ``tau`` is out of range.

    Returns ``(theta, in_range)``.  Out-of-range taus map to the boundary
    values: ``1 - eps`` for A at or above 1/3, ``eps`` for 19 at or below
    1/3, ``1`` for 12 and 14 below 1/3, and ``0`` (A) or ``eps`` (C, 20)
    for non-positive taus.
    """
    family = check_family(family)
    if tau in TAU_RANGE[family]:
        return theta_of_tau(family, tau), True
    if family == "A":
        return (ONE_MINUS_EPS if tau >= 1 / 3 else 0.0), False
    if tau >= 1.0:
        return THETA_CAP, False
    if family in ("12", "14"):
        return 1.0, False
    return EPS, False


# ----------------------------------------------------------- tail dependence

def tail_coefficients(gen) -> tuple[float, float]:
    """Lower and upper tail-dependence coefficients."""
    gen = _as_gen(gen)
    th = gen.theta
    f = gen.family
    if f == "A":
        return 0.0, 0.0
    if f == "C":
        return 2 ** (-1 / th), 0.0
    upper = 2 - 2 ** (1 / th)
    if f == "12":
        return 2 ** (-1 / th), upper
    if f == "14":
        return 0.5, upper
    return 1.0, 0.0


# ------------------------------------------------------------ bivariate AC

def biv_ac_cdf(gen, u, v):
    """Bivariate Archimedean copula ``psi(psi_inv(u) + psi_inv(v))``."""
    gen = _as_gen(gen)
    ell = np.logaddexp(log_psi_inv(gen, u), log_psi_inv(gen, v))
    r = psi_of_log(gen, ell)
    return float(r) if np.ndim(r) == 0 else r


def biv_ac_logpdf(gen, u, v):
    gen = _as_gen(gen)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u <= 0) | (u >= 1) | (v <= 0) | (v >= 1)):
        raise DomainError("density is defined on the open unit square only")
    la = log_psi_inv(gen, u)
    lb = log_psi_inv(gen, v)
    ell = np.logaddexp(la, lb)
    return (log_d2psi_of_log(gen, ell) - log_abs_dpsi_of_log(gen, la)
            - log_abs_dpsi_of_log(gen, lb))


def biv_ac_density(gen, u, v):
    """Copula density ``psi''(x) / (psi'(psi_inv(u)) psi'(psi_inv(v)))``."""
    r = np.exp(biv_ac_logpdf(gen, u, v))
    return float(r) if np.ndim(r) == 0 else r
