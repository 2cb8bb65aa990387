"""HAC estimators.

* :func:`estimate_homogeneous` inverts Kendall's tau fork by fork for one
  family.
* :func:`estimate_heterogeneous_pt` picks a family per fork by a
  goodness-of-fit statistic, tracking admissible parents with nesting sets
  so that the result satisfies the sufficient nesting condition.
* :func:`estimate_heterogeneous_dm` joins columns greedily, fits each fork
  by maximum likelihood and replaces the joined pair by a diagonal
  transform of the pair.

:func:`estimate` wires these together with structure estimation and
optional collapsing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .collapse import REESTIMATORS, CollapseTrace, collapse_sequence, parse_policy, select_collapsed
from .errors import DomainError, EstimationError
from .generators import (
    EPS,
    FAMILIES,
    ONE_MINUS_EPS,
    PARAM_RANGE,
    Generator,
    biv_ac_logpdf,
    check_family,
    log_psi_inv,
    psi_of_log,
    trimmed_theta_of_tau,
)
from .gof import AGGREGATIONS, KINDS, PairCache, grouped_gof, pair_statistic
from .hac import HacTree
from .intervals import Interval
from .kendall import as_matrix, sample_tau, tau_matrix
from .nesting import NestingSet, TrimEvent, case_for, default_n0, intersect_all, n2, trim
from .structure import StructureEstimate, estimate_structure

ATTITUDES = ("optimistic", "pessimistic")
METHODS = ("PT", "DM")
COLLAPSE_MODES = (None, "pre", "post")
ML_THETA_CAP = 1e4


@dataclass(frozen=True)
class EstimatorConfig:
    families: tuple[str, ...] = ("A", "C", "19", "20")
    attitude: str = "optimistic"
    gof_stat: str = "R"
    g: str = "max"
    method: str = "PT"
    n0: NestingSet | None = None

    def __post_init__(self):
        fams = tuple(f for f in FAMILIES if f in {check_family(x) for x in self.families})
        if not fams:
            raise DomainError("at least one family is required")
        object.__setattr__(self, "families", fams)
        if self.attitude not in ATTITUDES:
            raise DomainError(f"unknown attitude {self.attitude!r}; expected one of {ATTITUDES}")
        if self.gof_stat not in KINDS:
            raise DomainError(f"unknown statistic {self.gof_stat!r}; expected one of {KINDS}")
        if self.g not in AGGREGATIONS:
            raise DomainError(f"unknown aggregation {self.g!r}; expected one of {AGGREGATIONS}")
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}; expected one of {METHODS}")
        full = default_n0(self.case)
        if self.n0 is None:
            object.__setattr__(self, "n0", full.restrict(fams))
        else:
            for f, iv in self.n0:
                if f not in fams or full.get(f) is None or iv.intersect(full[f]) != iv:
                    raise DomainError(f"n0 entry ({f}, {iv}) is not within the {self.case} defaults")

    @property
    def case(self) -> str:
        return case_for(self.families)

    @property
    def pessimistic(self) -> bool:
        return self.attitude == "pessimistic"


@dataclass
class EstimateOutcome:
    """Result of one estimation run.

    ``tree`` is ``None`` when the run was rejected; ``rejected_at`` then
    holds the loop index ``k`` (fork ``d + k``) at which it stopped.
    """
    tree: HacTree | None
    trim_events: list[TrimEvent] = field(default_factory=list)
    n1_sets: dict[int, NestingSet] | None = None
    rejected_at: int | None = None
    reason: str = ""
    trace: CollapseTrace | None = None

    @property
    def rejected(self) -> bool:
        return self.tree is None


def _reject(k: int, reason: str, events) -> EstimateOutcome:
    return EstimateOutcome(None, list(events), None, k, reason)


# ------------------------------------------------------------ homogeneous

def estimate_homogeneous(struct: StructureEstimate, family: str,
                         attitude: str = "optimistic") -> EstimateOutcome:
    """Invert each fork tau within one family.

    Out-of-range taus are replaced by the family's boundary values under
    the optimistic attitude and reject the run under the pessimistic one.
    """
    family = check_family(family)
    if attitude not in ATTITUDES:
        raise DomainError(f"unknown attitude {attitude!r}")
    tree = struct.tree
    labels = {}
    events = []
    for v in tree.forks:
        theta, in_range = trimmed_theta_of_tau(family, struct.fork_taus[v])
        if not in_range:
            if attitude == "pessimistic":
                return _reject(v - tree.d, f"tau {struct.fork_taus[v]:.6g} of fork {v} "
                               f"outside the range of family {family}", events)
            events.append(TrimEvent(v, family, math.nan, theta))
        labels[v] = Generator(family, theta)
    return EstimateOutcome(tree.skeleton().with_labels(labels), events)


# -------------------------------------------------------- heterogeneous PT

def _candidates(N: NestingSet, fit, pessimistic: bool):
    """``(family, theta, raw, in_range)`` per admissible family, or fewer if pessimistic."""
    out = []
    for fam, r in N:
        raw, in_range = fit(fam)
        if pessimistic:
            if in_range and raw in r:
                out.append((fam, raw, raw, True))
        else:
            out.append((fam, trim(raw, r), raw, in_range))
    return out


def _best(scored):
    """Smallest statistic; ties go to the lexicographically smallest label."""
    return min(scored, key=lambda item: (item[0], item[1][0]))[1]


def estimate_heterogeneous_pt(U, cfg: EstimatorConfig, struct: StructureEstimate,
                              cache: PairCache | None = None) -> EstimateOutcome:
    """Family and parameter per fork from tau inversion and goodness of fit.

    Works for binary and non-binary structures: a fork with children
    ``i_1, ..., i_m`` intersects all their admissible-parent sets and is
    scored on every column pair across two different children.
    """
    U = as_matrix(U)
    tree = struct.tree
    if U.shape[1] != tree.d:
        raise DomainError(f"data has {U.shape[1]} columns, structure has {tree.d} leaves")
    cache = cache if cache is not None else PairCache(U)
    n1 = {i: cfg.n0 for i in range(1, tree.d + 1)}
    labels: dict[int, Generator] = {}
    events: list[TrimEvent] = []
    for v in tree.forks:
        k = v - tree.d
        kids = tree.children[v]
        N = intersect_all([n1[c] for c in kids])
        if not N:
            return _reject(k, f"no admissible parent family for fork {v}", events)
        tau_hat = struct.fork_taus[v]
        cands = _candidates(N, lambda fam: trimmed_theta_of_tau(fam, tau_hat), cfg.pessimistic)
        if not cands:
            return _reject(k, f"every admissible family needs trimming at fork {v}", events)
        groups = [tree.leaves(c) for c in kids]
        scored = [(grouped_gof(U, groups, Generator(fam, th), cfg.gof_stat, cfg.g, cache), c)
                  for c in cands for fam, th in [c[:2]]]
        fam, theta, raw, in_range = _best(scored)
        if theta != raw or not in_range:
            events.append(TrimEvent(v, fam, raw if in_range else math.nan, theta))
        labels[v] = Generator(fam, theta)
        n1[v] = N & n2(cfg.case, fam, theta)
        if v != tree.root and not n1[v]:
            return _reject(k, f"fork {v} admits no parent", events)
    forks_n1 = {v: n1[v] for v in tree.forks}
    return EstimateOutcome(tree.skeleton().with_labels(labels), events, forks_n1)


# -------------------------------------------------------- heterogeneous DM

def _loglik(family: str, theta: float, u, v) -> float:
    try:
        ll = float(np.sum(biv_ac_logpdf(Generator(family, theta), u, v)))
    except (DomainError, FloatingPointError):
        return -math.inf
    return ll if math.isfinite(ll) else -math.inf


_GOLDEN = (math.sqrt(5) - 1) / 2


def mle_2ac(u, v, family: str, r: Interval | None = None, tol: float = 1e-6) -> float:
    """Maximum-likelihood parameter of a bivariate AC over ``r`` (default: the full range).

    A coarse grid locates the best bracket, then golden-section search
    refines it until the bracket is narrower than ``tol`` in the parameter.
    Unbounded families are searched on a log scale and capped at 1e4.
    """
    family = check_family(family)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    rng = PARAM_RANGE[family] if r is None else PARAM_RANGE[family].intersect(r)
    if rng.empty:
        raise DomainError(f"empty search range for family {family}")
    lo, hi = rng.closed_bounds()
    hi = min(hi, ML_THETA_CAP)
    log_scale = family != "A"
    if log_scale:
        lo = max(lo, 1e-10)
    if lo >= hi:
        theta = min(lo, hi) if rng.lower == rng.upper else lo
        if _loglik(family, theta, u, v) == -math.inf:
            raise EstimationError(f"likelihood of family {family} is not finite")
        return theta
    to_x = math.log if log_scale else (lambda t: t)
    to_t = math.exp if log_scale else (lambda x: x)
    nll = lambda x: -_loglik(family, min(max(to_t(x), lo), hi), u, v)

    xs = np.linspace(to_x(lo), to_x(hi), 41)
    vals = [nll(x) for x in xs]
    m = int(np.argmin(vals))
    if not math.isfinite(vals[m]):
        raise EstimationError(f"likelihood of family {family} is not finite on its range")
    a, b = xs[max(m - 1, 0)], xs[min(m + 1, len(xs) - 1)]
    c = b - _GOLDEN * (b - a)
    dd = a + _GOLDEN * (b - a)
    fc, fd = nll(c), nll(dd)
    for _ in range(200):
        if to_t(b) - to_t(a) < tol:
            break
        if fc <= fd:
            b, dd, fd = dd, c, fc
            c = b - _GOLDEN * (b - a)
            fc = nll(c)
        else:
            a, c, fc = c, dd, fd
            dd = a + _GOLDEN * (b - a)
            fd = nll(dd)
    x_best = min([(vals[m], xs[m]), (fc, c), (fd, dd)])[1]
    return min(max(to_t(x_best), lo), hi)


def diagonal_transform(gen: Generator, ui, uj) -> np.ndarray:
    """``psi(2 psi_inv(max(ui, uj)))``, kept inside the open unit interval."""
    m = np.maximum(np.asarray(ui, dtype=float), np.asarray(uj, dtype=float))
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        z = psi_of_log(gen, math.log(2.0) + np.asarray(log_psi_inv(gen, m)))
    return np.clip(z, EPS, ONE_MINUS_EPS)


def estimate_heterogeneous_dm(U, cfg: EstimatorConfig,
                              enforce_nesting: bool = True) -> EstimateOutcome:
    """Greedy joins on the largest tau with ML fits and the diagonal transform.

    With ``enforce_nesting=False`` the admissible-parent bookkeeping and
    trimming are skipped: every configured family is fitted on its full
    range, as in the classical diagonal estimator.
    """
    U = as_matrix(U)
    n, d = U.shape
    cols = {i: U[:, i - 1] for i in range(1, d + 1)}
    T = tau_matrix(U)
    tau = {(i, j): T[i - 1, j - 1] for i, j in combinations(range(1, d + 1), 2)}
    active = list(range(1, d + 1))
    n1 = {i: cfg.n0 for i in range(1, d + 1)}
    everything = NestingSet({f: PARAM_RANGE[f] for f in cfg.families})
    children: dict[int, tuple[int, int]] = {}
    labels: dict[int, Generator] = {}
    events: list[TrimEvent] = []
    for k in range(1, d):
        v = d + k
        best = None
        for pair in combinations(sorted(active), 2):
            if best is None or tau[pair] > best[0]:
                best = (tau[pair], pair)
        i, j = best[1]
        if enforce_nesting:
            N = n1[i] & n1[j]
            if not N:
                return _reject(k, f"no admissible parent family for fork {v}", events)
        else:
            N = everything
        fits = {}

        def fit(fam):
            fits[fam] = mle_2ac(cols[i], cols[j], fam)
            return fits[fam], True

        cands = _candidates(N, fit, cfg.pessimistic and enforce_nesting)
        if not cands:
            return _reject(k, f"every admissible family needs trimming at fork {v}", events)
        scored = [(pair_statistic(cfg.gof_stat, cols[i], cols[j], Generator(fam, th)), c)
                  for c in cands for fam, th in [c[:2]]]
        fam, theta, raw, _ = _best(scored)
        if theta != raw:
            events.append(TrimEvent(v, fam, raw, theta))
        gen = Generator(fam, theta)
        labels[v] = gen
        children[v] = (i, j)
        if enforce_nesting:
            n1[v] = N & n2(cfg.case, fam, theta)
            if k < d - 1 and not n1[v]:
                return _reject(k, f"fork {v} admits no parent", events)
        cols[v] = diagonal_transform(gen, cols[i], cols[j])
        active.remove(i)
        active.remove(j)
        for s in active:
            tau[(s, v)] = sample_tau(cols[s], cols[v])
        active.append(v)
    tree = HacTree(d, children, labels)
    return EstimateOutcome(tree, events, {v: n1[v] for v in tree.forks} if enforce_nesting else None)


# ---------------------------------------------------------------- pipeline

def uses_homogeneous_path(families: Sequence[str]) -> bool:
    """A single family goes through tau inversion alone, except 14, which cannot nest in itself."""
    fams = set(families)
    return len(fams) == 1 and "14" not in fams


def estimate(U, cfg: EstimatorConfig, collapse: str | None = None, reest: str = "KTauAvg",
             policy: str = "binary", taus=None) -> EstimateOutcome:
    """Full estimation: structure, families and parameters, optional collapsing.

    ``collapse`` is ``None``, ``"pre"`` (collapse the family-free structure
    before fitting) or ``"post"`` (collapse the fitted binary HAC);
    ``policy`` picks the tree from the collapsing trace.  ``taus`` may pass
    a precomputed sample tau matrix.
    """
    if collapse not in COLLAPSE_MODES:
        raise DomainError(f"unknown collapse mode {collapse!r}; expected pre, post or none")
    if reest not in REESTIMATORS:
        raise DomainError(f"unknown re-estimator {reest!r}; expected one of {REESTIMATORS}")
    parse_policy(policy)
    if cfg.method == "DM" and collapse == "pre":
        raise DomainError("the DM estimator cannot be pre-collapsed")
    U = as_matrix(U)
    T = tau_matrix(U) if taus is None else np.asarray(taus, dtype=float)
    homogeneous = uses_homogeneous_path(cfg.families)

    def fit(struct):
        if homogeneous:
            return estimate_homogeneous(struct, cfg.families[0], cfg.attitude)
        return estimate_heterogeneous_pt(U, cfg, struct)

    if cfg.method == "DM":
        out = estimate_heterogeneous_dm(U, cfg)
    else:
        struct = estimate_structure(T)
        if collapse == "pre":
            trace = collapse_sequence(struct.tree, T, reest, fork_taus=struct.fork_taus)
            chosen = select_collapsed(trace, policy)
            out = fit(StructureEstimate(chosen.tree, chosen.fork_taus))
            out.trace = trace
            return out
        out = fit(struct)
    if collapse != "post" or out.rejected:
        return out
    if out.n1_sets is not None:
        trace = collapse_sequence(out.tree, T, reest, n1_sets=out.n1_sets,
                                  n0=cfg.n0, case=cfg.case)
    else:
        trace = collapse_sequence(out.tree, T, reest)
    chosen = select_collapsed(trace, policy)
    events = list(out.trim_events)
    for step in trace.steps[1:chosen_index(trace, chosen) + 1]:
        events.extend(step.trim_events)
    return EstimateOutcome(chosen.tree, events, chosen.n1_sets, trace=trace)


def chosen_index(trace: CollapseTrace, step) -> int:
    return next(i for i, s in enumerate(trace.steps) if s is step)
