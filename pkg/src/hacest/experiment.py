"""Simulation harness: replicate sampling and estimation, then summarise.

A configuration names a model, a grid of sample sizes, a number of
replications and a list of estimators.  Every ``(n, replicate)`` cell
draws one sample from its own seed, runs all estimators on it and records
per-replicate results; these are then reduced to one summary row per
estimator and sample size.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import hac
from .errors import DataError, DomainError
from .collapse import REESTIMATORS, parse_policy
from .estimate import COLLAPSE_MODES, EstimatorConfig, estimate
from .gof import sn_e
from .hac import HacTree, families_equal, implied_tau_matrix, structure_equal
from .kendall import pseudo_observations, tau_matrix
from .sample import sample_hac


def tau_distance(taus, tree: HacTree) -> float:
    """Sum over ``i < j`` of squared differences between sample and model-implied taus."""
    T = np.asarray(taus, dtype=float)
    if T.shape != (tree.d, tree.d):
        raise DomainError(f"tau matrix of shape {T.shape} does not match d={tree.d}")
    M = implied_tau_matrix(tree)
    iu = np.triu_indices(tree.d, k=1)
    return float(np.sum((T[iu] - M[iu]) ** 2))


def default_n_grid(d: int, steps: Sequence[int]) -> list[int]:
    """Sample sizes ``4 d i`` for the given ``i``."""
    return [4 * d * int(i) for i in steps]


@dataclass(frozen=True)
class EstimatorSpec:
    method: str = "PT"
    families: tuple[str, ...] | None = None  # None: the model's own families
    attitude: str = "optimistic"
    gof_stat: str = "R"
    g: str = "max"
    collapse: str | None = None
    reest: str = "KTauAvg"
    policy: str = "binary"  # "known" selects the model's fork count

    @property
    def name(self) -> str:
        fams = "known" if self.families is None else "+".join(self.families)
        parts = [self.gof_stat, self.method]
        if self.method == "PT":
            parts.append(self.g)
        parts += [self.attitude[:3], f"F={fams}"]
        if self.collapse:
            parts += [f"coll={self.collapse}", self.reest, f"forks={self.policy}"]
        return " ".join(parts)

    @classmethod
    def from_dict(cls, doc) -> EstimatorSpec:
        doc = dict(doc)
        if "method" in doc:
            doc["method"] = str(doc["method"]).upper()
        fams = doc.get("families")
        if fams is not None:
            doc["families"] = tuple(fams)
        collapse = doc.get("collapse")
        doc["collapse"] = None if collapse in (None, "none") else collapse
        try:
            return cls(**doc)
        except TypeError as exc:
            raise DataError(f"invalid estimator entry {doc!r}: {exc}") from exc


@dataclass
class ExperimentConfig:
    model: HacTree
    sizes: list[int]
    replications: int
    estimators: list[EstimatorSpec]
    seed: int = 0
    model_path: str = ""

    def __post_init__(self):
        if self.replications < 1:
            raise DataError("replications must be at least 1")
        if not self.sizes or any(n < 2 for n in self.sizes):
            raise DataError("sample sizes must be at least 2")
        if not self.estimators:
            raise DataError("at least one estimator is required")
        for spec in self.estimators:
            spec_config(spec, self.model)

    @classmethod
    def from_dict(cls, doc, base: Path | None = None) -> ExperimentConfig:
        if not isinstance(doc, dict) or "model" not in doc:
            raise DataError("experiment config needs a 'model' entry")
        path = Path(doc["model"])
        if base is not None and not path.is_absolute() and (base / path).exists():
            path = base / path
        model = resolve_model(str(path))
        if "n" in doc:
            sizes = [int(x) for x in doc["n"]]
        else:
            sizes = default_n_grid(model.d, doc.get("n_steps", range(1, 21)))
        ests = [EstimatorSpec.from_dict(e) for e in doc.get("estimators", [{}])]
        return cls(model, sizes, int(doc.get("replications", 100)), ests,
                   int(doc.get("seed", 0)), str(path))


def resolve_model(name: str) -> HacTree:
    """Load a HAC document from a path or from the bundled model collection."""
    if os.path.exists(name):
        return hac.load(name)
    from .models import load_model
    return load_model(name)


def model_families(tree: HacTree) -> tuple[str, ...]:
    return tuple(sorted({tree.label(v).family for v in tree.forks}))


def cell_seed(seed: int, n: int, replicate: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(n), int(replicate)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def spec_config(spec: EstimatorSpec, model: HacTree) -> tuple[EstimatorConfig, str]:
    """Estimator configuration and fork policy of ``spec`` for data from ``model``."""
    if spec.collapse not in COLLAPSE_MODES:
        raise DomainError(f"unknown collapse mode {spec.collapse!r}")
    if spec.reest not in REESTIMATORS:
        raise DomainError(f"unknown re-estimator {spec.reest!r}")
    if spec.method == "DM" and spec.collapse == "pre":
        raise DomainError("the DM estimator cannot be pre-collapsed")
    policy = f"forks={model.k}" if spec.policy == "known" else spec.policy
    try:
        parse_policy(policy)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    fams = spec.families or model_families(model)
    return EstimatorConfig(fams, spec.attitude, spec.gof_stat, spec.g, spec.method), policy


@dataclass
class ReplicateResult:
    estimator: str
    n: int
    replicate: int
    rejected: bool
    structure_ok: bool | None = None
    families_ok: bool | None = None
    tau_distance: float | None = None
    gof: float | None = None
    estimate: str = ""


def run_cell(model: HacTree, specs: Sequence[EstimatorSpec], n: int, replicate: int,
             seed: int) -> list[ReplicateResult]:
    U = pseudo_observations(sample_hac(model, n, cell_seed(seed, n, replicate)))
    T = tau_matrix(U)
    out = []
    for spec in specs:
        cfg, policy = spec_config(spec, model)
        res = estimate(U, cfg, spec.collapse, spec.reest, policy, taus=T)
        if res.rejected:
            out.append(ReplicateResult(spec.name, n, replicate, True))
            continue
        tree = res.tree
        out.append(ReplicateResult(
            spec.name, n, replicate, False,
            structure_equal(tree, model), families_equal(tree, model),
            tau_distance(T, tree), sn_e(U, tree), hac.dumps(tree)))
    return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HAC_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> list[ReplicateResult]:
    """All per-replicate results, ordered by sample size, replicate and estimator."""
    cells = [(n, r) for n in cfg.sizes for r in range(cfg.replications)]
    threads = _threads() if threads is None else threads
    if threads <= 1:
        chunks = [run_cell(cfg.model, cfg.estimators, n, r, cfg.seed) for n, r in cells]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_cell, cfg.model, cfg.estimators, n, r, cfg.seed)
                       for n, r in cells]
            chunks = [f.result() for f in futures]
    return [row for chunk in chunks for row in chunk]


def _median(xs) -> float:
    return float(np.median(xs)) if xs else math.nan


def summarise(results: Sequence[ReplicateResult]) -> list[dict]:
    """One row of evaluation criteria per estimator and sample size.

    The false-structure ratio is taken over returned estimates, the
    false-families ratio over estimates with the true structure.
    """
    groups: dict[tuple[str, int], list[ReplicateResult]] = {}
    for r in results:
        groups.setdefault((r.estimator, r.n), []).append(r)
    rows = []
    for (name, n), rs in groups.items():
        ok = [r for r in rs if not r.rejected]
        hits = [r for r in ok if r.structure_ok]
        rows.append({
            "estimator": name,
            "n": n,
            "replications": len(rs),
            "false_structure_ratio": 100 * (len(ok) - len(hits)) / len(ok) if ok else math.nan,
            "rejection_rate": len(rs) - len(ok),
            "false_families_ratio":
                100 * sum(not r.families_ok for r in hits) / len(hits) if hits else math.nan,
            "tau_distance_median": _median([r.tau_distance for r in ok]),
            "gof_median": _median([r.gof for r in ok]),
        })
    return rows


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def replicates_to_csv(results: Sequence[ReplicateResult]) -> str:
    return rows_to_csv([asdict(r) for r in results])
