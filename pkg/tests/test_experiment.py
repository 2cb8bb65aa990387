import csv
import io
import math

import numpy as np
import pytest

from hacest.errors import DataError, DomainError
from hacest.experiment import (
    EstimatorSpec,
    ExperimentConfig,
    cell_seed,
    default_n_grid,
    replicates_to_csv,
    rows_to_csv,
    run_experiment,
    summarise,
    tau_distance,
)
from hacest.generators import Generator
from hacest.hac import from_nested, implied_tau_matrix
from hacest.models import load_model

TWO = from_nested(2, (Generator("C", 1.0), [1, 2]))


def test_tau_distance():
    model = load_model("hetero5")
    M = implied_tau_matrix(model)
    assert tau_distance(M, model) == 0.0
    T = M.copy()
    T[0, 1] = T[1, 0] = M[0, 1] + 0.1
    assert tau_distance(T, model) == pytest.approx(0.01)
    with pytest.raises(DomainError):
        tau_distance(np.eye(3), model)


def test_grid_and_seeds():
    assert default_n_grid(5, [1, 2, 20]) == [20, 40, 400]
    assert cell_seed(0, 20, 1) == cell_seed(0, 20, 1)
    assert len({cell_seed(0, n, r) for n in (20, 40) for r in range(5)}) == 10


def test_spec_names_and_parsing():
    spec = EstimatorSpec.from_dict({"method": "dm", "collapse": "none"})
    assert spec.method == "DM" and spec.collapse is None
    assert EstimatorSpec().name == "R PT max opt F=known"
    with pytest.raises(DataError):
        EstimatorSpec.from_dict({"colour": "red"})


def test_config_validation():
    with pytest.raises(DataError):
        ExperimentConfig(TWO, [10], 0, [EstimatorSpec()])
    with pytest.raises(DataError):
        ExperimentConfig(TWO, [1], 1, [EstimatorSpec()])
    with pytest.raises(DomainError):
        ExperimentConfig(TWO, [10], 1, [EstimatorSpec(method="DM", collapse="pre")])
    cfg = ExperimentConfig.from_dict({"model": "hetero5", "n_steps": [1, 2]})
    assert cfg.sizes == [20, 40] and cfg.replications == 100


def recompute(rows):
    ok = [r for r in rows if r["rejected"] == "False"]
    hits = [r for r in ok if r["structure_ok"] == "True"]
    fs = 100 * (len(ok) - len(hits)) / len(ok)
    ff = 100 * sum(r["families_ok"] == "False" for r in hits) / len(hits) if hits else math.nan
    return fs, len(rows) - len(ok), ff, float(np.median([float(r["tau_distance"]) for r in ok]))


def test_summary_recomputed_from_replicates():
    model = load_model("hetero5")
    specs = [EstimatorSpec(families=("A", "C", "19", "20")),
             EstimatorSpec(families=("C", "19"), attitude="pessimistic")]
    cfg = ExperimentConfig(model, [40, 120], 4, specs, seed=2)
    results = run_experiment(cfg, threads=1)
    assert len(results) == 2 * 4 * 2
    reps = list(csv.DictReader(io.StringIO(replicates_to_csv(results))))
    for row in summarise(results):
        mine = [r for r in reps if r["estimator"] == row["estimator"] and int(r["n"]) == row["n"]]
        fs, rej, ff, med = recompute(mine)
        assert row["false_structure_ratio"] == pytest.approx(fs)
        assert row["rejection_rate"] == rej
        if math.isnan(ff):
            assert math.isnan(row["false_families_ratio"])
        else:
            assert row["false_families_ratio"] == pytest.approx(ff)
        assert row["tau_distance_median"] == pytest.approx(med)
    assert rows_to_csv(summarise(results)).count("\n") == 5


def test_parallel_run_is_identical():
    cfg = ExperimentConfig(TWO, [30], 3, [EstimatorSpec()], seed=7)
    serial = run_experiment(cfg, threads=1)
    parallel = run_experiment(cfg, threads=2)
    assert replicates_to_csv(serial) == replicates_to_csv(parallel)
