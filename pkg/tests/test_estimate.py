import math

import numpy as np
import pytest

from hacest.errors import DomainError
from hacest.estimate import (
    EstimatorConfig,
    diagonal_transform,
    estimate,
    estimate_heterogeneous_dm,
    estimate_heterogeneous_pt,
    estimate_homogeneous,
    mle_2ac,
    uses_homogeneous_path,
)
from hacest.generators import EPS, ONE_MINUS_EPS, Generator, biv_ac_logpdf, tau_of_theta
from hacest.hac import HacTree, check_snc, from_nested, structure_equal
from hacest.intervals import INF, Interval
from hacest.kendall import pseudo_observations, tau_matrix
from hacest.models import load_model
from hacest.nesting import NestingSet, default_n0, intersect_all, n2, trim
from hacest.sample import sample_ac, sample_hac
from hacest.structure import StructureEstimate, estimate_structure

THREE = HacTree(3, {4: (2, 3), 5: (1, 4)})


def test_homogeneous_clayton_inversion():
    out = estimate_homogeneous(StructureEstimate(THREE, {4: 0.5, 5: 0.2}), "C")
    assert out.tree.label(4).theta == pytest.approx(2.0)
    assert out.tree.label(5).theta == pytest.approx(0.5)
    assert not out.trim_events


def test_homogeneous_amh_trimming_and_rejection():
    out = estimate_homogeneous(StructureEstimate(THREE, {4: 0.34, 5: 0.2}), "A")
    assert out.tree.label(4).theta == ONE_MINUS_EPS
    assert [e.fork for e in out.trim_events] == [4]
    neg = StructureEstimate(THREE, {4: 0.2, 5: -0.05})
    assert estimate_homogeneous(neg, "A").tree.label(5).theta == 0.0
    rejected = estimate_homogeneous(neg, "A", "pessimistic")
    assert rejected.rejected and rejected.rejected_at == 2


def test_homogeneous_path_selection():
    assert uses_homogeneous_path(["C"])
    assert not uses_homogeneous_path(["14"])
    assert not uses_homogeneous_path(["C", "20"])


def test_config_validation():
    assert EstimatorConfig(("20", "C")).families == ("C", "20")
    for bad in [dict(families=()), dict(attitude="x"), dict(gof_stat="Q"), dict(g="min"),
                dict(method="ML"), dict(families=("A", "12"))]:
        with pytest.raises(DomainError):
            EstimatorConfig(**bad)
    with pytest.raises(DomainError):
        EstimatorConfig(("A", "C"), n0=NestingSet({"C": Interval(0.5, 2.0)}))


def brute_mle(u, v, family, grid):
    ll = [np.sum(biv_ac_logpdf(Generator(family, t), u, v)) for t in grid]
    return grid[int(np.argmax(ll))]


@pytest.mark.parametrize("family,theta,grid", [
    ("C", 2.0, np.linspace(0.5, 5, 4501)),
    ("A", 0.5, np.linspace(0.0, 0.999, 2000)),
    ("19", 0.6, np.linspace(0.05, 4, 3951)),
    ("20", 1.2, np.linspace(0.1, 5, 4901)),
])
def test_mle_matches_grid_search(family, theta, grid):
    U = sample_ac(Generator(family, theta), 500, seed=3)
    fit = mle_2ac(U[:, 0], U[:, 1], family)
    assert fit == pytest.approx(brute_mle(U[:, 0], U[:, 1], family, grid), abs=2 * (grid[1] - grid[0]))


def test_mle_consistency_and_ranges():
    U = sample_ac(Generator("C", 2.0), 2000, seed=4)
    assert 1.7 <= mle_2ac(U[:, 0], U[:, 1], "C") <= 2.3
    assert mle_2ac(U[:, 0], U[:, 1], "C", Interval(1.0, 1.0)) == 1.0
    assert 0.5 <= mle_2ac(U[:, 0], U[:, 1], "C", Interval(0.5, 1.5)) <= 1.5
    with pytest.raises(DomainError):
        mle_2ac(U[:, 0], U[:, 1], "C", Interval(-2.0, -1.0))


@pytest.mark.parametrize("theta", [0.3, 1.0, 4.0])
def test_diagonal_transform_clayton_closed_form(theta):
    rng = np.random.default_rng(5)
    ui, uj = rng.uniform(0.01, 0.99, (2, 50))
    m = np.maximum(ui, uj)
    expected = (2 * m ** -theta - 1) ** (-1 / theta)
    assert np.allclose(diagonal_transform(Generator("C", theta), ui, uj), expected, rtol=1e-12)


def test_diagonal_transform_stays_open():
    z = diagonal_transform(Generator("19", 3.0), [1e-300, 1.0], [1e-300, 0.5])
    assert np.all(z >= EPS) and np.all(z <= ONE_MINUS_EPS)


def test_bivariate_dm_and_pt_agree_on_structure():
    U = pseudo_observations(sample_ac(Generator("C", 2.0), 2000, seed=6))
    cfg_pt = EstimatorConfig(("C", "20"))
    cfg_dm = EstimatorConfig(("C", "20"), method="DM")
    pt = estimate(U, cfg_pt)
    dm = estimate(U, cfg_dm)
    assert structure_equal(pt.tree, dm.tree)
    assert pt.tree.label(3).family == dm.tree.label(3).family == "C"
    assert dm.tree.label(3).theta == pytest.approx(pt.tree.label(3).theta, abs=0.3)


def test_structure_does_not_depend_on_families():
    model = load_model("hetero5")
    U = pseudo_observations(sample_hac(model, 600, 7))
    skel = estimate_structure(tau_matrix(U)).tree
    for fams in [("A", "C", "19", "20"), ("C",), ("C", "19"), ("19", "20")]:
        for att in ("optimistic", "pessimistic"):
            out = estimate(U, EstimatorConfig(fams, att))
            if not out.rejected:
                assert out.tree.skeleton() == skel


def test_pt_admissible_sets_follow_children():
    model = load_model("hetero5")
    cfg = EstimatorConfig(("A", "C", "19", "20"))
    for seed in range(5):
        U = pseudo_observations(sample_hac(model, 500, seed))
        out = estimate(U, cfg)
        assert not out.rejected and check_snc(out.tree)[0]
        tree = out.tree
        for v in tree.forks:
            kids = [out.n1_sets[c] if c > tree.d else cfg.n0 for c in tree.children[v]]
            g = tree.label(v)
            N = intersect_all(kids)
            assert (g.family, g.theta) in N
            assert out.n1_sets[v] == N & n2(cfg.case, g.family, g.theta)


def test_pessimistic_returns_untrimmed_fits_only():
    model = load_model("hetero5")
    U = pseudo_observations(sample_hac(model, 500, 1))
    cfg = EstimatorConfig(("A", "C", "19", "20"), "pessimistic")
    out = estimate(U, cfg)
    if not out.rejected:
        assert not out.trim_events
        T = tau_matrix(U)
        struct = estimate_structure(T)
        for v in out.tree.forks:
            g = out.tree.label(v)
            assert tau_of_theta(g.family, g.theta) == pytest.approx(struct.fork_taus[v], abs=1e-9)


def test_worked_trace_admissible_sets():
    """Replays the printed loop choices of the five-leaf example through the set algebra."""
    N0 = default_n0("F1234")
    CL = lambda a, b: Interval(a, b)
    A_ALL = Interval(0.0, 1.0, False, True)
    n1_6 = N0 & N0 & n2("F1234", "20", 1.306)
    assert n1_6 == NestingSet({"A": A_ALL, "C": CL(1, 1.306), "20": CL(1, 1.306)})
    n1_7 = N0 & N0 & n2("F1234", "19", 0.562)
    assert n1_7 == NestingSet({"A": A_ALL, "C": CL(1, 1), "19": Interval(0, 0.562, True, False)})
    n1_8 = N0 & n1_6 & n2("F1234", "C", 1.306)
    assert n1_8 == NestingSet({"A": A_ALL, "C": CL(1, 1.306)})
    assert n1_7 & n1_8 == NestingSet({"A": A_ALL, "C": CL(1, 1)})
    assert trim(1.368, n1_6["C"]) == 1.306
    assert trim(0.534, n1_6["C"]) == 1.0


def test_pt_on_non_binary_structure():
    model = from_nested(5, (Generator("C", 0.5), [(Generator("C", 2.0), [1, 2, 3]), 4, 5]))
    U = pseudo_observations(sample_hac(model, 800, 2))
    T = tau_matrix(U)
    struct = StructureEstimate(model.skeleton(), {6: float(np.mean([T[0, 1], T[0, 2], T[1, 2]])),
                                                  7: 0.2})
    out = estimate_heterogeneous_pt(U, EstimatorConfig(("C", "20")), struct)
    assert not out.rejected and out.tree.skeleton() == model.skeleton()
    assert check_snc(out.tree)[0]


def test_dm_raw_mode_ignores_nesting():
    U = pseudo_observations(sample_ac(Generator("C", 1.0), 300, seed=9, d=4))
    out = estimate_heterogeneous_dm(U, EstimatorConfig(("C",), method="DM"), enforce_nesting=False)
    assert out.n1_sets is None and out.tree.is_binary


def test_rejection_reports_loop_index():
    # family 19 cannot carry negative dependence; pessimistic attitude rejects at the first fork
    rng = np.random.default_rng(0)
    x = rng.random(300)
    U = pseudo_observations(np.column_stack([x, 1 - x + 0.05 * rng.random(300)]))
    out = estimate(U, EstimatorConfig(("19", "20"), "pessimistic"))
    assert out.rejected and out.rejected_at == 1 and out.reason


def test_pipeline_argument_checks():
    U = sample_ac(Generator("C", 1.0), 50, seed=0, d=3)
    with pytest.raises(DomainError):
        estimate(U, EstimatorConfig(("C",), method="DM"), collapse="pre")
    with pytest.raises(DomainError):
        estimate(U, EstimatorConfig(("C",)), collapse="mid")
    with pytest.raises(DomainError):
        estimate(U, EstimatorConfig(("C",)), reest="TauMax")
