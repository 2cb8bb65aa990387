"""Command-line interface.

Data files are comma-separated, one observation per row, with an optional
single header row that is detected automatically.  Raw data is converted to
pseudo-observations unless ``--pseudo`` says it already is.

Exit codes: 0 success, 2 usage error, 3 estimation rejected, 4 data error.
"""

from __future__ import annotations

import csv
import functools
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import hac
from .collapse import REESTIMATORS, collapse_sequence, cross_child_average, parse_policy, select_collapsed
from .errors import DataError, DomainError, HacError
from .estimate import EstimatorConfig, estimate
from .experiment import (
    ExperimentConfig,
    replicates_to_csv,
    resolve_model,
    rows_to_csv,
    run_experiment,
    summarise,
    tau_distance,
)
from .generators import FAMILIES
from .gof import sn_e, sn_k, sn_r
from .kendall import as_matrix, pseudo_observations, tau_matrix
from .sample import sample_hac

EXIT_REJECTED = 3
EXIT_DATA = 4


def _guard(fn):
    """Map library errors to exit codes; usage errors are left to click."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (HacError, OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DATA)
    return wrapper


def _is_number(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def read_data(path, pseudo: bool = False) -> np.ndarray:
    """Read a CSV data file; ranks are taken unless ``pseudo`` is set."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(f.strip() for f in r)]
    if rows and not all(_is_number(f) for f in rows[0]):
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no observations")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: rows have differing numbers of fields {sorted(widths)}")
    try:
        X = np.array([[float(f) for f in r] for r in rows])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    X = as_matrix(X)
    if pseudo:
        if np.any((X <= 0) | (X >= 1)):
            raise DataError(f"{path}: pseudo-observations must lie strictly inside (0, 1)")
        return X
    return pseudo_observations(X)


def write_matrix(X, out) -> None:
    if out is None:
        np.savetxt(sys.stdout, X, fmt="%.17g", delimiter=",")
    else:
        np.savetxt(out, X, fmt="%.17g", delimiter=",", encoding="utf-8")


def _emit(text: str, out) -> None:
    if out is None:
        click.echo(text, nl=not text.endswith("\n"))
    else:
        Path(out).write_text(text, encoding="utf-8")


def _families(value: str) -> tuple[str, ...]:
    fams = tuple(f.strip() for f in value.split(",") if f.strip())
    bad = [f for f in fams if f not in FAMILIES]
    if bad or not fams:
        raise click.BadParameter(f"families must be a comma list from {', '.join(FAMILIES)}")
    return fams


def _policy(value: str) -> str:
    try:
        parse_policy(value)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc
    return value


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Estimate, sample and evaluate hierarchical Archimedean copulas."""


@main.command()
@click.argument("model")
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="Sample size.")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Output CSV (default stdout).")
@_guard
def sample(model, n, seed, out):
    """Draw N observations from MODEL (a HAC document or a bundled model name)."""
    write_matrix(sample_hac(resolve_model(model), n, seed), out)


@main.command()
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--pseudo", is_flag=True, help="Data is already pseudo-observations.")
@click.option("--out", type=click.Path(dir_okay=False))
@_guard
def tau(data, pseudo, out):
    """Sample Kendall's tau matrix of DATA."""
    write_matrix(tau_matrix(read_data(data, pseudo)), out)


def _outcome_report(U, T, res, cfg, collapse, reest, policy) -> dict:
    report = {
        "families": list(cfg.families),
        "attitude": cfg.attitude,
        "method": cfg.method,
        "gof_stat": cfg.gof_stat,
        "g": cfg.g,
        "collapse": collapse or "none",
        "reestimate": reest,
        "forks": policy,
        "rejected": res.rejected,
        "trim_events": [{"fork": e.fork, "family": e.family,
                         "raw": None if math.isnan(e.raw) else e.raw, "trimmed": e.trimmed}
                        for e in res.trim_events],
    }
    if res.rejected:
        report["rejected_at"] = res.rejected_at
        report["reason"] = res.reason
        return report
    report["snc_ok"] = hac.check_snc(res.tree)[0]
    report["gof_E"] = sn_e(U, res.tree)
    report["tau_distance"] = tau_distance(T, res.tree)
    if res.trace is not None:
        report["collapse_deltas"] = res.trace.deltas
    return report


@main.command("estimate")
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--families", default="A,C,19,20", show_default=True,
              help="Comma-separated candidate families.")
@click.option("--attitude", type=click.Choice(["optimistic", "pessimistic"]),
              default="optimistic", show_default=True)
@click.option("--method", type=click.Choice(["pt", "dm"], case_sensitive=False),
              default="pt", show_default=True)
@click.option("--g", "g", type=click.Choice(["max", "avg"]), default="max", show_default=True)
@click.option("--sn", type=click.Choice(["E", "K", "R"]), default="R", show_default=True)
@click.option("--collapse", type=click.Choice(["none", "pre", "post"]), default="none",
              show_default=True)
@click.option("--reestimate", type=click.Choice(REESTIMATORS), default="KTauAvg",
              show_default=True)
@click.option("--forks", default="auto", show_default=True,
              help="Tree chosen after collapsing: auto, binary, ac or forks=K.")
@click.option("--pseudo", is_flag=True, help="Data is already pseudo-observations.")
@click.option("--out", type=click.Path(dir_okay=False), help="Estimated HAC document.")
@click.option("--report", type=click.Path(dir_okay=False), help="JSON report.")
@_guard
def estimate_cmd(data, families, attitude, method, g, sn, collapse, reestimate, forks,
                 pseudo, out, report):
    """Estimate a HAC from DATA."""
    method = method.upper()
    collapse = None if collapse == "none" else collapse
    if method == "DM" and collapse == "pre":
        raise click.UsageError("--method dm cannot be combined with --collapse pre")
    policy = _policy(forks) if collapse else "binary"
    try:
        cfg = EstimatorConfig(_families(families), attitude, sn, g, method)
    except DomainError as exc:
        raise click.UsageError(str(exc)) from exc
    U = read_data(data, pseudo)
    T = tau_matrix(U)
    res = estimate(U, cfg, collapse, reestimate, policy, taus=T)
    doc = _outcome_report(U, T, res, cfg, collapse, reestimate, policy)
    if report:
        Path(report).write_text(json.dumps(doc, indent=2), encoding="utf-8")
    if res.rejected:
        click.echo(f"rejected at loop index {res.rejected_at} (fork {U.shape[1] + res.rejected_at}): "
                   f"{res.reason}", err=True)
        sys.exit(EXIT_REJECTED)
    for e in res.trim_events:
        click.echo(f"trimmed fork {e.fork} ({e.family}): {e.raw:.6g} -> {e.trimmed:.6g}", err=True)
    _emit(hac.dumps(res.tree, indent=2) + "\n", out)


@main.command("collapse")
@click.argument("model")
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--reestimate", type=click.Choice(REESTIMATORS), default="KTauAvg",
              show_default=True)
@click.option("--forks", default="auto", show_default=True,
              help="Tree to output: auto, binary, ac or forks=K.")
@click.option("--pseudo", is_flag=True, help="Data is already pseudo-observations.")
@click.option("--trace", "trace_out", type=click.Path(dir_okay=False),
              help="CSV of forks remaining and minimal distances.")
@click.option("--out", type=click.Path(dir_okay=False), help="Selected HAC document.")
@_guard
def collapse_cmd(model, data, reestimate, forks, pseudo, trace_out, out):
    """Collapse the binary HAC MODEL using taus of DATA.

    Unlabelled trees are collapsed on fork taus averaged from the data.
    """
    policy = _policy(forks)
    tree = resolve_model(model)
    U = read_data(data, pseudo)
    if U.shape[1] != tree.d:
        raise DataError(f"data has {U.shape[1]} columns but the model has {tree.d} leaves")
    T = tau_matrix(U)
    if tree.labels is None:
        fork_taus = {v: cross_child_average(T, [tree.leaves(c) for c in tree.children[v]])
                     for v in tree.forks}
        trace = collapse_sequence(tree, T, reestimate, fork_taus=fork_taus)
    else:
        trace = collapse_sequence(tree, T, reestimate)
    chosen = select_collapsed(trace, policy)
    if trace_out:
        Path(trace_out).write_text(trace.to_csv(), encoding="utf-8")
    _emit(hac.dumps(chosen.tree, indent=2) + "\n", out)


@main.command()
@click.argument("model")
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--sn", type=click.Choice(["E", "K", "R"]), default="E", show_default=True,
              help="K and R need a bivariate single-fork model.")
@click.option("--pseudo", is_flag=True, help="Data is already pseudo-observations.")
@_guard
def gof(model, data, sn, pseudo):
    """Goodness-of-fit statistic of MODEL on DATA."""
    tree = resolve_model(model)
    if tree.labels is None:
        raise DataError("the model needs generator labels")
    if sn != "E" and tree.d != 2:
        raise click.UsageError("--sn K and --sn R need a bivariate model")
    U = read_data(data, pseudo)
    if U.shape[1] != tree.d:
        raise DataError(f"data has {U.shape[1]} columns but the model has {tree.d} leaves")
    if sn == "E":
        value = sn_e(U, tree)
    else:
        stat = sn_k if sn == "K" else sn_r
        value = stat(U[:, 0], U[:, 1], tree.label(tree.root))
    click.echo(repr(value))


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), required=True,
              help="Directory for replicates.csv and summary.csv.")
@_guard
def experiment(config, out):
    """Run a simulation study described by the JSON file CONFIG.

    Cells run in parallel on up to HAC_THREADS processes.
    """
    with open(config, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{config}: invalid JSON: {exc}") from exc
    try:
        cfg = ExperimentConfig.from_dict(doc, base=Path(config).resolve().parent)
    except DomainError as exc:
        raise click.UsageError(str(exc)) from exc
    results = run_experiment(cfg)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "replicates.csv").write_text(replicates_to_csv(results), encoding="utf-8")
    (out / "summary.csv").write_text(rows_to_csv(summarise(results)), encoding="utf-8")
    click.echo(f"{len(results)} estimates written to {out}")


if __name__ == "__main__":
    main()
