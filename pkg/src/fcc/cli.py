"""Command-line front end.

Subcommands: ``generate`` (synthetic instance + truth), ``filter`` (run the
reweighting loop on a match file), ``eval`` (compare an estimate against
truth), ``hist`` (score histograms as CSV), ``bench`` (timing/size scaling).

Exit codes: 0 success, 2 file parse problem, 3 invalid configuration,
4 I/O failure.  All outputs are pure functions of the input files and flags;
reports additionally carry wall-clock timings, which are the one part of any
output that varies between runs.
"""

from __future__ import annotations

import functools
import sys
import time

import click
import numpy as np

from .errors import (
    ConfigInvalid,
    EstimateNotSubset,
    FccError,
    HeaderMismatch,
    ParseError,
)
from .fileio import (
    read_match_file,
    read_scores_file,
    require_same_partition,
    write_histogram_csv,
    write_match_file,
    write_report,
    write_scores_file,
)
from .filtering import FccConfig, fcc_run, large_scale_schedule, midsize_schedule
from .graph import MatchGraph
from .metrics import evaluate, score_histogram
from .stats import EdgeStatistics, sparse_power, sparsity_of
from .synthetic import (
    RemoveAddCorruption,
    ReplaceCorruption,
    SyntheticConfig,
    generate_instance,
)

PARSE_EXIT = 2
CONFIG_EXIT = 3
IO_EXIT = 4


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ParseError, HeaderMismatch, EstimateNotSubset) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(PARSE_EXIT)
        except ConfigInvalid as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(CONFIG_EXIT)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(IO_EXIT)
        except FccError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(CONFIG_EXIT)

    return wrapper


def _parse_corruption(text: str):
    spec = text.strip().lower()
    if spec in ("none", ""):
        return None
    kind, _, params = spec.partition(":")
    try:
        if kind == "replace":
            return ReplaceCorruption(prob=float(params))
        if kind in ("remove-add", "remove_add"):
            q0, q1 = (float(p) for p in params.split(","))
            return RemoveAddCorruption(remove_prob=q0, add_prob=q1)
    except ValueError as exc:
        raise ConfigInvalid(f"bad corruption spec {text!r}") from exc
    raise ConfigInvalid(
        f"unknown corruption {text!r}; use none, replace:RHO or remove-add:Q0,Q1"
    )


def _parse_schedule(text: str, iterations: int):
    spec = text.strip().lower()
    if spec == "0.05t":
        return midsize_schedule
    if spec == "0.1t":
        return large_scale_schedule
    try:
        taus = [float(tok) for tok in spec.split(",")]
    except ValueError as exc:
        raise ConfigInvalid(
            f"bad schedule {text!r}; use '0.05t', '0.1t' or a comma list"
        ) from exc
    if len(taus) != iterations:
        raise ConfigInvalid(
            f"schedule lists {len(taus)} thresholds for {iterations} iterations"
        )
    return taus


def _set_workers(workers: int | None) -> int:
    """Pin the compiled-kernel thread budget; never changes results."""
    import numba

    available = int(numba.config.NUMBA_NUM_THREADS)
    if workers is None:
        return available
    if workers < 1:
        raise ConfigInvalid("workers must be a positive integer")
    chosen = min(workers, available)
    numba.set_num_threads(chosen)
    return chosen


@click.group()
def main():
    """Filter corrupted keypoint matches by cluster-consistency scores."""


@main.command()
@click.option("-m", "--points", type=int, default=100, show_default=True,
              help="Number of 3D scene points.")
@click.option("-n", "--cameras", type=int, default=100, show_default=True,
              help="Number of cameras.")
@click.option("--pair-prob", type=float, default=0.5, show_default=True,
              help="Probability of matching each camera pair.")
@click.option("--corruption", default="none", show_default=True,
              help="none, replace:RHO, or remove-add:Q0,Q1.")
@click.option("--min-common", type=int, default=5, show_default=True,
              help="Drop camera pairs sharing fewer visible points.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Match file to write.")
@click.option("--truth-out", required=True, type=click.Path(dir_okay=False),
              help="Truth file (good edges) to write.")
@_guarded
def generate(points, cameras, pair_prob, corruption, min_common, seed, out, truth_out):
    """Generate a synthetic corrupted instance plus its ground truth."""
    cfg = SyntheticConfig(
        num_points=points,
        num_cameras=cameras,
        pair_prob=pair_prob,
        corruption=_parse_corruption(corruption),
        min_common_points=min_common,
        seed=seed,
    )
    instance = generate_instance(cfg)
    write_match_file(out, instance.graph)
    rows, cols, _ = instance.graph.edge_arrays()
    truth = MatchGraph.from_global_edges(
        instance.partition,
        rows[instance.good_mask].astype(np.int64),
        cols[instance.good_mask].astype(np.int64),
    )
    write_match_file(truth_out, truth)
    click.echo(
        f"wrote {out} ({instance.graph.nnz // 2} edges, "
        f"{int(instance.good_mask.sum())} good) and {truth_out}"
    )


@main.command(name="filter")
@click.option("-i", "--input", "input_path", required=True,
              type=click.Path(exists=False, dir_okay=False))
@click.option("--q", type=int, default=4, show_default=True)
@click.option("--r", type=int, default=2, show_default=True)
@click.option("--s", type=int, default=2, show_default=True)
@click.option("-T", "--iterations", type=int, default=10, show_default=True)
@click.option("--mode", type=click.Choice(["soft", "hard"]), default="soft",
              show_default=True)
@click.option("--tau", type=float, default=0.5, show_default=True,
              help="Final threshold on the scores.")
@click.option("--tau-schedule", default="0.05t", show_default=True,
              help="Hard-mode per-iteration thresholds: 0.05t, 0.1t, or a comma list.")
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Filtered match file to write.")
@click.option("--scores-out", type=click.Path(dir_okay=False),
              help="Optional per-edge score file.")
@click.option("--workers", type=int, default=None,
              help="Thread budget for compiled kernels (results never depend on it).")
@_guarded
def filter_cmd(input_path, q, r, s, iterations, mode, tau, tau_schedule, out,
               scores_out, workers):
    """Filter a match file and write the surviving edges."""
    _set_workers(workers)
    graph = read_match_file(input_path)
    cfg = FccConfig(
        q=q, r=r, s=s, iterations=iterations, mode=mode,
        threshold_schedule=_parse_schedule(tau_schedule, iterations),
        final_threshold=tau,
    )
    result = fcc_run(graph, cfg)
    write_match_file(out, result.filtered)
    if scores_out:
        write_scores_file(scores_out, result.scores, graph.partition)
    click.echo(
        f"kept {result.filtered.nnz // 2} of {graph.nnz // 2} edges "
        f"after {result.iterations_run} iterations"
    )


@main.command()
@click.option("--est", required=True, type=click.Path(dir_okay=False),
              help="Estimated (filtered) match file.")
@click.option("--truth", required=True, type=click.Path(dir_okay=False),
              help="Ground-truth good-edge file.")
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False),
              help="Original match file.")
@click.option("--report", required=True, type=click.Path(dir_okay=False),
              help="JSON report to write.")
@_guarded
def eval(est, truth, input_path, report):
    """Score an estimate against ground truth and write a JSON report."""
    t0 = time.perf_counter()
    est_graph = read_match_file(est)
    truth_graph = read_match_file(truth)
    input_graph = read_match_file(input_path)
    require_same_partition(est_graph, input_graph, "estimate vs input")
    require_same_partition(truth_graph, input_graph, "truth vs input")
    t_parse = time.perf_counter() - t0
    t0 = time.perf_counter()
    rep = evaluate(est_graph.edge_set(), truth_graph.edge_set(), input_graph.edge_set())
    t_eval = time.perf_counter() - t0
    write_report(report, {
        "command": "eval",
        "inputs": {"est": str(est), "truth": str(truth), "input": str(input_path)},
        "metrics": {
            "jd": rep.jd,
            "pr": rep.pr,
            "retention": rep.retention,
            "true_positives": rep.true_positives,
            "false_positives": rep.false_positives,
            "false_negatives": rep.false_negatives,
            "n_estimated": rep.n_estimated,
            "n_good": rep.n_good,
            "n_input": rep.n_input,
        },
        "timings_seconds": {"parse": t_parse, "evaluate": t_eval},
    })
    click.echo(f"jd={rep.jd:.6f} pr={rep.pr:.6f} retention={rep.retention:.6f}")


@main.command()
@click.option("--scores", required=True, type=click.Path(dir_okay=False),
              help="Score file from 'filter --scores-out'.")
@click.option("--truth", required=True, type=click.Path(dir_okay=False),
              help="Ground-truth good-edge file (also provides the partition).")
@click.option("--bins", type=int, default=50, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="CSV file to write.")
@_guarded
def hist(scores, truth, bins, out):
    """Histogram scores of good and bad edges into a CSV."""
    truth_graph = read_match_file(truth)
    (rows, cols), values = read_scores_file(scores, truth_graph.partition)
    stats = EdgeStatistics(rows=rows.astype(np.int32), cols=cols.astype(np.int32),
                           s=values)
    good_set = truth_graph.edge_set()
    good_mask = np.fromiter(
        ((int(i), int(j)) in good_set for i, j in zip(rows, cols)),
        dtype=bool, count=rows.size,
    )
    write_histogram_csv(out, score_histogram(stats, good_mask, bins=bins))
    click.echo(f"wrote {out}")


@main.command()
@click.option("--sizes", required=True,
              help="Comma-separated ascending camera counts, e.g. 50,100,200.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="JSON report to write.")
@click.option("--workers", type=int, default=None,
              help="Thread budget for compiled kernels (results never depend on it).")
@_guarded
def bench(sizes, seed, out, workers):
    """Time instance generation and per-iteration filtering across sizes.

    Each size n uses 100 scene points, pair probability min(1, 50/n) (a
    fixed expected pair count per camera, so edges grow linearly with n),
    and remove-corruption 0.5.
    """
    chosen_workers = _set_workers(workers)
    try:
        size_list = [int(tok) for tok in sizes.split(",")]
    except ValueError as exc:
        raise ConfigInvalid(f"bad sizes list {sizes!r}") from exc
    if size_list != sorted(size_list) or len(set(size_list)) != len(size_list):
        raise ConfigInvalid("sizes must be strictly ascending")
    rows = []
    for n in size_list:
        cfg = SyntheticConfig(
            num_points=100,
            num_cameras=n,
            pair_prob=min(1.0, 50.0 / n),
            corruption=RemoveAddCorruption(remove_prob=0.5, add_prob=0.0),
            seed=seed,
        )
        t0 = time.perf_counter()
        instance = generate_instance(cfg)
        t_gen = time.perf_counter() - t0
        t0 = time.perf_counter()
        x2 = sparse_power(instance.graph, 2)
        t_power = time.perf_counter() - t0
        run = fcc_run(instance.graph, FccConfig(iterations=2), trace=True)
        rows.append({
            "cameras": n,
            "keypoints": instance.graph.num_keypoints,
            "nnz_x": sparsity_of(instance.graph).nnz,
            "nnz_x2": sparsity_of(x2).nnz,
            "seconds_generate": t_gen,
            "seconds_power2": t_power,
            "seconds_per_iteration": [t.seconds for t in run.trace],
            "edges_alive_per_iteration": [t.edges_alive for t in run.trace],
        })
        click.echo(
            f"n={n}: nnz(x)={rows[-1]['nnz_x']} nnz(x^2)={rows[-1]['nnz_x2']} "
            f"iteration_seconds={['%.3f' % t for t in rows[-1]['seconds_per_iteration']]}"
        )
    write_report(out, {
        "command": "bench",
        "config": {"sizes": size_list, "seed": seed, "workers": chosen_workers},
        "rows": rows,
    })


if __name__ == "__main__":
    main()
