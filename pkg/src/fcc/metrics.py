"""Classification metrics, score histograms, and a random-graph density probe."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigInvalid, EstimateNotSubset
from .stats import EdgeStatistics

DEFAULT_BINS = 50


@dataclass(frozen=True)
class EvalReport:
    """Set comparison of an estimated edge set against ground truth.

    ``jd`` is the Jaccard distance 1 - |est ∩ good| / |est ∪ good| (0 when
    both sets are empty); ``pr`` the precision |est ∩ good| / |est| (0 for an
    empty estimate); ``retention`` the fraction of input edges kept.
    """

    jd: float
    pr: float
    retention: float
    true_positives: int
    false_positives: int
    false_negatives: int
    n_estimated: int
    n_good: int
    n_input: int


@dataclass(frozen=True)
class ScoreHistogram:
    """Uniform-bin histograms of scores in [0, 1], split by edge label."""

    bin_edges: np.ndarray
    good_counts: np.ndarray
    bad_counts: np.ndarray


def _canonical_keys(edges: Iterable[tuple[int, int]]) -> np.ndarray:
    """Unique int64 keys (min << 32 | max) of an undirected edge collection."""
    if isinstance(edges, tuple) and len(edges) == 2 and isinstance(edges[0], np.ndarray):
        a = np.asarray(edges[0], dtype=np.int64)
        b = np.asarray(edges[1], dtype=np.int64)
    else:
        pairs = np.asarray([(int(i), int(j)) for i, j in edges], dtype=np.int64)
        if pairs.size == 0:
            return np.empty(0, np.int64)
        a, b = pairs[:, 0], pairs[:, 1]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    if lo.size and (lo.min() < 0 or hi.max() >= 2 ** 31):
        raise EstimateNotSubset("edge endpoints outside the supported index range")
    return np.unique((lo << 32) | hi)


def evaluate(
    estimated: Iterable[tuple[int, int]],
    truth_good: Iterable[tuple[int, int]],
    input_edges: Iterable[tuple[int, int]],
) -> EvalReport:
    """Exact set arithmetic between estimate, ground truth, and input.

    Edges are canonicalized to (min, max) before comparison.  Raises
    :class:`EstimateNotSubset` when the estimate contains edges that were
    never in the input.  Accepts any iterable of pairs, or an
    ``(rows, cols)`` array tuple for large edge sets.
    """
    est = _canonical_keys(estimated)
    good = _canonical_keys(truth_good)
    inp = _canonical_keys(input_edges)
    inside = np.isin(est, inp, assume_unique=True)
    if not inside.all():
        key = int(est[~inside][0])
        raise EstimateNotSubset(
            f"estimated edge ({key >> 32}, {key & 0xffffffff}) absent from the input set"
        )
    tp = int(np.isin(est, good, assume_unique=True).sum())
    fp = int(est.size) - tp
    fn = int(good.size) - tp
    union = tp + fp + fn
    jd = 1.0 - tp / union if union else 0.0
    pr = tp / est.size if est.size else 0.0
    retention = est.size / inp.size if inp.size else 0.0
    return EvalReport(
        jd=jd, pr=pr, retention=retention,
        true_positives=tp, false_positives=fp, false_negatives=fn,
        n_estimated=int(est.size), n_good=int(good.size), n_input=int(inp.size),
    )


def score_histogram(scores: EdgeStatistics, good_mask, bins: int = DEFAULT_BINS) -> ScoreHistogram:
    """Histogram the per-edge scores separately for good and bad edges.

    Bins partition [0, 1] uniformly; the rightmost bin is closed so a score
    of exactly 1 lands in it.
    """
    if bins < 2:
        raise ConfigInvalid("need at least 2 bins")
    good_mask = np.asarray(good_mask, dtype=bool)
    if good_mask.size != len(scores):
        raise ConfigInvalid("good_mask length does not match the score list")
    edges = np.linspace(0.0, 1.0, bins + 1)
    good_counts, _ = np.histogram(scores.s[good_mask], bins=edges)
    bad_counts, _ = np.histogram(scores.s[~good_mask], bins=edges)
    return ScoreHistogram(bin_edges=edges, good_counts=good_counts, bad_counts=bad_counts)


def er_walk_density(
    n_nodes: int, edge_prob: float, trials: int, seed: int = 0
) -> tuple[float, float]:
    """Monte-Carlo estimate of the mean two-step walk count between distinct
    node pairs of a uniform random graph, next to its closed form
    (n_nodes - 2) * edge_prob**2.

    Trials use independent child seeds of ``seed`` so the result does not
    depend on evaluation order.
    """
    if trials < 1:
        raise ConfigInvalid("need at least one trial")
    if n_nodes < 2 or not 0.0 <= edge_prob <= 1.0:
        raise ConfigInvalid("need n_nodes >= 2 and edge_prob in [0, 1]")
    children = np.random.SeedSequence(seed).spawn(trials)
    total = 0.0
    for child in children:
        rng = np.random.default_rng(child)
        upper = np.triu(rng.random((n_nodes, n_nodes)) < edge_prob, k=1)
        adj = (upper | upper.T).astype(np.float64)
        walks = adj @ adj
        off_diag_sum = float(walks.sum() - np.trace(walks))
        total += off_diag_sum / (n_nodes * (n_nodes - 1))
    predicted = (n_nodes - 2) * edge_prob ** 2
    return total / trials, predicted
