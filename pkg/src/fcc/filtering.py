"""Iterative match filtering by cluster-consistency scores.

One run alternates two steps starting from the observed binary graph X:
compute per-edge scores s = s1 / (s1 + s2) on the support of X (always the
original support), then feed the scores back as edge weights for the next
round of weighted walk counting.  In hard mode each round additionally
binarizes the scores at a per-iteration threshold.  A final threshold turns
the last scores into the filtered binary graph.

Implementation notes:

* Y always shares the CSR structure of X; dropped edges become explicit
  zeros, which keeps every power's sparsity pattern fixed across iterations
  so patterns are discovered once and only values are refilled.
* Powers Y^r and Y^s are built once per iteration and shared by both masked
  statistics; the per-image row sums reuse the same product kernel against
  the keypoint->image indicator.
* Everything is deterministic; identical input and configuration give
  bit-identical results.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import ConfigInvalid, FccError
from .graph import MatchGraph
from .stats import (
    MAX_POWER,
    EdgeStatistics,
    _csr_parts,
    _image_indicator,
    _spgemm,
    combine,
)

CONVERGENCE_EPS = 1e-12


def midsize_schedule(t: int) -> float:
    """Per-iteration threshold 0.05 * t, suited to graphs of moderate size."""
    return 0.05 * t


def large_scale_schedule(t: int) -> float:
    """Per-iteration threshold 0.1 * t for large inputs needing few passes."""
    return 0.1 * t


@dataclass
class FccConfig:
    """Parameters of the filtering loop.

    ``q`` is the walk length of the within-cluster statistic and must equal
    ``r + s``, the split used for the cross-cluster statistic.  In soft mode
    scores are fed back as weights unchanged and ``threshold_schedule`` is
    ignored; in hard mode iteration t binarizes at tau_t (default 0.05 * t).
    Thresholds compare strictly (score > tau).
    """

    q: int = 4
    r: int = 2
    s: int = 2
    iterations: int = 10
    mode: str = "soft"
    threshold_schedule: Callable[[int], float] | Sequence[float] | None = None
    final_threshold: float = 0.5

    def validate(self) -> None:
        if self.mode not in ("soft", "hard"):
            raise ConfigInvalid(f"mode must be 'soft' or 'hard', got {self.mode!r}")
        for name in ("q", "r", "s", "iterations"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigInvalid(f"{name} must be a positive integer, got {v!r}")
        if self.r + self.s != self.q:
            raise ConfigInvalid(f"need r + s = q, got {self.r} + {self.s} != {self.q}")
        if max(self.r, self.s) > MAX_POWER:
            raise ConfigInvalid(f"r and s must be at most {MAX_POWER}")
        if not 0.0 <= self.final_threshold <= 1.0:
            raise ConfigInvalid("final_threshold must lie in [0, 1]")
        if self.mode == "hard":
            for t, tau in enumerate(self.resolved_schedule(), start=1):
                if not 0.0 <= tau <= 1.0:
                    raise ConfigInvalid(f"iteration threshold tau_{t}={tau} outside [0, 1]")

    def resolved_schedule(self) -> list[float]:
        """Per-iteration thresholds tau_1..tau_T (hard mode only)."""
        sched = self.threshold_schedule
        if sched is None:
            sched = midsize_schedule
        if callable(sched):
            return [float(sched(t)) for t in range(1, self.iterations + 1)]
        taus = [float(v) for v in sched]
        if len(taus) != self.iterations:
            raise ConfigInvalid(
                f"explicit schedule has {len(taus)} entries for {self.iterations} iterations"
            )
        return taus


@dataclass
class IterationTrace:
    """Snapshot of one iteration: the scores fed into the next round."""

    iteration: int
    scores: np.ndarray
    edges_alive: int
    seconds: float


@dataclass
class FccResult:
    """Outcome of a filtering run."""

    filtered: MatchGraph
    scores: EdgeStatistics
    iterations_run: int
    trace: list[IterationTrace] = field(default_factory=list)


class _PowerCache:
    """Fixed-pattern powers of Y and their per-image row sums.

    Patterns are discovered on the first fill and only refilled afterwards,
    which is valid because Y's structure never grows.
    """

    def __init__(self, indptr, indices, n, indicator):
        self.base = (indptr, indices, None, (n, n))
        self.n = n
        self.indicator = indicator
        self.powers: dict[int, tuple] = {}
        self.rowsums: dict[int, tuple] = {}

    def fill(self, y: np.ndarray, need: set[int]) -> None:
        indptr, indices, _, shape = self.base
        chain = []
        if max(need) >= 2:
            chain.append(2)
        if 3 in need:
            chain.append(3)
        if 4 in need:
            chain.append(4)
        parts = {1: (indptr, indices, y, shape)}
        for p in chain:
            left = parts[2] if p > 2 else parts[1]
            right = parts[1] if p == 3 else (parts[2] if p == 4 else parts[1])
            if p not in self.powers:
                self.powers[p] = _spgemm(left, right)
            else:
                cp, ci, cd, pshape = self.powers[p]
                lp, li, ld, _ = left
                rp, ri, rd, _ = right
                kernels.spgemm_refill(lp, li, ld, rp, ri, rd, cp, ci, cd,
                                      np.int64(pshape[1]))
            parts[p] = self.powers[p]
        for p in need:
            src = parts[p]
            if p not in self.rowsums:
                self.rowsums[p] = _spgemm(src, self.indicator)
            else:
                cp, ci, cd, rshape = self.rowsums[p]
                sp_, si, sd, _ = src
                ip, ii, idata, _ = self.indicator
                kernels.spgemm_refill(sp_, si, sd, ip, ii, idata, cp, ci, cd,
                                      np.int64(rshape[1]))
        self.parts = parts


def _empty_result(x: MatchGraph) -> FccResult:
    empty = np.empty(0, np.int32)
    scores = EdgeStatistics(rows=empty, cols=empty.copy(), s1=np.empty(0),
                            s1_plus_s2=np.empty(0), s=np.empty(0))
    filtered = MatchGraph.from_global_edges(x.partition, np.empty(0, np.int64),
                                            np.empty(0, np.int64))
    return FccResult(filtered=filtered, scores=scores, iterations_run=0)


def fcc_run(x: MatchGraph, cfg: FccConfig, trace: bool = False) -> FccResult:
    """Run the full filtering loop and threshold the final scores.

    ``x`` must be binary.  The returned result carries the filtered binary
    graph (strictly above ``cfg.final_threshold``), the last iteration's
    scores on the original support, and the number of iterations actually
    executed (soft mode stops early once no score moves by more than 1e-12).
    With ``trace=True`` each iteration's scores are also recorded.
    """
    cfg.validate()
    if not x.is_binary():
        raise ConfigInvalid("input graph must be binary")
    er, ec, _ = x.edge_arrays()
    if er.size == 0:
        return _empty_result(x)
    n = x.num_keypoints
    taus = cfg.resolved_schedule() if cfg.mode == "hard" else None

    e_rows64 = er.astype(np.int64)
    e_rowptr = np.searchsorted(e_rows64, np.arange(n + 1, dtype=np.int64)).astype(np.int64)
    slots_ij = np.empty(er.size, np.int64)
    slots_ji = np.empty(er.size, np.int64)
    kernels.find_slots(x.indptr, x.indices, er, ec, slots_ij)
    kernels.find_slots(x.indptr, x.indices, ec, er, slots_ji)

    y = x.data.copy()
    cache = _PowerCache(x.indptr, x.indices, n, _image_indicator(x.partition))
    need = {cfg.r, cfg.s}

    stats = None
    prev = None
    iterations_run = cfg.iterations
    traces: list[IterationTrace] = []
    s1 = np.zeros(er.size)
    s12 = np.zeros(er.size)
    for t in range(1, cfg.iterations + 1):
        t0 = time.perf_counter()
        cache.fill(y, need)
        pr = cache.parts[cfg.r]
        ps = cache.parts[cfg.s]
        kernels.sddmm(pr[0], pr[1], pr[2], ps[0], ps[1], ps[2],
                      e_rowptr, ec, s1, np.int64(n))
        rr = cache.rowsums[cfg.r]
        rs = cache.rowsums[cfg.s]
        kernels.sddmm(rr[0], rr[1], rr[2], rs[0], rs[1], rs[2],
                      e_rowptr, ec, s12, np.int64(x.partition.image_count))
        if t == 1:
            # walk counts of a binary graph are integers; anything else means
            # a broken kernel
            if s1.size and float(np.max(np.abs(s1 - np.rint(s1)))) > 1e-9:
                raise FccError("non-integral walk counts on binary input")
        stats = combine(s1, s12, (er, ec))
        s_vals = stats.s
        if cfg.mode == "hard":
            s_vals = (s_vals > taus[t - 1]).astype(np.float64)
            stats.s = s_vals
        if trace:
            traces.append(IterationTrace(
                iteration=t,
                scores=s_vals.copy(),
                edges_alive=int(np.count_nonzero(s_vals)),
                seconds=time.perf_counter() - t0,
            ))
        if cfg.mode == "soft" and prev is not None:
            if float(np.max(np.abs(s_vals - prev))) <= CONVERGENCE_EPS:
                iterations_run = t
                break
        y[slots_ij] = s_vals
        y[slots_ji] = s_vals
        prev = s_vals.copy()

    keep = stats.s > cfg.final_threshold
    filtered = MatchGraph._from_canonical(
        x.partition,
        er[keep].astype(np.int64),
        ec[keep].astype(np.int64),
        np.ones(int(keep.sum())),
    )
    return FccResult(filtered=filtered, scores=stats, iterations_run=iterations_run,
                     trace=traces)


def fcc_scores(x: MatchGraph, cfg: FccConfig) -> EdgeStatistics:
    """Last-iteration scores on the original support, without the final
    threshold; the raw material for score histograms."""
    return fcc_run(x, cfg).scores
