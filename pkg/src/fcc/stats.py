"""Path-count statistics over match graphs.

For an edge (i, j) of the observed graph X and powers r + s = q:

* the within-cluster statistic ``s1`` is the (weighted) number of length-q
  walks from i to j, computed as the dot product of row i of X^r with row j
  of X^s;
* ``s1_plus_s2`` additionally counts walk pairs that meet two *different*
  keypoints of one image (a within-image hop), computed from per-image row
  sums of the two powers;
* the combined score ``s = s1 / (s1 + s2)`` lies in [0, 1] and is small for
  matches that straddle two keypoint clusters.

Both masked operations are evaluated only on a requested support and never
materialize the full matrix products, which can be dense even when X is
sparse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import ConfigInvalid, PowerTooLarge, TooLargeForOracle
from .graph import ImagePartition, MatchGraph

MAX_POWER = 4
ORACLE_MAX_KEYPOINTS = 200


@dataclass
class EdgeStatistics:
    """Per-edge statistics on a fixed support (one orientation per edge).

    ``s1`` and ``s1_plus_s2`` are None when only final scores are known
    (for example after re-reading a scores file).
    """

    rows: np.ndarray
    cols: np.ndarray
    s: np.ndarray
    s1: np.ndarray | None = None
    s1_plus_s2: np.ndarray | None = None

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    def as_dict(self) -> dict[tuple[int, int], float]:
        return dict(zip(self.edges, self.s.tolist()))

    def __len__(self) -> int:
        return int(self.rows.size)


@dataclass(frozen=True)
class SparsityStats:
    """Size of a sparse matrix: entry count and mean entries per column."""

    nnz: int
    avg_nnz_per_column: float


# -- array plumbing -----------------------------------------------------


def _csr_parts(m) -> tuple[np.ndarray, np.ndarray, np.ndarray, tuple[int, int]]:
    """CSR arrays (indptr int64, indices int32, data float64) of a matrix.

    Accepts a MatchGraph, a SciPy sparse matrix, or a raw (indptr, indices,
    data, shape) tuple.  Duplicate entries are merged (the kernels scatter
    rows into dense scratch, which requires unique columns per row).
    """
    if isinstance(m, MatchGraph):
        n = m.num_keypoints
        return m.indptr, m.indices, m.data, (n, n)
    if isinstance(m, tuple):
        indptr, indices, data, shape = m
        return indptr, indices, data, shape
    m = sp.csr_matrix(m)
    if not m.has_canonical_format:
        m = m.copy()
        m.sum_duplicates()
    return (
        m.indptr.astype(np.int64),
        m.indices.astype(np.int32),
        m.data.astype(np.float64),
        m.shape,
    )


def _support_arrays(support) -> tuple[np.ndarray, np.ndarray]:
    """Normalize a support to (rows, cols) int arrays."""
    if isinstance(support, tuple) and len(support) == 2:
        rows = np.asarray(support[0], dtype=np.int64)
        cols = np.asarray(support[1], dtype=np.int32)
        return rows, cols
    pairs = np.asarray(list(support), dtype=np.int64)
    if pairs.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int32)
    return pairs[:, 0], pairs[:, 1].astype(np.int32)


def _grouped_dot(z_parts, w_parts, rows, cols) -> np.ndarray:
    """Dot of Z row i with W row j for every pair, in the given pair order."""
    zp, zi, zd, zshape = z_parts
    wp, wi, wd, wshape = w_parts
    out = np.zeros(rows.size)
    if rows.size == 0:
        return out
    order = np.lexsort((cols, rows))
    srows = rows[order]
    scols = np.ascontiguousarray(cols[order])
    n = zshape[0]
    e_rowptr = np.searchsorted(srows, np.arange(n + 1, dtype=np.int64)).astype(np.int64)
    sout = np.zeros(rows.size)
    kernels.sddmm(zp, zi, zd, wp, wi, wd, e_rowptr, scols, sout,
                  np.int64(max(zshape[1], wshape[1])))
    out[order] = sout
    return out


def _image_indicator(partition: ImagePartition):
    """CSR arrays of the N x image_count keypoint->image indicator."""
    n = partition.total_keypoints
    return (
        np.arange(n + 1, dtype=np.int64),
        partition.image_of_keypoint,
        np.ones(n),
        (n, partition.image_count),
    )


def _spgemm(a_parts, b_parts):
    """Sparse product returning raw CSR parts (unsorted column order).

    Dispatches between a serial single-pass kernel and a two-pass parallel
    kernel on the current thread budget; both emit identical column order
    and bitwise-identical values.
    """
    import numba

    ap, ai, ad, ashape = a_parts
    bp, bi, bd, bshape = b_parts
    nrows = np.int64(ashape[0])
    ncols = np.int64(bshape[1])
    if numba.get_num_threads() == 1:
        row_sizes = (bp[1:] - bp[:-1])[ai] if ai.size else np.empty(0, np.int64)
        bound = int(row_sizes.sum()) if ai.size else 0
        cp, ci, cd = kernels.spgemm_fused(
            ap, ai, ad, bp, bi, bd, nrows, ncols, np.int64(max(bound, 1)))
    else:
        counts = kernels.spgemm_count(ap, ai, bp, bi, nrows, ncols)
        cp = np.cumsum(counts)
        nnz = int(cp[-1])
        ci = np.empty(nnz, np.int32)
        cd = np.empty(nnz, np.float64)
        kernels.spgemm_fill(ap, ai, ad, bp, bi, bd, cp, ci, cd, ncols)
    return cp, ci, cd, (ashape[0], bshape[1])


# -- public operations ---------------------------------------------------


def sparse_power(g, p: int) -> sp.csr_matrix:
    """p-th power of a graph's weight matrix as a canonical sparse matrix.

    For binary graphs, entry (i, j) counts length-p walks from i to j;
    block-diagonal entries appear for p >= 2.  Powers above 4 densify and
    are rejected.
    """
    if p < 1:
        raise ConfigInvalid("power must be a positive integer")
    if p > MAX_POWER:
        raise PowerTooLarge(f"power {p} above the supported maximum {MAX_POWER}")
    parts = _csr_parts(g)
    result = parts
    # chain through repeated squaring-ish products: 2 = 1*1, 3 = 2*1, 4 = 2*2
    if p >= 2:
        result = _spgemm(parts, parts)
    if p == 3:
        result = _spgemm(result, parts)
    elif p == 4:
        result = _spgemm(result, result)
    cp, ci, cd, shape = result
    out = sp.csr_matrix((cd.copy(), ci.copy(), cp.copy()), shape=shape)
    out.sort_indices()
    out.eliminate_zeros()
    return out


def masked_s1(g_r, g_s, support) -> np.ndarray:
    """Within-cluster statistic on a support.

    ``g_r`` and ``g_s`` are powers of the same symmetric graph; the value at
    (i, j) equals the dot product of column i of g_r with column j of g_s
    (rows, by symmetry).  The full product g_r @ g_s is never formed.
    """
    rows, cols = _support_arrays(support)
    return _grouped_dot(_csr_parts(g_r), _csr_parts(g_s), rows, cols)


def masked_s1_plus_s2(g_r, g_s, support, partition: ImagePartition) -> np.ndarray:
    """Sum of within-cluster and cross-cluster statistics on a support.

    For (i, j) this is sum over images l of
    (sum of g_r row i over keypoints of l) * (sum of g_s row j over keypoints
    of l), computed from per-image blocked row sums of the two powers.
    """
    rows, cols = _support_arrays(support)
    indicator = _image_indicator(partition)
    rr = _spgemm(_csr_parts(g_r), indicator)
    rs = rr if g_s is g_r else _spgemm(_csr_parts(g_s), indicator)
    return _grouped_dot(rr, rs, rows, cols)


def combine(s1: np.ndarray, s1_plus_s2: np.ndarray, support) -> EdgeStatistics:
    """Combined score s = s1 / (s1 + s2) with the 0/0 convention s = 0.

    An observed edge with no supporting walk at all (s1 = s2 = 0) carries the
    same evidence the score penalizes, so it scores 0; this also keeps every
    score inside [0, 1].
    """
    rows, cols = _support_arrays(support)
    s1 = np.asarray(s1, dtype=np.float64)
    s1_plus_s2 = np.asarray(s1_plus_s2, dtype=np.float64)
    if not (s1.size == s1_plus_s2.size == rows.size):
        raise ConfigInvalid("statistic arrays and support differ in length")
    den = np.where(s1_plus_s2 > 0.0, s1_plus_s2, 1.0)
    s = np.where(s1_plus_s2 > 0.0, s1 / den, 0.0)
    np.clip(s, 0.0, 1.0, out=s)
    return EdgeStatistics(
        rows=rows.astype(np.int32),
        cols=cols.astype(np.int32),
        s1=s1,
        s1_plus_s2=s1_plus_s2,
        s=s,
    )


def dense_oracle(g: MatchGraph, r: int, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference computation of the two statistics by dense matrix products.

    Returns full matrices (X^(r+s), X^r D X^s) where D connects every pair
    of distinct keypoints within one image.  Cubic in the keypoint count and
    capped accordingly; exists to cross-check the masked operations.
    """
    n = g.num_keypoints
    if n > ORACLE_MAX_KEYPOINTS:
        raise TooLargeForOracle(
            f"{n} keypoints above the dense-oracle cap {ORACLE_MAX_KEYPOINTS}"
        )
    x = g.matrix.toarray()
    d = np.zeros((n, n))
    for img in range(g.partition.image_count):
        lo = int(g.partition.offsets[img])
        hi = int(g.partition.offsets[img + 1])
        d[lo:hi, lo:hi] = 1.0
        d[range(lo, hi), range(lo, hi)] = 0.0
    s1 = np.linalg.matrix_power(x, r + s)
    s2 = np.linalg.matrix_power(x, r) @ d @ np.linalg.matrix_power(x, s)
    return s1, s2


def sparsity_of(m) -> SparsityStats:
    """Nonzero count and average nonzeros per column of a sparse matrix."""
    indptr, indices, data, shape = _csr_parts(m)
    nnz = int(np.count_nonzero(data))
    return SparsityStats(nnz=nnz, avg_nnz_per_column=nnz / shape[1])
