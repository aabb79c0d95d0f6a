"""Block-partitioned sparse keypoint match graphs.

Keypoints of all images share one global index space: keypoint ``k`` of
image ``a`` has global index ``offsets[a] + k``.  A match graph is a
symmetric nonnegative sparse matrix over that space whose block diagonal
(within-image pairs) is identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cs_components

from .errors import IndexOutOfRange, WithinImageEdge


class ImagePartition:
    """Partition of the global keypoint index space into per-image blocks.

    Parameters
    ----------
    keypoints_per_image : sequence of positive int
        Number of keypoints detected in each image.
    """

    def __init__(self, keypoints_per_image: Sequence[int]):
        counts = np.asarray(keypoints_per_image, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0:
            raise IndexOutOfRange("need at least one image")
        if np.any(counts <= 0):
            raise IndexOutOfRange("every image needs at least one keypoint")
        self.keypoints_per_image = tuple(int(c) for c in counts)
        self.image_count = int(counts.size)
        self.offsets = np.concatenate(([0], np.cumsum(counts)))
        self.total_keypoints = int(self.offsets[-1])
        # dense keypoint -> image lookup, also used as the adjacency of the
        # within-image graph in implicit form (never materialized)
        self.image_of_keypoint = np.repeat(
            np.arange(self.image_count, dtype=np.int32), counts
        )

    def image_of(self, keypoint: int) -> int:
        """Image that owns global keypoint index ``keypoint``."""
        if not 0 <= keypoint < self.total_keypoints:
            raise IndexOutOfRange(f"keypoint {keypoint} outside [0, {self.total_keypoints})")
        return int(self.image_of_keypoint[keypoint])

    def global_index(self, image: int, local: int) -> int:
        """Global index of keypoint ``local`` in ``image``."""
        if not 0 <= image < self.image_count:
            raise IndexOutOfRange(f"image {image} outside [0, {self.image_count})")
        if not 0 <= local < self.keypoints_per_image[image]:
            raise IndexOutOfRange(
                f"keypoint {local} outside image {image} with "
                f"{self.keypoints_per_image[image]} keypoints"
            )
        return int(self.offsets[image]) + local

    def local_index(self, keypoint: int) -> tuple[int, int]:
        """Inverse of :meth:`global_index`: (image, local) of a global index."""
        img = self.image_of(keypoint)
        return img, keypoint - int(self.offsets[img])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ImagePartition)
            and self.keypoints_per_image == other.keypoints_per_image
        )

    def __hash__(self):
        return hash(self.keypoints_per_image)

    def __repr__(self):
        return f"ImagePartition({list(self.keypoints_per_image)!r})"


class MatchGraph:
    """Symmetric weighted match graph with a zero block diagonal.

    Stored as CSR arrays holding both orientations of every undirected edge
    with sorted column indices.  Instances are immutable by convention:
    operations return new graphs.  Binary graphs carry weight exactly 1 on
    every edge; reweighted graphs carry weights in (0, 1].  Zero weights are
    never stored (a zero weight is the same as an absent edge).
    """

    def __init__(self, partition, indptr, indices, data):
        self.partition = partition
        self.indptr = indptr
        self.indices = indices
        self.data = data
        self._edge_cache = None

    # -- construction --------------------------------------------------

    @classmethod
    def from_global_edges(
        cls,
        partition: ImagePartition,
        rows: np.ndarray,
        cols: np.ndarray,
        weights: np.ndarray | None = None,
    ) -> "MatchGraph":
        """Build a graph from undirected edges given as global index pairs.

        Duplicate edges collapse to a single entry keeping the first weight;
        zero-weight edges are dropped.  Raises on within-image pairs or
        out-of-range indices.
        """
        n = partition.total_keypoints
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.size != cols.size:
            raise IndexOutOfRange("rows and cols differ in length")
        if weights is None:
            weights = np.ones(rows.size)
        else:
            weights = np.asarray(weights, dtype=np.float64)
            if weights.size != rows.size:
                raise IndexOutOfRange("weights length mismatch")
            if np.any(weights < 0.0):
                raise IndexOutOfRange("negative edge weight")
        if rows.size:
            if rows.min() < 0 or cols.min() < 0 or max(rows.max(), cols.max()) >= n:
                raise IndexOutOfRange("global keypoint index out of range")
            img = partition.image_of_keypoint
            if np.any(img[rows] == img[cols]):
                raise WithinImageEdge("match connects two keypoints of one image")
        keep = weights > 0.0
        rows, cols, weights = rows[keep], cols[keep], weights[keep]
        lo = np.minimum(rows, cols)
        hi = np.maximum(rows, cols)
        order = np.lexsort((hi, lo))
        lo, hi, weights = lo[order], hi[order], weights[order]
        if lo.size:
            first = np.concatenate(([True], (np.diff(lo) != 0) | (np.diff(hi) != 0)))
            lo, hi, weights = lo[first], hi[first], weights[first]
        return cls._from_canonical(partition, lo, hi, weights)

    @classmethod
    def _from_canonical(cls, partition, lo, hi, weights):
        """Internal: build CSR from deduplicated canonical (lo < hi) edges."""
        n = partition.total_keypoints
        coo_r = np.concatenate([lo, hi])
        coo_c = np.concatenate([hi, lo])
        coo_w = np.concatenate([weights, weights])
        order = np.lexsort((coo_c, coo_r))
        coo_r, coo_c, coo_w = coo_r[order], coo_c[order], coo_w[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, coo_r + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(partition, indptr, coo_c.astype(np.int32), coo_w)

    # -- views -----------------------------------------------------------

    @property
    def num_keypoints(self) -> int:
        return self.partition.total_keypoints

    @property
    def nnz(self) -> int:
        """Stored entries, counting both orientations."""
        return int(self.data.size)

    @property
    def matrix(self) -> sp.csr_matrix:
        """SciPy view of the adjacency (copies index arrays)."""
        n = self.num_keypoints
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(n, n))

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Canonical undirected edges: (rows, cols, weights) with row < col,
        sorted lexicographically."""
        if self._edge_cache is None:
            counts = np.diff(self.indptr)
            rows = np.repeat(np.arange(self.num_keypoints, dtype=np.int32), counts)
            mask = rows < self.indices
            self._edge_cache = (rows[mask], self.indices[mask], self.data[mask])
        return self._edge_cache

    def edge_set(self) -> set[tuple[int, int]]:
        rows, cols, _ = self.edge_arrays()
        return set(zip(rows.tolist(), cols.tolist()))

    def is_binary(self) -> bool:
        return bool(np.all(self.data == 1.0))

    def weight(self, i: int, j: int) -> float:
        """Weight of edge (i, j), 0.0 if absent."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        t = np.searchsorted(self.indices[lo:hi], j)
        if t < hi - lo and self.indices[lo + t] == j:
            return float(self.data[lo + t])
        return 0.0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MatchGraph)
            and self.partition == other.partition
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return (
            f"MatchGraph(images={self.partition.image_count}, "
            f"keypoints={self.num_keypoints}, edges={self.nnz // 2})"
        )


@dataclass(frozen=True)
class ComponentLabeling:
    """Connected component labels over the global keypoint space."""

    labels: np.ndarray
    component_count: int

    def groups(self) -> list[np.ndarray]:
        """Member keypoints of each component, ascending within a component."""
        order = np.argsort(self.labels, kind="stable")
        bounds = np.searchsorted(self.labels[order], np.arange(self.component_count + 1))
        return [order[bounds[c]:bounds[c + 1]] for c in range(self.component_count)]


def build_graph(
    partition: ImagePartition,
    edges: Iterable[tuple[int, int, int, int]],
) -> MatchGraph:
    """Build a binary match graph from (image_a, keypoint_k, image_b, keypoint_l)
    tuples.

    Both orientations are stored; duplicate edges collapse silently (real
    match files contain duplicates).  Raises :class:`WithinImageEdge` when
    a == b and :class:`IndexOutOfRange` on bad indices.
    """
    edges = list(edges)
    if not edges:
        return MatchGraph.from_global_edges(partition, np.empty(0, np.int64), np.empty(0, np.int64))
    arr = np.asarray(edges, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise IndexOutOfRange("edges must be (image_a, k, image_b, l) tuples")
    a, k, b, l = arr.T
    ncam = partition.image_count
    counts = np.asarray(partition.keypoints_per_image, dtype=np.int64)
    if a.min() < 0 or b.min() < 0 or a.max() >= ncam or b.max() >= ncam:
        raise IndexOutOfRange("image index out of range")
    if np.any(a == b):
        raise WithinImageEdge("match connects two keypoints of one image")
    if np.any(k < 0) or np.any(k >= counts[a]) or np.any(l < 0) or np.any(l >= counts[b]):
        raise IndexOutOfRange("keypoint index out of range for its image")
    rows = partition.offsets[a] + k
    cols = partition.offsets[b] + l
    return MatchGraph.from_global_edges(partition, rows, cols)


def connected_components(g: MatchGraph) -> ComponentLabeling:
    """Undirected connected components over positive-weight edges."""
    count, labels = _cs_components(g.matrix, directed=False)
    return ComponentLabeling(labels=labels.astype(np.int64), component_count=int(count))


def cycle_consistent_completion(g: MatchGraph) -> MatchGraph:
    """Smallest cycle-consistent supergraph: every connected component becomes
    a clique over its members, except that within-image pairs are never added
    (they can only arise from corrupted input and stay excluded).

    Output is binary.  Quadratic in component size; intended for analysis and
    tests, not for the filtering loop.
    """
    labeling = connected_components(g)
    img = g.partition.image_of_keypoint
    rows_out = []
    cols_out = []
    for members in labeling.groups():
        if members.size < 2:
            continue
        lo, hi = np.triu_indices(members.size, k=1)
        mi, mj = members[lo], members[hi]
        cross = img[mi] != img[mj]
        rows_out.append(mi[cross])
        cols_out.append(mj[cross])
    if rows_out:
        rows = np.concatenate(rows_out)
        cols = np.concatenate(cols_out)
    else:
        rows = np.empty(0, np.int64)
        cols = np.empty(0, np.int64)
    return MatchGraph.from_global_edges(g.partition, rows, cols)
