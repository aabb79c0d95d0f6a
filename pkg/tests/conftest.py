"""Shared fixtures, strategies, and independent oracles."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fcc import (
    FccConfig,
    ImagePartition,
    MatchGraph,
    build_graph,
    fcc_run,
)

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


# ----------------------------------------------------------------------
# The four-image demo instance: 4 images x 2 keypoints, two keypoint
# clusters {0, 2, 4, 6} and {1, 3, 5, 7}, all pairs correctly matched
# except a single bad edge between images 0 and 1.
# ----------------------------------------------------------------------

DEMO_EDGES = [
    (0, 0, 1, 1),  # the bad match
    (0, 0, 2, 0),
    (0, 0, 3, 0),
    (0, 1, 2, 1),
    (0, 1, 3, 1),
    (1, 0, 2, 0),
    (1, 0, 3, 0),
    (1, 1, 2, 1),
    (1, 1, 3, 1),
    (2, 0, 3, 0),
    (2, 1, 3, 1),
]
DEMO_BAD_EDGE = (0, 3)
DEMO_EXPECTED_SCORES = {
    (0, 3): 0.0,
    (0, 4): 0.5,
    (0, 6): 0.5,
    (3, 5): 0.5,
    (3, 7): 0.5,
    (1, 5): 1.0,
    (1, 7): 1.0,
    (2, 4): 1.0,
    (2, 6): 1.0,
    (4, 6): 1.0,
    (5, 7): 1.0,
}
# adjacency of the demo instance, row-major over global indices
DEMO_ADJACENCY = np.array([
    [0, 0, 0, 1, 1, 0, 1, 0],
    [0, 0, 0, 0, 0, 1, 0, 1],
    [0, 0, 0, 0, 1, 0, 1, 0],
    [1, 0, 0, 0, 0, 1, 0, 1],
    [1, 0, 1, 0, 0, 0, 1, 0],
    [0, 1, 0, 1, 0, 0, 0, 1],
    [1, 0, 1, 0, 1, 0, 0, 0],
    [0, 1, 0, 1, 0, 1, 0, 0],
], dtype=float)


@pytest.fixture
def demo_partition():
    return ImagePartition([2, 2, 2, 2])


@pytest.fixture
def demo_graph(demo_partition):
    return build_graph(demo_partition, DEMO_EDGES)


@pytest.fixture
def demo_good_graph(demo_partition):
    edges = [e for e in DEMO_EDGES if e != (0, 0, 1, 1)]
    return build_graph(demo_partition, edges)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once before any timed test runs."""
    part = ImagePartition([1, 1, 1])
    g = build_graph(part, [(0, 0, 1, 0), (1, 0, 2, 0)])
    fcc_run(g, FccConfig(q=2, r=1, s=1, iterations=2))
    fcc_run(g, FccConfig(q=4, r=2, s=2, iterations=1))


# ----------------------------------------------------------------------
# Independent oracles
# ----------------------------------------------------------------------


def union_find_labels(n: int, edges) -> np.ndarray:
    """Brute-force union-find labeling, renumbered by first occurrence."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    raw = [find(i) for i in range(n)]
    relabel: dict[int, int] = {}
    out = np.empty(n, dtype=np.int64)
    for i, r in enumerate(raw):
        if r not in relabel:
            relabel[r] = len(relabel)
        out[i] = relabel[r]
    return out


def labelings_equivalent(a: np.ndarray, b: np.ndarray) -> bool:
    """True when two labelings induce the same partition of the nodes."""
    seen: dict[tuple[int, int], None] = {}
    fwd: dict[int, int] = {}
    bwd: dict[int, int] = {}
    for x, y in zip(a.tolist(), b.tolist()):
        if fwd.setdefault(x, y) != y or bwd.setdefault(y, x) != x:
            return False
        seen[(x, y)] = None
    return True


def random_binary_graph(rng: np.random.Generator, max_images=6, max_kps=10,
                        density=None) -> MatchGraph:
    """Random valid binary match graph with a random partition."""
    n_img = int(rng.integers(2, max_images + 1))
    counts = rng.integers(1, max_kps + 1, size=n_img)
    part = ImagePartition(counts.tolist())
    n = part.total_keypoints
    img = part.image_of_keypoint
    ii, jj = np.triu_indices(n, k=1)
    cross = img[ii] != img[jj]
    ii, jj = ii[cross], jj[cross]
    p = float(rng.uniform(0.05, 0.5)) if density is None else density
    keep = rng.random(ii.size) < p
    return MatchGraph.from_global_edges(part, ii[keep], jj[keep])


def random_cluster_scene(rng: np.random.Generator, max_images=5, max_clusters=8):
    """Random consistent clustering: each image sees a random subset of
    clusters, one keypoint per (image, cluster).

    Returns (partition, cluster_of_keypoint).
    """
    n_img = int(rng.integers(2, max_images + 1))
    n_clusters = int(rng.integers(2, max_clusters + 1))
    counts = []
    cluster_of = []
    for _ in range(n_img):
        k = int(rng.integers(1, n_clusters + 1))
        chosen = rng.permutation(n_clusters)[:k]
        chosen.sort()
        counts.append(k)
        cluster_of.extend(chosen.tolist())
    return ImagePartition(counts), np.asarray(cluster_of, dtype=np.int64)


def clique_graph_of_clusters(partition: ImagePartition, cluster_of: np.ndarray) -> MatchGraph:
    """All cross-image same-cluster pairs: the completed consistent graph."""
    n = partition.total_keypoints
    img = partition.image_of_keypoint
    ii, jj = np.triu_indices(n, k=1)
    same = cluster_of[ii] == cluster_of[jj]
    cross = img[ii] != img[jj]
    keep = same & cross
    return MatchGraph.from_global_edges(partition, ii[keep], jj[keep])


def edge_subset_graph(rng: np.random.Generator, g: MatchGraph, keep_prob: float) -> MatchGraph:
    rows, cols, _ = g.edge_arrays()
    keep = rng.random(rows.size) < keep_prob
    return MatchGraph.from_global_edges(
        g.partition, rows[keep].astype(np.int64), cols[keep].astype(np.int64)
    )
