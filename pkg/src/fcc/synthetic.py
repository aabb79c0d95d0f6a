"""Synthetic multi-image matching instances with ground truth.

The model: scene points are sampled uniformly on the unit sphere; camera
centers are isotropic Gaussians pushed one unit further from the origin so
every camera sits outside the sphere; each camera looks at the origin with a
uniformly random roll about its optical axis.  Keypoints are pinhole
projections of the points that land inside the image with positive depth.
Camera pairs are sampled independently, matched by shared scene points, and
then corrupted either by replacing matches with wrong-target matches or by
removing matches and adding false ones.

Randomness comes from a single PCG64 stream per seed, consumed in a fixed
documented order: scene points, camera centers, camera rolls, then pair
selection over image pairs in lexicographic order, then per-pair corruption
in the same order.  :func:`generate_instance` reproduces instances
byte-for-byte given identical configuration and seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigInvalid
from .graph import ImagePartition, MatchGraph

logger = logging.getLogger(__name__)

_UP = np.array([0.0, 0.0, 1.0])
_UP_FALLBACK = np.array([0.0, 1.0, 0.0])
_PARALLEL_EPS = 1e-9


@dataclass(frozen=True)
class ReplaceCorruption:
    """Each true match is independently replaced by a false match with
    probability ``prob``."""

    prob: float = 0.5


@dataclass(frozen=True)
class RemoveAddCorruption:
    """Each true match is removed with probability ``remove_prob``; each
    cross pair of keypoints that was never a true match is added as a false
    match with probability ``add_prob``."""

    remove_prob: float = 0.0
    add_prob: float = 0.0


@dataclass(frozen=True)
class SyntheticConfig:
    num_points: int = 100
    num_cameras: int = 100
    pair_prob: float = 0.5
    corruption: ReplaceCorruption | RemoveAddCorruption | None = None
    min_common_points: int = 5
    focal_length: float = 500.0
    image_size: tuple[float, float] = (1000.0, 1000.0)
    camera_cov_scale: float = 10.0
    seed: int = 0

    def validate(self) -> None:
        if self.num_points < 2 or self.num_cameras < 2:
            raise ConfigInvalid("need at least 2 points and 2 cameras")
        if not 0.0 <= self.pair_prob <= 1.0:
            raise ConfigInvalid("pair_prob must lie in [0, 1]")
        if isinstance(self.corruption, ReplaceCorruption):
            if not 0.0 <= self.corruption.prob <= 1.0:
                raise ConfigInvalid("replace probability must lie in [0, 1]")
        elif isinstance(self.corruption, RemoveAddCorruption):
            for p in (self.corruption.remove_prob, self.corruption.add_prob):
                if not 0.0 <= p <= 1.0:
                    raise ConfigInvalid("corruption probabilities must lie in [0, 1]")
        elif self.corruption is not None:
            raise ConfigInvalid(f"unknown corruption spec {self.corruption!r}")
        if self.min_common_points < 0:
            raise ConfigInvalid("min_common_points must be nonnegative")
        if self.focal_length <= 0 or min(self.image_size) <= 0:
            raise ConfigInvalid("focal length and image size must be positive")
        if self.camera_cov_scale <= 0:
            raise ConfigInvalid("camera_cov_scale must be positive")


@dataclass
class SyntheticScene:
    """Scene points, camera poses, and per-camera projected keypoints.

    ``keypoint_ids[c]`` holds the scene point ids visible in camera ``c`` in
    ascending order and ``keypoint_pixels[c]`` the matching pixel positions.
    Rotations are world-to-camera row bases (rows: right, up, optical axis).
    """

    points: np.ndarray
    camera_centers: np.ndarray
    camera_rotations: np.ndarray
    keypoint_ids: list[np.ndarray]
    keypoint_pixels: list[np.ndarray]


@dataclass
class Projection:
    """Keypoint bookkeeping after dropping degenerate cameras."""

    partition: ImagePartition
    truth_point_ids: np.ndarray
    camera_indices: np.ndarray
    visible_ids: list[np.ndarray]
    dropped_cameras: int


@dataclass
class LabeledInstance:
    """A corrupted match graph plus ground truth.

    ``good_mask`` aligns with ``graph.edge_arrays()``: an edge is good when
    both endpoints project the same scene point (decided after corruption).
    """

    graph: MatchGraph
    good_mask: np.ndarray
    partition: ImagePartition
    truth_point_ids: np.ndarray
    dropped_replacements: int = 0

    def good_edges(self) -> set[tuple[int, int]]:
        rows, cols, _ = self.graph.edge_arrays()
        return set(zip(rows[self.good_mask].tolist(), cols[self.good_mask].tolist()))

    def all_edges(self) -> set[tuple[int, int]]:
        return self.graph.edge_set()


def look_at_rotation(center: np.ndarray, roll: float) -> np.ndarray:
    """World-to-camera rotation for a camera at ``center`` looking at the
    origin, rolled counterclockwise by ``roll`` about the optical axis.

    The pre-roll frame uses up-reference (0, 0, 1), falling back to
    (0, 1, 0) when the axis is numerically parallel to it.
    """
    forward = -center / np.linalg.norm(center)
    up_ref = _UP if abs(forward @ _UP) < 1.0 - _PARALLEL_EPS else _UP_FALLBACK
    right = np.cross(up_ref, forward)
    right /= np.linalg.norm(right)
    up = np.cross(forward, right)
    c, s = np.cos(roll), np.sin(roll)
    return np.stack([c * right + s * up, -s * right + c * up, forward])


def project_point(point, center, rotation, cfg: SyntheticConfig):
    """Pinhole projection; returns (pixel, depth) with the principal point at
    the image center."""
    cam = rotation @ (np.asarray(point) - center)
    depth = cam[2]
    w, h = cfg.image_size
    pixel = np.array([
        cfg.focal_length * cam[0] / depth + w / 2.0,
        cfg.focal_length * cam[1] / depth + h / 2.0,
    ])
    return pixel, depth


def generate_scene(cfg: SyntheticConfig, rng: np.random.Generator | None = None) -> SyntheticScene:
    """Sample points and cameras, then project keypoints.

    Draw order: point Gaussians, center Gaussians, rolls.  Projection itself
    consumes no randomness.  Points are unit vectors; center norms are the
    Gaussian norms plus one.
    """
    cfg.validate()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    pts = rng.standard_normal((cfg.num_points, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    centers = rng.standard_normal((cfg.num_cameras, 3)) * np.sqrt(cfg.camera_cov_scale)
    norms = np.linalg.norm(centers, axis=1, keepdims=True)
    centers = centers * (1.0 + 1.0 / norms)
    rolls = rng.uniform(0.0, 2.0 * np.pi, cfg.num_cameras)
    rotations = np.stack([look_at_rotation(c, r) for c, r in zip(centers, rolls)])

    w, h = cfg.image_size
    ids, pixels = [], []
    for c in range(cfg.num_cameras):
        cam = (pts - centers[c]) @ rotations[c].T
        depth = cam[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            px = cfg.focal_length * cam[:, 0] / depth + w / 2.0
            py = cfg.focal_length * cam[:, 1] / depth + h / 2.0
        visible = (depth > 0) & (px >= 0) & (px <= w) & (py >= 0) & (py <= h)
        vis_ids = np.flatnonzero(visible)
        ids.append(vis_ids.astype(np.int64))
        pixels.append(np.column_stack([px[vis_ids], py[vis_ids]]))
    return SyntheticScene(points=pts, camera_centers=centers,
                          camera_rotations=rotations,
                          keypoint_ids=ids, keypoint_pixels=pixels)


def project_keypoints(scene: SyntheticScene, cfg: SyntheticConfig) -> Projection:
    """Partition and truth labels over the scene's keypoints.

    Cameras seeing fewer than two points cannot participate in matching and
    are dropped with a logged warning (images are renumbered over the
    survivors).
    """
    kept = [c for c, ids in enumerate(scene.keypoint_ids) if ids.size >= 2]
    dropped = len(scene.keypoint_ids) - len(kept)
    if dropped:
        logger.warning("dropped %d cameras with fewer than 2 visible points", dropped)
    if len(kept) < 2:
        raise ConfigInvalid("fewer than 2 cameras see enough points to match")
    counts = [scene.keypoint_ids[c].size for c in kept]
    partition = ImagePartition(counts)
    truth = np.concatenate([scene.keypoint_ids[c] for c in kept])
    return Projection(
        partition=partition,
        truth_point_ids=truth,
        camera_indices=np.asarray(kept, dtype=np.int64),
        visible_ids=[scene.keypoint_ids[c] for c in kept],
        dropped_cameras=dropped,
    )


def generate_matches(
    projection: Projection,
    cfg: SyntheticConfig,
    rng: np.random.Generator | None = None,
) -> LabeledInstance:
    """Sample camera pairs, create true matches, and corrupt them.

    Image pairs are visited in lexicographic order.  A selected pair is kept
    only when the two cameras share at least ``min_common_points`` visible
    points (checked before corruption).  Replace corruption draws one
    Bernoulli per true match, then one block of uniform variates that
    sequentially assigns each corrupted match a uniformly random still-free
    wrong-identity target among the vacated ones (preserving
    at-most-one-match-per-keypoint within the pair); a corrupted match with
    no valid target left is dropped.  Remove/add corruption deletes true
    matches and Bernoulli-samples false matches over every cross pair that
    was never a true match (the full grid is drawn row-major so the stream
    advance is data-independent).
    """
    cfg.validate()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    part = projection.partition
    n_img = part.image_count
    rows_out: list[np.ndarray] = []
    cols_out: list[np.ndarray] = []
    dropped_repl = 0

    for a in range(n_img):
        ids_a = projection.visible_ids[a]
        off_a = int(part.offsets[a])
        for b in range(a + 1, n_img):
            take = rng.random() < cfg.pair_prob
            if not take:
                continue
            ids_b = projection.visible_ids[b]
            common = np.intersect1d(ids_a, ids_b, assume_unique=True)
            if common.size < cfg.min_common_points:
                continue
            off_b = int(part.offsets[b])
            loc_a = np.searchsorted(ids_a, common)
            loc_b = np.searchsorted(ids_b, common)
            cor = cfg.corruption
            if cor is None or (isinstance(cor, ReplaceCorruption) and cor.prob == 0.0):
                rows_out.append(off_a + loc_a)
                cols_out.append(off_b + loc_b)
                continue
            if isinstance(cor, ReplaceCorruption):
                hit = rng.random(common.size) < cor.prob
                keep_idx = np.flatnonzero(~hit)
                rows_out.append(off_a + loc_a[keep_idx])
                cols_out.append(off_b + loc_b[keep_idx])
                cor_idx = np.flatnonzero(hit)
                if cor_idx.size:
                    picks = np.empty(cor_idx.size, np.int64)
                    kernels.assign_replacement_targets(
                        common[cor_idx], rng.random(cor_idx.size), picks)
                    ok = picks >= 0
                    dropped_repl += int(np.count_nonzero(~ok))
                    rows_out.append(off_a + loc_a[cor_idx[ok]])
                    cols_out.append(off_b + loc_b[cor_idx[picks[ok]]])
            else:
                removed = rng.random(common.size) < cor.remove_prob
                keep_idx = np.flatnonzero(~removed)
                rows_out.append(off_a + loc_a[keep_idx])
                cols_out.append(off_b + loc_b[keep_idx])
                if cor.add_prob > 0.0:
                    grid = rng.random((ids_a.size, ids_b.size)) < cor.add_prob
                    grid[loc_a, loc_b] = False
                    add_r, add_c = np.nonzero(grid)
                    rows_out.append(off_a + add_r)
                    cols_out.append(off_b + add_c)

    if rows_out:
        rows = np.concatenate(rows_out)
        cols = np.concatenate(cols_out)
    else:
        rows = np.empty(0, np.int64)
        cols = np.empty(0, np.int64)
    graph = MatchGraph.from_global_edges(part, rows, cols)
    er, ec, _ = graph.edge_arrays()
    truth = projection.truth_point_ids
    good_mask = truth[er] == truth[ec]
    return LabeledInstance(graph=graph, good_mask=good_mask, partition=part,
                           truth_point_ids=truth, dropped_replacements=dropped_repl)


def generate_instance(cfg: SyntheticConfig) -> LabeledInstance:
    """Full pipeline on one stream: scene, projection, matches."""
    rng = np.random.default_rng(cfg.seed)
    scene = generate_scene(cfg, rng=rng)
    projection = project_keypoints(scene, cfg)
    return generate_matches(projection, cfg, rng=rng)
