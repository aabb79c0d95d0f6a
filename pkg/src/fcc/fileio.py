"""Plain-text on-disk formats.

Match/truth file::

    n N            <- image count, total keypoint count
    m_0 ... m_{n-1}  <- keypoints per image
    a k b l [w]    <- one undirected edge per line, images 0-based, a < b,
                      optional weight (absent means 1)

Scores file: ``a k b l s`` lines with the same index conventions.  Histogram
files are CSV with header ``bin_lo,bin_hi,good,bad``.  Reports are JSON.

All files are UTF-8 with LF line endings and '.' decimal separators; weights
and scores are printed with six fractional digits.  Writers emit edges in
ascending (a, k, b, l) order, so writing is a pure function of the graph and
repeated writes are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import FccError, HeaderMismatch, ParseError
from .graph import ImagePartition, MatchGraph
from .metrics import ScoreHistogram
from .stats import EdgeStatistics


def _format_weight(w: float) -> str:
    return f"{w:.6f}"


def _global_to_local(partition: ImagePartition, rows, cols):
    img = partition.image_of_keypoint
    offs = partition.offsets
    a = img[rows]
    b = img[cols]
    return a, rows - offs[a], b, cols - offs[b]


def write_match_file(path, graph: MatchGraph) -> None:
    """Write a graph; the weight column appears only for non-binary graphs."""
    part = graph.partition
    rows, cols, weights = graph.edge_arrays()
    a, k, b, l = _global_to_local(part, rows.astype(np.int64), cols.astype(np.int64))
    lines = [f"{part.image_count} {part.total_keypoints}",
             " ".join(str(m) for m in part.keypoints_per_image)]
    if graph.is_binary():
        lines.extend(f"{aa} {kk} {bb} {ll}" for aa, kk, bb, ll in zip(a, k, b, l))
    else:
        lines.extend(
            f"{aa} {kk} {bb} {ll} {_format_weight(ww)}"
            for aa, kk, bb, ll, ww in zip(a, k, b, l, weights)
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_match_file(path) -> MatchGraph:
    """Parse a match or truth file into a graph."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if len(lines) < 2:
        raise ParseError(f"{path}: expected a header of two lines")
    try:
        n_str, total_str = lines[0].split()
        n, total = int(n_str), int(total_str)
    except ValueError as exc:
        raise ParseError(f"{path}:1: bad header line {lines[0]!r}") from exc
    try:
        counts = [int(tok) for tok in lines[1].split()]
    except ValueError as exc:
        raise ParseError(f"{path}:2: bad keypoint counts") from exc
    if len(counts) != n:
        raise ParseError(f"{path}:2: expected {n} keypoint counts, got {len(counts)}")
    if sum(counts) != total:
        raise ParseError(f"{path}:2: keypoint counts sum to {sum(counts)}, header says {total}")
    try:
        partition = ImagePartition(counts)
    except FccError as exc:
        raise ParseError(f"{path}:2: {exc}") from exc

    rows, cols, weights = [], [], []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        toks = line.split()
        if len(toks) not in (4, 5):
            raise ParseError(f"{path}:{lineno}: expected 'a k b l [w]', got {line!r}")
        try:
            a, k, b, l = (int(t) for t in toks[:4])
            w = float(toks[4]) if len(toks) == 5 else 1.0
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad edge line {line!r}") from exc
        if a >= b:
            raise ParseError(f"{path}:{lineno}: image indices must satisfy a < b")
        try:
            rows.append(partition.global_index(a, k))
            cols.append(partition.global_index(b, l))
        except FccError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        weights.append(w)
    try:
        return MatchGraph.from_global_edges(
            partition,
            np.asarray(rows, dtype=np.int64),
            np.asarray(cols, dtype=np.int64),
            np.asarray(weights, dtype=np.float64),
        )
    except FccError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def write_scores_file(path, scores: EdgeStatistics, partition: ImagePartition) -> None:
    """Write per-edge scores as 'a k b l s' lines."""
    rows = scores.rows.astype(np.int64)
    cols = scores.cols.astype(np.int64)
    a, k, b, l = _global_to_local(partition, rows, cols)
    lines = [
        f"{aa} {kk} {bb} {ll} {_format_weight(ss)}"
        for aa, kk, bb, ll, ss in zip(a, k, b, l, scores.s)
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_scores_file(path, partition: ImagePartition):
    """Parse a scores file into ((rows, cols), values) global-index arrays."""
    text = Path(path).read_text(encoding="utf-8")
    rows, cols, vals = [], [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        toks = line.split()
        if len(toks) != 5:
            raise ParseError(f"{path}:{lineno}: expected 'a k b l s', got {line!r}")
        try:
            a, k, b, l = (int(t) for t in toks[:4])
            s = float(toks[4])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad scores line {line!r}") from exc
        try:
            rows.append(partition.global_index(a, k))
            cols.append(partition.global_index(b, l))
        except FccError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        vals.append(s)
    return (
        (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)),
        np.asarray(vals, dtype=np.float64),
    )


def write_histogram_csv(path, hist: ScoreHistogram) -> None:
    lines = ["bin_lo,bin_hi,good,bad"]
    for i in range(hist.good_counts.size):
        lines.append(
            f"{hist.bin_edges[i]:.6f},{hist.bin_edges[i + 1]:.6f},"
            f"{int(hist.good_counts[i])},{int(hist.bad_counts[i])}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_report(path, report: dict) -> None:
    """Write a key/value report as sorted, indented JSON."""
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def require_same_partition(first: MatchGraph, second: MatchGraph, what: str) -> None:
    if first.partition != second.partition:
        raise HeaderMismatch(f"{what}: files describe different image partitions")
