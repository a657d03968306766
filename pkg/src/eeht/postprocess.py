"""Clustering postprocessing over the model's diagonal scores, and the
end-to-end extraction pipeline.

The point list p starts as diag(X).  Clusters are prefixes of the columns
sorted by L1 distance to an anchor column; a cluster qualifies when its
score (sum of p over members) strictly exceeds r/(r+1).  Each iteration
picks the qualifying cluster of minimal diameter, selects one element from
it, and zeroes p on everything selected so far.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .linalg import as_array, mrsa, truncated_svd
from .rce import RceConfig, RceTrace, rce_solve


class SelectionMethod(Enum):
    DIAG_TOP_R = "diag-top-r"
    MAX_POINT = "max-point"
    CENTROID_MRSA = "centroid-mrsa"


class EmptyClusterFamilyError(RuntimeError):
    """No cluster reaches the score threshold: infeasible point list."""


@dataclass
class ClusterSelection:
    chosen: list            # r column indices, pairwise distinct
    clusters: list          # r index lists
    method: SelectionMethod


@dataclass
class ExtractionResult:
    indices: list
    objective: float
    method: SelectionMethod
    cluster_sizes: list
    rounds: int
    trace: RceTrace | None = None


def min_diam_cluster(A, p, r: int, dist=None):
    """Minimal-diameter cluster whose score exceeds r/(r+1).

    Over all anchors i, the columns are sorted by L1 distance to a_i
    (ties by ascending index); the qualifying cluster in the prefix chain
    of minimal diameter is the shortest prefix whose cumulative score
    exceeds the threshold.  Returns (anchor, members); global ties go to
    the smaller anchor index.
    """
    arr = as_array(A)
    p = np.asarray(p, dtype=np.float64).ravel()
    n = arr.shape[1]
    threshold = r / (r + 1.0)
    if np.sum(p) <= threshold:
        raise EmptyClusterFamilyError(
            f"total score {np.sum(p):.6f} <= threshold {threshold:.6f}")
    if dist is None:
        dist = _l1_distances(arr)
    best = None
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        csum = np.cumsum(p[order])
        hits = np.nonzero(csum > threshold)[0]
        if hits.size == 0:
            continue
        k = int(hits[0])
        diam = float(dist[i, order[k]])
        if best is None or diam < best[0]:
            best = (diam, i, [int(u) for u in order[:k + 1]])
    if best is None:
        raise EmptyClusterFamilyError("no qualifying cluster for any anchor")
    return best[1], best[2]


def _l1_distances(arr: np.ndarray) -> np.ndarray:
    n = arr.shape[1]
    dist = np.empty((n, n))
    for i in range(n):
        dist[i] = np.sum(np.abs(arr - arr[:, [i]]), axis=0)
    return dist


def select(A, diag_x, r: int, method: SelectionMethod) -> ClusterSelection:
    """Pick r column indices from the diagonal scores of the model solution."""
    arr = as_array(A)
    diag_x = np.asarray(diag_x, dtype=np.float64).ravel()
    n = arr.shape[1]
    if n < r:
        raise ValueError(f"fewer columns ({n}) than requested picks ({r})")

    if method is SelectionMethod.DIAG_TOP_R:
        order = np.argsort(-diag_x, kind="stable")
        chosen = [int(i) for i in order[:r]]
        return ClusterSelection(chosen=chosen,
                                clusters=[[i] for i in chosen], method=method)

    dist = _l1_distances(arr)
    p = diag_x.copy()
    chosen, clusters = [], []
    while len(chosen) < r:
        anchor, members = min_diam_cluster(arr, p, r, dist=dist)
        candidates = [u for u in members if u not in chosen]
        if not candidates:
            raise EmptyClusterFamilyError(
                "cluster contains no unselected element")
        if method is SelectionMethod.MAX_POINT:
            u = candidates[int(np.argmax(p[candidates]))]
        else:
            u = _centroid_pick(arr, members, candidates)
        chosen.append(int(u))
        clusters.append(members)
        p[members] = 0.0
    return ClusterSelection(chosen=chosen, clusters=clusters, method=method)


def _centroid_pick(arr, members, candidates):
    """Element of the cluster closest to its centroid in MRSA, falling
    back to Euclidean distance for near-constant reduced vectors."""
    centroid = arr[:, members].mean(axis=1)
    if np.linalg.norm(centroid - centroid.mean()) < 1e-12:
        d = np.linalg.norm(arr[:, candidates] - centroid[:, None], axis=0)
        return candidates[int(np.argmin(d))]
    scores = []
    for u in candidates:
        col = arr[:, u]
        if np.linalg.norm(col - col.mean()) < 1e-12:
            scores.append(float(np.linalg.norm(col - centroid)))
        else:
            scores.append(mrsa(centroid, col))
    return candidates[int(np.argmin(scores))]


def eeht_extract(A, cfg: RceConfig, method: SelectionMethod,
                 reduce: bool = True) -> ExtractionResult:
    """Full pipeline: rank-r size reduction, expansion solve, selection.

    With reduce=True the model and all cluster geometry live in the
    size-reduced r x n space; returned indices refer to the original
    columns either way.
    """
    arr = as_array(A)
    d, n = arr.shape
    if not 1 <= cfg.r <= min(d, n):
        raise ValueError(f"r={cfg.r} out of range for a {d}x{n} matrix")
    work = truncated_svd(arr, cfg.r).reduced() if reduce else arr
    X, trace = rce_solve(work, cfg)
    sel = select(work, np.diag(X), cfg.r, method)
    return ExtractionResult(indices=sel.chosen, objective=trace.objective,
                            method=method,
                            cluster_sizes=[len(c) for c in sel.clusters],
                            rounds=len(trace.rounds), trace=trace)
