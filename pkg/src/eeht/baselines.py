"""Greedy pure-pixel selection by successive orthogonal projection (SPA)."""

from __future__ import annotations

import numpy as np

from .linalg import as_array


class RankDeficiencyError(RuntimeError):
    """The residual vanished before the requested number of picks."""


def spa(A, r: int) -> list:
    """Select r column indices greedily by maximum residual L2 norm.

    Each iteration picks the column with the largest L2 norm of the
    current residual (ties broken by lowest index) and deflates all
    columns against the picked residual direction.  Directions are
    re-orthogonalized against earlier picks every iteration to limit
    drift.
    """
    arr = as_array(A)
    d, n = arr.shape
    if not 1 <= r <= min(d, n):
        raise ValueError(f"r={r} out of range for a {d}x{n} matrix")
    R = arr.copy()
    scale = np.max(np.linalg.norm(arr, axis=0))
    if scale <= 0.0:
        raise RankDeficiencyError("input matrix is zero")
    Q = np.zeros((d, 0))
    selected = []
    for _ in range(r):
        norms = np.linalg.norm(R, axis=0)
        pick = int(np.argmax(norms))
        if norms[pick] <= 1e-12 * scale:
            raise RankDeficiencyError(
                f"residual vanished after {len(selected)} of {r} picks")
        q = R[:, pick].copy()
        q -= Q @ (Q.T @ q)
        nq = np.linalg.norm(q)
        if nq <= 1e-12 * scale:
            raise RankDeficiencyError(
                f"residual direction vanished after {len(selected)} picks")
        q /= nq
        R -= np.outer(q, q @ R)
        Q = np.column_stack([Q, q])
        selected.append(pick)
    return selected
