"""Dense matrix container and the small numerical kernels shared by every module.

Matrices are stored column-major because every algorithm in this package
iterates over pixel columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConstantVectorError(ValueError):
    """Raised when a mean-removed angle is requested for a constant vector."""


class SvdConvergenceError(RuntimeError):
    """Raised when the SVD iteration fails to converge."""


class DenseMatrix:
    """Real d x n matrix, column-major, all entries finite.

    Columns are pixels/spectra throughout the package.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asfortranarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-d array, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"matrix must be at least 1x1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        self.values = arr

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def data(self) -> np.ndarray:
        """Column-major flat view of the entries."""
        return self.values.ravel(order="F")

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def __repr__(self):
        return f"DenseMatrix({self.rows}x{self.cols})"


def as_array(A) -> np.ndarray:
    """Coerce a DenseMatrix or array-like to a float64 2-d ndarray."""
    if isinstance(A, DenseMatrix):
        return A.values
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a matrix")
    return arr


@dataclass
class SvdTruncation:
    """Top-r truncated SVD: A ~ U_r @ diag(sigma) @ V_r.T."""

    U_r: np.ndarray      # d x r, orthonormal columns
    sigma: np.ndarray    # r, nonincreasing, nonnegative
    V_r: np.ndarray      # n x r, orthonormal columns

    def reduced(self) -> np.ndarray:
        """The size-reduced r x n matrix diag(sigma) @ V_r.T."""
        return self.sigma[:, None] * self.V_r.T


def l1_norm(A) -> float:
    """Matrix L1 norm: max over columns of the column absolute sum."""
    arr = as_array(A)
    return float(np.max(np.sum(np.abs(arr), axis=0)))


def pos_neg_split(A):
    """Split A into (A_plus, A_minus) with A = A_plus - A_minus, both >= 0.

    The split is complementary: A_plus * A_minus == 0 elementwise.
    """
    arr = as_array(A)
    plus = np.maximum(arr, 0.0)
    minus = plus - arr
    return plus, minus


def truncated_svd(A, r: int) -> SvdTruncation:
    """Top-r truncated SVD of a dense matrix.

    Raises SvdConvergenceError if the underlying iteration fails.
    """
    arr = as_array(A)
    d, n = arr.shape
    if not 1 <= r <= min(d, n):
        raise ValueError(f"r={r} out of range for a {d}x{n} matrix")
    try:
        U, s, Vt = np.linalg.svd(arr, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(str(exc)) from exc
    return SvdTruncation(U_r=U[:, :r].copy(), sigma=s[:r].copy(), V_r=Vt[:r].T.copy())


def mrsa(a, b) -> float:
    """Mean-removed spectral angle between two vectors, scaled to [0, 1].

    Zero means identical direction after mean removal; one means opposite.
    Raises ConstantVectorError when either input has zero mean-removed norm.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size or a.size < 2:
        raise ValueError("vectors must have equal length >= 2")
    ar = a - a.mean()
    br = b - b.mean()
    na = np.linalg.norm(ar)
    nb = np.linalg.norm(br)
    if na <= 0.0 or nb <= 0.0:
        raise ConstantVectorError("mean-removed angle undefined for a constant vector")
    # clamp absorbs roundoff on numerically collinear vectors
    cos = np.clip(np.dot(ar, br) / (na * nb), -1.0, 1.0)
    return float(np.arccos(cos) / np.pi)


def mrsa_matrix(A, B) -> np.ndarray:
    """Pairwise MRSA values between the columns of A and the columns of B."""
    A = as_array(A)
    B = as_array(B)
    Ar = A - A.mean(axis=0, keepdims=True)
    Br = B - B.mean(axis=0, keepdims=True)
    na = np.linalg.norm(Ar, axis=0)
    nb = np.linalg.norm(Br, axis=0)
    if np.any(na <= 0.0) or np.any(nb <= 0.0):
        raise ConstantVectorError("mean-removed angle undefined for a constant column")
    cos = np.clip((Ar.T @ Br) / np.outer(na, nb), -1.0, 1.0)
    return np.arccos(cos) / np.pi


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex {x >= 0, sum x = 1}.

    Sort-based O(k log k) method; exact up to roundoff.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError("input must be finite")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)
