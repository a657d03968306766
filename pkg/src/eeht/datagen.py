"""Synthetic and semi-real dataset construction, and matrix file I/O.

Binary matrix format (extension .dmat): magic "DMAT", u32 version = 1,
u64 rows, u64 cols, then rows*cols little-endian float64 values in
column-major order.  CSV (comma-separated, optional single header line,
row-major) is accepted on read by extension and supported on write.
Index sets travel as JSON arrays of zero-based integers.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .evalkit import abundance
from .linalg import DenseMatrix, as_array, l1_norm, mrsa_matrix

_MAGIC = b"DMAT"
_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


class MatrixIOError(ValueError):
    pass


@dataclass
class SyntheticInstance:
    A: DenseMatrix
    W: DenseMatrix
    H: DenseMatrix
    V: DenseMatrix
    pure_indices: list      # pure column of endmember i at pure_indices[i]
    nu: float


def gen_synthetic(d: int, n: int, r: int, nu: float,
                  seed: int) -> SyntheticInstance:
    """Separable mixing instance A = W [I, Hbar] Pi + V, reproducible
    from the seed.

    W has uniform [0,1] entries with unit-L1 columns; the mixed columns
    are Dirichlet draws whose parameters are themselves uniform [0,1]
    (one parameter vector per instance); the noise is standard normal
    rescaled so its matrix L1 norm equals nu.
    """
    if not (1 <= r <= d <= n):
        raise ValueError(f"need 1 <= r <= d <= n, got r={r}, d={d}, n={n}")
    if nu < 0.0:
        raise ValueError("nu must be nonnegative")
    rng = np.random.default_rng(seed)

    W = rng.uniform(0.0, 1.0, size=(d, r))
    W = np.abs(W)
    W /= np.sum(W, axis=0, keepdims=True)

    alpha = rng.uniform(0.0, 1.0, size=r)
    gammas = rng.gamma(shape=alpha[:, None], scale=1.0, size=(r, n - r))
    sums = np.sum(gammas, axis=0)
    sums[sums == 0.0] = 1.0
    Hbar = gammas / sums

    if nu > 0.0:
        V = rng.standard_normal(size=(d, n))
        V *= nu / l1_norm(V)
    else:
        V = np.zeros((d, n))

    perm = rng.permutation(n)
    H = np.empty((r, n))
    H[:, perm] = np.hstack([np.eye(r), Hbar])
    A = W @ H + V
    return SyntheticInstance(A=DenseMatrix(A), W=DenseMatrix(W),
                             H=DenseMatrix(H), V=DenseMatrix(V),
                             pure_indices=[int(j) for j in perm[:r]], nu=nu)


def build_semireal(A_real, W_ref, nu: float):
    """Construct a semi-real instance around reference signatures.

    Columns of A_real are L1-normalized; the column closest in MRSA to
    each reference becomes an endmember; abundances come from the
    simplex-constrained least squares fit with the identity forced on the
    matched columns; the leftover residual is rescaled to L1 norm nu.
    Returns (A, W, H, V, matched_indices).
    """
    arr = as_array(A_real).copy()
    refs = as_array(W_ref)
    r = refs.shape[1]
    norms = np.sum(np.abs(arr), axis=0)
    if np.any(norms == 0.0):
        raise ValueError("zero column in the real matrix")
    arr /= norms[None, :]

    cost = mrsa_matrix(arr, refs)          # n x r
    J = [int(np.argmin(cost[:, i])) for i in range(r)]
    if len(set(J)) != r:
        raise ValueError(f"degenerate references: duplicate matches {J}")

    W = arr[:, J].copy()
    H = abundance(arr, J)
    for i, j in enumerate(J):
        H[:, j] = 0.0
        H[i, j] = 1.0
    V = arr - W @ H
    v_norm = l1_norm(V)
    scale = nu / v_norm if v_norm > 0.0 else 0.0
    A = W @ H + scale * V
    return DenseMatrix(A), DenseMatrix(W), DenseMatrix(H), DenseMatrix(V), J


def write_matrix(path, A):
    """Write a matrix to .dmat (binary) or .csv (row-major text)."""
    arr = as_array(A)
    path = os.fspath(path)
    tmp = path + ".tmp"
    if path.endswith(".csv"):
        with open(tmp, "w") as fh:
            for row in arr:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    else:
        header = _HEADER.pack(_MAGIC, _VERSION, arr.shape[0], arr.shape[1])
        body = np.asfortranarray(arr).ravel(order="F").astype("<f8").tobytes()
        with open(tmp, "wb") as fh:
            fh.write(header + body)
    os.replace(tmp, path)


def read_matrix(path) -> DenseMatrix:
    """Read a matrix written by write_matrix; CSV accepted by extension."""
    path = os.fspath(path)
    if path.endswith(".csv"):
        return _read_csv(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise MatrixIOError(f"{path}: truncated header")
    magic, version, rows, cols = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise MatrixIOError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise MatrixIOError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise MatrixIOError(
            f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if not np.all(np.isfinite(data)):
        raise MatrixIOError(f"{path}: non-finite values")
    return DenseMatrix(data.reshape((rows, cols), order="F"))


def _read_csv(path) -> DenseMatrix:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                if lineno == 0:
                    continue            # single header line
                raise MatrixIOError(f"{path}:{lineno + 1}: non-numeric row")
    if not rows:
        raise MatrixIOError(f"{path}: no data rows")
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise MatrixIOError(f"{path}: ragged rows (widths {sorted(widths)})")
    arr = np.array(rows)
    if not np.all(np.isfinite(arr)):
        raise MatrixIOError(f"{path}: non-finite values")
    return DenseMatrix(arr)


def write_indices(path, indices):
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump([int(i) for i in indices], fh)
        fh.write("\n")
    os.replace(tmp, path)


def read_indices(path) -> list:
    """JSON array of zero-based column indices; an object with an
    "indices" key is also accepted."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("indices")
    if not isinstance(data, list) or not all(isinstance(i, int) for i in data):
        raise MatrixIOError(f"{path}: expected a JSON array of integers")
    return data
