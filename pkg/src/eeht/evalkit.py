"""Evaluation kit: matched MRSA scoring, abundance estimation, and the
neighborhood-density preprocessing for noisy pixels."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .linalg import as_array, mrsa_matrix

# exhaustive matching up to this many endmembers, assignment solver above
_EXHAUSTIVE_LIMIT = 8


@dataclass
class MatchReport:
    permutation: np.ndarray        # permutation[j] = reference matched to column j
    per_endmember_mrsa: np.ndarray
    average_mrsa: float


@dataclass
class DensityProfile:
    rho: np.ndarray
    phi: float


class AbundanceWarning(RuntimeWarning):
    pass


def match_mrsa(est, refs) -> MatchReport:
    """Optimal MRSA matching between estimated and reference signatures.

    Minimizes the total MRSA over all bijections of the r columns;
    exhaustive search for r <= 8, Hungarian assignment above.
    """
    E = as_array(est)
    W = as_array(refs)
    if E.shape != W.shape:
        raise ValueError("estimated and reference sets must have equal shape")
    r = E.shape[1]
    cost = mrsa_matrix(E, W)
    if r <= _EXHAUSTIVE_LIMIT:
        best_perm, best_total = None, np.inf
        for perm in itertools.permutations(range(r)):
            total = sum(cost[j, perm[j]] for j in range(r))
            if total < best_total:
                best_perm, best_total = perm, total
        sigma = np.array(best_perm, dtype=int)
    else:
        rows, cols = linear_sum_assignment(cost)
        sigma = np.empty(r, dtype=int)
        sigma[rows] = cols
    per = cost[np.arange(r), sigma]
    return MatchReport(permutation=sigma, per_endmember_mrsa=per,
                       average_mrsa=float(np.mean(per)))


def _project_columns_simplex(V: np.ndarray) -> np.ndarray:
    """Euclidean projection of every column onto the probability simplex."""
    r, n = V.shape
    U = np.sort(V, axis=0)[::-1]
    css = np.cumsum(U, axis=0) - 1.0
    idx = np.arange(1, r + 1)[:, None]
    cond = U - css / idx > 0
    rho = r - 1 - np.argmax(cond[::-1], axis=0)
    theta = css[rho, np.arange(n)] / (rho + 1)
    return np.maximum(V - theta[None, :], 0.0)


def abundance(A, I, tol: float = 1e-9, max_iter: int = 10000) -> np.ndarray:
    """Simplex-constrained least squares of every column on the dictionary
    A(:, I), by accelerated projected gradient with a monotone safeguard.

    Step size 1/sigma_max(A(I))^2; stops when the relative objective
    change drops below tol.  Columns of the result sum to one.
    """
    arr = as_array(A)
    I = list(I)
    D = arr[:, I]
    r, n = D.shape[1], arr.shape[1]
    smax = np.linalg.norm(D, 2)
    if smax <= 0.0:
        raise ValueError("dictionary columns are all zero")
    step = 1.0 / smax ** 2
    DtD = D.T @ D
    DtA = D.T @ arr

    def objective(X):
        return 0.5 * np.linalg.norm(arr - D @ X, "fro") ** 2

    X = np.full((r, n), 1.0 / r)
    Yk = X
    tk = 1.0
    fx = objective(X)
    for _ in range(max_iter):
        Xn = _project_columns_simplex(Yk - step * (DtD @ Yk - DtA))
        fn = objective(Xn)
        if fn > fx:
            # accelerated step overshot: fall back to a plain projected
            # gradient step from X, which cannot increase the objective
            Xn = _project_columns_simplex(X - step * (DtD @ X - DtA))
            fn = objective(Xn)
            tk = 1.0
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk ** 2))
        Yk = Xn + ((tk - 1.0) / tn) * (Xn - X)
        converged = abs(fx - fn) <= tol * max(1.0, abs(fx))
        X, fx, tk = Xn, fn, tn
        if converged:
            break
    else:
        warnings.warn("abundance solve hit the iteration cap",
                      AbundanceWarning)
    return X


def neighborhood_density(A, phi: float) -> DensityProfile:
    """Fraction of columns within MRSA phi of each column (self included)."""
    if not 0.0 <= phi <= 1.0:
        raise ValueError("phi must lie in [0, 1]")
    arr = as_array(A)
    M = mrsa_matrix(arr, arr)
    # the self angle is exactly zero; arccos roundoff must not exclude it
    np.fill_diagonal(M, 0.0)
    rho = np.mean(M <= phi, axis=1)
    return DensityProfile(rho=rho, phi=phi)


def filter_isolated(A, phi: float, omega: float) -> list:
    """Indices of columns whose neighborhood density exceeds omega."""
    profile = neighborhood_density(A, phi)
    return [int(i) for i in np.nonzero(profile.rho > omega)[0]]


def density_histogram(rho, bin_width: float = 0.01) -> np.ndarray:
    """Counts of density values over [0, 1] bins; right-open bins, last
    bin closed."""
    rho = np.asarray(rho, dtype=np.float64).ravel()
    if not 0.0 < bin_width <= 1.0:
        raise ValueError("bin_width must lie in (0, 1]")
    nbins = int(np.ceil(1.0 / bin_width - 1e-12))
    edges = np.minimum(np.arange(nbins + 1) * bin_width, 1.0)
    edges[-1] = 1.0
    counts, _ = np.histogram(rho, bins=edges)
    return counts


def write_abundance_maps(H, width: int, height: int, out_dir, prefix="endmember"):
    """One P5 graymap per endmember, abundances scaled to [0, 255]."""
    import os

    H = np.asarray(H, dtype=np.float64)
    r, n = H.shape
    if width * height != n:
        raise ValueError(f"width*height = {width * height} != n = {n}")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for k in range(r):
        img = np.clip(H[k], 0.0, 1.0).reshape(height, width)
        gray = np.round(img * 255.0).astype(np.uint8)
        path = os.path.join(out_dir, f"{prefix}_{k}.pgm")
        header = f"P5\n{width} {height}\n255\n".encode("ascii")
        with open(path, "wb") as fh:
            fh.write(header + gray.tobytes())
        paths.append(path)
    return paths
