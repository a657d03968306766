"""Restricted Hottopixx subproblems, their duals, and global optimality checks.

The model

    min ||A - A X||_1   s.t.  tr(X) = r,  0 <= X(i,j) <= X(i,i) <= 1

is solved on a restricted index set L by an LP over the block variables
(X, F, G, u) where F - G splits the residual.  The dual blocks
(Y, Z, s, t, v) are recovered from the multipliers of the LP rows by a
fixed index mapping, documented below.  Two pricing conditions decide
whether the restricted optimum is globally optimal:

  C1: opt(R_j) <= u*           for every column j outside L, where R_j is
      the bounded L1 regression of column j on A(L);
  C2: v* + sum((Y*.T a_j)+) <= 0  for every j outside L.

When both hold, the restricted solution expands to a certified optimal
solution of the full model (certify_global constructs the primal/dual
witness pair explicitly).

Variable block order of the LP (column-major vectorization throughout):

    [vec X (l*m), vec F (d*m), vec G (d*m), u, p (m), vec Q (l*m), w (l)]

where p, Q, w are the slacks of the column-sum rows, the dominance rows
X(i,j) <= X(i,i), and the diagonal caps X(i,i) <= 1.  Row block order:

    [residual equalities (d*m), column sums (m), trace (1),
     dominance rows (l*m), diagonal caps (l)]

Dual recovery: Y from the residual rows, s = -(column-sum multipliers),
v from the trace row, Z(j,i) = -(dominance multiplier of (i,j)),
t = -(diagonal-cap multipliers).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import lp as lpmod
from .linalg import as_array

# Expansion/certificate comparisons use eps = EPS_BASE * max(1, u*);
# floating-point strict inequalities are meaningless otherwise.
EPS_BASE = 1e-7

TRACE_TOL = 1e-7
BOUND_TOL = 1e-9
V_STAR_TOL = 1e-9
GAP_TOL = 1e-7


class ModelError(RuntimeError):
    pass


class SubproblemFailure(ModelError):
    """An LP under a subproblem did not return an optimal solution."""

    def __init__(self, status, what):
        super().__init__(f"{what}: LP status {status.value}")
        self.status = status


@dataclass
class SubproblemSolution:
    """Optimal primal/dual blocks of the restricted model on index set L."""

    L: list                 # ordered zero-based column indices
    r: int
    X_star: np.ndarray      # l x l
    u_star: float
    Y_star: np.ndarray      # d x l
    Z_star: np.ndarray      # l x l
    s_star: np.ndarray      # l
    t_star: np.ndarray      # l
    v_star: float
    lp_iterations: int = 0

    @property
    def ell(self) -> int:
        return len(self.L)

    def dual_objective(self, A_L: np.ndarray) -> float:
        return float(np.sum(A_L * self.Y_star) + self.r * self.v_star
                     - np.sum(self.t_star))


@dataclass
class RjSolution:
    j: int
    gamma: np.ndarray
    opt_value: float


def build_primal(A, L, M, r: int) -> lpmod.StandardLp:
    """Equality-form LP of the restricted model on row set L, column set M.

    M is ordered as (L, M \\ L); the permutation is the identity when
    L == M.  See the module docstring for the variable and row layout.
    """
    arr = as_array(A)
    d, n = arr.shape
    L = list(L)
    M = list(M)
    if not set(L) <= set(M):
        raise ValueError("L must be a subset of M")
    if any(j < 0 or j >= n for j in M):
        raise IndexError("column index out of range")
    ell = len(L)
    if r > ell:
        raise ValueError(f"r={r} exceeds |L|={ell}")
    ordered = L + [j for j in M if j not in set(L)]
    m = len(ordered)

    A_L = arr[:, L]
    A_M = arr[:, ordered]

    lm = ell * m
    dm = d * m
    nvar = lm + 2 * dm + 1 + m + lm + ell
    ix_F = lm
    ix_G = lm + dm
    ix_u = lm + 2 * dm
    ix_p = ix_u + 1
    ix_q = ix_p + m
    ix_w = ix_q + lm

    blocks = []

    # residual rows: A_L X(:,j) + F(:,j) - G(:,j) = A_M(:,j)
    res_X = sparse.kron(sparse.eye(m), sparse.csc_matrix(A_L), format="coo")
    eye_dm = sparse.eye(dm, format="coo")
    blocks.append(sparse.hstack(
        [res_X, eye_dm, -eye_dm,
         sparse.coo_matrix((dm, 1 + m + lm + ell))], format="coo"))

    # column-sum rows: sum_k F(k,j) + G(k,j) - u + p_j = 0
    ones_d = sparse.kron(sparse.eye(m), np.ones((1, d)), format="coo")
    blocks.append(sparse.hstack(
        [sparse.coo_matrix((m, lm)), ones_d, ones_d,
         -np.ones((m, 1)), sparse.eye(m, format="coo"),
         sparse.coo_matrix((m, lm + ell))], format="coo"))

    # trace row: sum_i X(i,i) = r
    diag_cols = np.arange(ell) * ell + np.arange(ell)
    tr_row = sparse.coo_matrix(
        (np.ones(ell), (np.zeros(ell, dtype=int), diag_cols)), shape=(1, nvar))
    blocks.append(tr_row)

    # dominance rows: X(i,j) - X(i,i) + Q(i,j) = 0, row index j*l + i
    idx = np.arange(lm)
    i_of = idx % ell
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([idx, i_of * ell + i_of, ix_q + idx])
    vals = np.concatenate([np.ones(lm), -np.ones(lm), np.ones(lm)])
    blocks.append(sparse.coo_matrix((vals, (rows, cols)), shape=(lm, nvar)))

    # diagonal caps: X(i,i) + w_i = 1
    cap = sparse.coo_matrix(
        (np.concatenate([np.ones(ell), np.ones(ell)]),
         (np.concatenate([np.arange(ell), np.arange(ell)]),
          np.concatenate([diag_cols, ix_w + np.arange(ell)]))),
        shape=(ell, nvar))
    blocks.append(cap)

    Amat = sparse.vstack(blocks, format="csc")
    b = np.concatenate([A_M.ravel(order="F"), np.zeros(m), [float(r)],
                        np.zeros(lm), np.ones(ell)])
    c = np.zeros(nvar)
    c[ix_u] = 1.0
    return lpmod.StandardLp(c=c, A=Amat, b=b)


def build_bounded(A, L, M, r: int) -> lpmod.GeneralLp:
    """Mixed-form LP of the restricted model: same rows as build_primal,
    but column sums and dominance stay inequalities and the diagonal caps
    become variable bounds, so no slack columns are carried.

    Variables: [vec X (l*m), vec F (d*m), vec G (d*m), u].  Equality rows:
    residual (d*m), trace (1).  Inequality rows: column sums (m), dominance
    (l*m, vacuous on the diagonal).  Solves to the same optimum as the
    equality form, several times faster on large instances.
    """
    arr = as_array(A)
    d, n = arr.shape
    L = list(L)
    M = list(M)
    if not set(L) <= set(M):
        raise ValueError("L must be a subset of M")
    if any(j < 0 or j >= n for j in M):
        raise IndexError("column index out of range")
    ell = len(L)
    if r > ell:
        raise ValueError(f"r={r} exceeds |L|={ell}")
    ordered = L + [j for j in M if j not in set(L)]
    m = len(ordered)

    A_L = arr[:, L]
    A_M = arr[:, ordered]
    lm = ell * m
    dm = d * m
    nvar = lm + 2 * dm + 1
    ix_u = lm + 2 * dm
    diag_cols = np.arange(ell) * ell + np.arange(ell)

    res_X = sparse.kron(sparse.eye(m), sparse.csc_matrix(A_L), format="coo")
    eye_dm = sparse.eye(dm, format="coo")
    residual = sparse.hstack([res_X, eye_dm, -eye_dm,
                              sparse.coo_matrix((dm, 1))], format="coo")
    tr_row = sparse.coo_matrix(
        (np.ones(ell), (np.zeros(ell, dtype=int), diag_cols)),
        shape=(1, nvar))
    A_eq = sparse.vstack([residual, tr_row], format="csc")
    b_eq = np.concatenate([A_M.ravel(order="F"), [float(r)]])

    # column sums: sum_k F(k,j) + G(k,j) - u <= 0
    ones_d = sparse.kron(sparse.eye(m), np.ones((1, d)), format="coo")
    colsum = sparse.hstack([sparse.coo_matrix((m, lm)), ones_d, ones_d,
                            -np.ones((m, 1))], format="coo")
    # dominance: X(i,j) - X(i,i) <= 0, row index j*l + i (diagonal vacuous)
    idx = np.arange(lm)
    off = idx[idx % ell != idx // ell]
    rows = np.concatenate([off, off])
    cols = np.concatenate([off, (off % ell) * ell + off % ell])
    vals = np.concatenate([np.ones(off.size), -np.ones(off.size)])
    dom = sparse.coo_matrix((vals, (rows, cols)), shape=(lm, nvar))
    A_ub = sparse.vstack([colsum, dom], format="csc")
    b_ub = np.zeros(m + lm)

    bounds = np.zeros((nvar, 2))
    bounds[:, 1] = np.inf
    bounds[diag_cols, 1] = 1.0
    c = np.zeros(nvar)
    c[ix_u] = 1.0
    return lpmod.GeneralLp(c=c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                           bounds=bounds)


def _recover_bounded(sol: lpmod.GeneralLpSolution, d: int, ell: int, m: int):
    """Split a mixed-form solution into the documented blocks."""
    lm = ell * m
    dm = d * m
    diag_cols = np.arange(ell) * ell + np.arange(ell)
    X = sol.x[:lm].reshape((ell, m), order="F").copy()
    u = float(sol.x[lm + 2 * dm])
    Y = sol.y_eq[:dm].reshape((d, m), order="F").copy()
    v = float(sol.y_eq[dm])
    s = -sol.y_ub[:m]
    Z = (-sol.y_ub[m:]).reshape((ell, m), order="F").T.copy()
    t = -sol.y_upper[diag_cols]
    return X, u, Y, s, v, Z, t


def _recover(sol: lpmod.LpSolution, d: int, ell: int, m: int):
    """Split the primal/dual vectors into the documented blocks."""
    lm = ell * m
    dm = d * m
    X = sol.x[:lm].reshape((ell, m), order="F").copy()
    u = float(sol.x[lm + 2 * dm])
    y = sol.y
    Y = y[:dm].reshape((d, m), order="F").copy()
    s = -y[dm:dm + m]
    v = float(y[dm + m])
    Z = (-y[dm + m + 1:dm + m + 1 + lm]).reshape((ell, m), order="F").T.copy()
    t = -y[dm + m + 1 + lm:]
    return X, u, Y, s, v, Z, t


def solve_subproblem(A, L, r: int,
                     tol: lpmod.ToleranceConfig | None = None,
                     form: str = "bounded") -> SubproblemSolution:
    """Solve the restricted model on L (rows and columns) and recover duals.

    form selects the LP construction: "bounded" (mixed inequalities and
    variable bounds, the fast default) or "equality" (the reference
    reduction of build_primal).  Both recover the same dual blocks.
    Validates the duality audit: primal/dual objectives agree within
    GAP_TOL * max(1, u*) and v* <= V_STAR_TOL whenever |L| >= r.
    """
    arr = as_array(A)
    d = arr.shape[0]
    L = sorted(L)
    ell = len(L)
    if form == "bounded":
        sol = lpmod.solve_general(build_bounded(arr, L, L, r), tol)
    elif form == "equality":
        sol = lpmod.solve(build_primal(arr, L, L, r), tol)
    else:
        raise ValueError(f"unknown form {form!r}")
    if sol.status is not lpmod.LpStatus.OPTIMAL:
        raise SubproblemFailure(sol.status, f"restricted model on |L|={ell}")
    recover = _recover_bounded if form == "bounded" else _recover
    X, u, Y, s, v, Z, t = recover(sol, d, ell, ell)
    sub = SubproblemSolution(L=L, r=r, X_star=X, u_star=u, Y_star=Y,
                             Z_star=Z, s_star=s, t_star=t, v_star=v,
                             lp_iterations=sol.iterations)
    _validate(sub, arr[:, L])
    return sub


def _validate(sub: SubproblemSolution, A_L: np.ndarray):
    X = sub.X_star
    dx = np.diag(X)
    if abs(np.sum(dx) - sub.r) > TRACE_TOL:
        raise ModelError(f"trace {np.sum(dx):.9f} != r={sub.r}")
    if np.min(X) < -BOUND_TOL or np.max(dx) > 1.0 + BOUND_TOL:
        raise ModelError("X outside [0, 1] bounds")
    if np.max(X - dx[:, None]) > BOUND_TOL:
        raise ModelError("dominance constraint X(i,j) <= X(i,i) violated")
    if sub.ell >= sub.r and sub.v_star > V_STAR_TOL:
        raise ModelError(f"v* = {sub.v_star:.3e} > 0")
    gap = abs(sub.u_star - sub.dual_objective(A_L))
    if gap > GAP_TOL * max(1.0, abs(sub.u_star)):
        raise ModelError(f"primal/dual objective gap {gap:.3e}")


def solve_rj(A, L, j: int, diag_x,
             tol: lpmod.ToleranceConfig | None = None) -> RjSolution:
    """Bounded L1 regression of column j on A(L): the pricing problem of C1.

    min ||a_j - A(L) gamma||_1  s.t.  0 <= gamma <= diag_x,
    solved as a small LP with residual split f - g and the box constraint
    kept as variable bounds.
    """
    arr = as_array(A)
    d = arr.shape[0]
    L = list(L)
    ell = len(L)
    if j in set(L):
        raise ValueError(f"column {j} already belongs to L")
    diag_x = np.clip(np.asarray(diag_x, dtype=np.float64).ravel(), 0.0, 1.0)
    A_L = arr[:, L]
    a_j = arr[:, j]

    # variables: [gamma (l), f (d), g (d)]
    nvar = ell + 2 * d
    A_eq = np.hstack([A_L, np.eye(d), -np.eye(d)])
    c = np.zeros(nvar)
    c[ell:] = 1.0
    bounds = np.zeros((nvar, 2))
    bounds[:ell, 1] = diag_x
    bounds[ell:, 1] = np.inf
    sol = lpmod.solve_general(
        lpmod.GeneralLp(c=c, A_eq=A_eq, b_eq=a_j, bounds=bounds), tol)
    if sol.status is not lpmod.LpStatus.OPTIMAL:
        raise SubproblemFailure(sol.status, f"pricing problem for column {j}")
    gamma = np.clip(sol.x[:ell], 0.0, diag_x)
    return RjSolution(j=j, gamma=gamma, opt_value=float(sol.objective))


def check_c1(sub: SubproblemSolution, rjs, eps: float | None = None):
    """C1 pricing: columns whose bounded regression beats the restricted
    optimum force an expansion of L.  Returns (all_clear, violators)."""
    if eps is None:
        eps = EPS_BASE * max(1.0, sub.u_star)
    violators = sorted(rj.j for rj in rjs if rj.opt_value > sub.u_star + eps)
    return len(violators) == 0, violators


def check_c2(sub: SubproblemSolution, A, eps: float | None = None):
    """C2 pricing on the dual blocks: v* + sum((Y*.T a_j)+) must stay
    nonpositive outside L.  Returns (all_clear, violators)."""
    if eps is None:
        eps = EPS_BASE * max(1.0, sub.u_star)
    arr = as_array(A)
    n = arr.shape[1]
    rest = [j for j in range(n) if j not in set(sub.L)]
    if not rest:
        return True, []
    scores = sub.v_star + np.sum(
        np.maximum(sub.Y_star.T @ arr[:, rest], 0.0), axis=0)
    violators = [j for j, sc in zip(rest, scores) if sc > eps]
    return len(violators) == 0, violators


def assemble_full(sub: SubproblemSolution, rjs, n: int) -> np.ndarray:
    """Expand the restricted optimum to the full n x n solution.

    Rows outside L are zero; columns outside L carry the pricing solutions
    gamma_j.  Valid once C1 holds."""
    L = sub.L
    by_j = {rj.j: rj.gamma for rj in rjs}
    rest = [j for j in range(n) if j not in set(L)]
    missing = [j for j in rest if j not in by_j]
    if missing:
        raise ValueError(f"missing pricing solutions for columns {missing[:5]}")
    X = np.zeros((n, n))
    X[np.ix_(L, L)] = sub.X_star
    for j in rest:
        X[L, j] = by_j[j]
    return X


@dataclass
class CertificateReport:
    passed: bool
    primal_objective: float
    dual_objective: float
    violations: dict
    failed_blocks: list

    def __bool__(self):
        return self.passed


def certify_global(A, sub: SubproblemSolution, rjs,
                   eps: float = 1e-6) -> CertificateReport:
    """Constructive proof that the assembled solution is globally optimal.

    Builds the full-size primal candidate (X, R+, R-, ||R||_1) and the
    full-size dual candidate (Y = [Y*, O], Z with the positive-part block
    of Y*.T A(rest), s, t, v = v*), checks feasibility of both in the full
    model, and checks that the two objectives agree.  Works in the
    (L, rest) block order; the permutation back to natural order does not
    change feasibility or objectives.
    """
    arr = as_array(A)
    d, n = arr.shape
    L = sub.L
    rest = [j for j in range(n) if j not in set(L)]
    ell = len(L)
    A_blk = arr[:, L + rest]

    # primal candidate
    by_j = {rj.j: rj.gamma for rj in rjs}
    Gamma = (np.column_stack([by_j[j] for j in rest])
             if rest else np.zeros((ell, 0)))
    X_hat = np.zeros((n, n))
    X_hat[:ell, :ell] = sub.X_star
    X_hat[:ell, ell:] = Gamma
    R = A_blk - A_blk[:, :ell] @ X_hat[:ell, :]
    u = float(np.max(np.sum(np.abs(R), axis=0))) if n else 0.0

    viol = {}
    dxh = np.diag(X_hat)
    viol["primal_trace"] = abs(float(np.sum(dxh)) - sub.r)
    viol["primal_bounds"] = max(0.0, float(-np.min(X_hat)),
                                float(np.max(dxh) - 1.0))
    viol["primal_dominance"] = max(0.0, float(np.max(X_hat - dxh[:, None])))

    # dual candidate
    Y = np.hstack([sub.Y_star, np.zeros((d, n - ell))])
    Delta = sub.Y_star.T @ A_blk[:, ell:]
    Z = np.zeros((n, n))
    Z[:ell, :ell] = sub.Z_star
    Z[:ell, ell:] = np.maximum(Delta, 0.0)
    s = np.concatenate([sub.s_star, np.zeros(n - ell)])
    t = np.concatenate([sub.t_star, np.zeros(n - ell)])
    v = sub.v_star

    M = (A_blk.T @ Y + v * np.eye(n) - np.diag(t) - Z.T
         + np.diag(Z.T @ np.ones(n)))
    viol["dual_first_constraint"] = max(0.0, float(np.max(M)))
    viol["dual_y_bounds"] = max(0.0, float(np.max(np.abs(Y) - s[None, :])))
    viol["dual_s_budget"] = max(0.0, float(np.sum(s)) - 1.0)
    viol["dual_signs"] = max(0.0, float(-np.min(s)), float(-np.min(t)),
                             float(-np.min(Z)))

    dual_obj = float(np.sum(A_blk * Y) + sub.r * v - np.sum(t))
    viol["objective_gap"] = abs(u - dual_obj)

    failed = [k for k, val in viol.items() if val > eps]
    return CertificateReport(passed=not failed, primal_objective=u,
                             dual_objective=dual_obj, violations=viol,
                             failed_blocks=failed)
