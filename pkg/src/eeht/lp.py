"""Equality-form LP solving with primal and dual optimal solutions.

The problem form is

    min c.T x   s.t.  A x = b,  x >= 0

with dual

    max b.T y   s.t.  A.T y <= c.

The constraint matrix may be dense or scipy.sparse; the large subproblems
built by the model module are sparse.

The backend is the HiGHS dual simplex via scipy.optimize.linprog.  Callers
only depend on solve()/verify(), so the backend can be swapped without
touching them.  A warm-start basis hint is accepted and currently ignored
(the backend does not expose basis warm starts); correctness never depends
on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.optimize import linprog


class LpStatus(Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITER_LIMIT = "IterLimit"


class LpError(RuntimeError):
    """Raised when the backend reports a numerical failure."""


@dataclass
class ToleranceConfig:
    feas_tol: float = 1e-9
    gap_tol: float = 1e-7


@dataclass
class StandardLp:
    c: np.ndarray
    A: object            # m x n, dense ndarray or scipy.sparse matrix
    b: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        self.b = np.asarray(self.b, dtype=np.float64).ravel()
        m, n = self.A.shape
        if m < 1 or n < 1:
            raise ValueError("LP must have at least one row and one column")
        if self.c.size != n or self.b.size != m:
            raise ValueError("c/b sizes do not match A")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b))):
            raise ValueError("LP data must be finite")

    @property
    def nrows(self) -> int:
        return self.A.shape[0]

    @property
    def ncols(self) -> int:
        return self.A.shape[1]


@dataclass
class LpSolution:
    x: np.ndarray
    y: np.ndarray
    objective: float
    status: LpStatus
    iterations: int = 0
    # Farkas-style certificate direction when infeasibility/unboundedness is
    # detected and the backend exposes one; None otherwise.
    certificate: np.ndarray | None = None


@dataclass
class VerifyReport:
    primal_residual: float       # max |Ax - b|
    dual_residual: float         # max (A.T y - c)+
    duality_gap: float           # |c.T x - b.T y|
    complementarity: float       # max_i |x_i (c - A.T y)_i|
    feasible: bool

    def as_dict(self):
        return {
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "duality_gap": self.duality_gap,
            "complementarity": self.complementarity,
            "feasible": self.feasible,
        }


def solve(lp: StandardLp, tol: ToleranceConfig | None = None,
          warm_basis=None, max_iter: int | None = None) -> LpSolution:
    """Solve an equality-form LP, returning primal and dual optima.

    On OPTIMAL the solution satisfies Ax = b and A.T y <= c within
    tol.feas_tol and strong duality within tol.gap_tol.
    """
    tol = tol or ToleranceConfig()
    m, n = lp.A.shape
    if max_iter is None:
        max_iter = 50 * (m + n)
    A = lp.A
    if sparse.issparse(A):
        A = sparse.csc_matrix(A)
    res = linprog(
        c=lp.c, A_eq=A, b_eq=lp.b, bounds=(0, None), method="highs",
        options={
            "primal_feasibility_tolerance": tol.feas_tol,
            "dual_feasibility_tolerance": tol.feas_tol,
            "maxiter": max_iter,
        },
    )
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 0:
        x = np.asarray(res.x, dtype=np.float64)
        y = np.asarray(res.eqlin.marginals, dtype=np.float64)
        obj = float(lp.c @ x)
        gap = abs(obj - float(lp.b @ y))
        if gap > tol.gap_tol * max(1.0, abs(obj)):
            raise LpError(f"backend returned a duality gap of {gap:.3e}")
        return LpSolution(x=x, y=y, objective=obj, status=LpStatus.OPTIMAL,
                          iterations=iters)
    if res.status == 2:
        return LpSolution(x=np.zeros(n), y=np.zeros(m), objective=np.inf,
                          status=LpStatus.INFEASIBLE, iterations=iters)
    if res.status == 3:
        return LpSolution(x=np.zeros(n), y=np.zeros(m), objective=-np.inf,
                          status=LpStatus.UNBOUNDED, iterations=iters)
    if res.status == 1:
        return LpSolution(x=np.zeros(n), y=np.zeros(m), objective=np.nan,
                          status=LpStatus.ITER_LIMIT, iterations=iters)
    raise LpError(f"LP backend failure: {res.message}")


@dataclass
class GeneralLp:
    """min c.T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lo <= x <= hi.

    Any LP is reducible to equality form, but keeping inequalities and
    variable bounds native lets the backend presolve them away instead of
    carrying explicit slack columns; on the large restricted subproblems
    this is several times faster at the same optimum.
    """

    c: np.ndarray
    A_ub: object = None
    b_ub: np.ndarray = None
    A_eq: object = None
    b_eq: np.ndarray = None
    bounds: object = (0, None)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        if self.A_ub is None and self.A_eq is None:
            raise ValueError("LP must have at least one constraint block")
        for A, b, name in ((self.A_ub, self.b_ub, "b_ub"),
                           (self.A_eq, self.b_eq, "b_eq")):
            if A is None:
                continue
            if A.shape[1] != self.c.size:
                raise ValueError("c size does not match constraint columns")
            if b is None or np.asarray(b).size != A.shape[0]:
                raise ValueError(f"{name} size does not match its rows")
        if self.b_ub is not None:
            self.b_ub = np.asarray(self.b_ub, dtype=np.float64).ravel()
        if self.b_eq is not None:
            self.b_eq = np.asarray(self.b_eq, dtype=np.float64).ravel()


@dataclass
class GeneralLpSolution:
    x: np.ndarray
    y_eq: np.ndarray            # equality-row multipliers
    y_ub: np.ndarray            # inequality-row multipliers (<= 0)
    y_lower: np.ndarray         # lower-bound multipliers (>= 0)
    y_upper: np.ndarray         # upper-bound multipliers (<= 0)
    objective: float
    status: LpStatus
    iterations: int = 0


def solve_general(lp: GeneralLp, tol: ToleranceConfig | None = None,
                  max_iter: int | None = None,
                  time_limit: float | None = None) -> GeneralLpSolution:
    """Solve a general-form LP, returning all multiplier blocks.

    Multiplier signs follow the sensitivity convention: the multiplier of
    a row or bound is the derivative of the optimal objective in its
    right-hand side, so inequality and upper-bound multipliers are
    nonpositive and lower-bound multipliers nonnegative.  An exceeded
    time_limit (seconds) reports ITER_LIMIT.
    """
    tol = tol or ToleranceConfig()
    n = lp.c.size
    m_ub = 0 if lp.A_ub is None else lp.A_ub.shape[0]
    m_eq = 0 if lp.A_eq is None else lp.A_eq.shape[0]
    if max_iter is None:
        max_iter = 50 * (m_ub + m_eq + n)

    def _prep(A):
        if A is None:
            return None
        return sparse.csc_matrix(A) if sparse.issparse(A) else A

    options = {
        "primal_feasibility_tolerance": tol.feas_tol,
        "dual_feasibility_tolerance": tol.feas_tol,
        "maxiter": max_iter,
    }
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    res = linprog(
        c=lp.c, A_ub=_prep(lp.A_ub), b_ub=lp.b_ub,
        A_eq=_prep(lp.A_eq), b_eq=lp.b_eq, bounds=lp.bounds,
        method="highs",
        options=options,
    )
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 0:
        x = np.asarray(res.x, dtype=np.float64)
        y_eq = (np.asarray(res.eqlin.marginals, dtype=np.float64)
                if m_eq else np.zeros(0))
        y_ub = (np.asarray(res.ineqlin.marginals, dtype=np.float64)
                if m_ub else np.zeros(0))
        y_lo = np.asarray(res.lower.marginals, dtype=np.float64)
        y_hi = np.asarray(res.upper.marginals, dtype=np.float64)
        obj = float(lp.c @ x)
        return GeneralLpSolution(x=x, y_eq=y_eq, y_ub=y_ub, y_lower=y_lo,
                                 y_upper=y_hi, objective=obj,
                                 status=LpStatus.OPTIMAL, iterations=iters)
    by_code = {2: (LpStatus.INFEASIBLE, np.inf),
               3: (LpStatus.UNBOUNDED, -np.inf),
               1: (LpStatus.ITER_LIMIT, np.nan)}
    if res.status in by_code:
        status, obj = by_code[res.status]
        return GeneralLpSolution(x=np.zeros(n), y_eq=np.zeros(m_eq),
                                 y_ub=np.zeros(m_ub), y_lower=np.zeros(n),
                                 y_upper=np.zeros(n), objective=obj,
                                 status=status, iterations=iters)
    raise LpError(f"LP backend failure: {res.message}")


def verify(lp: StandardLp, sol: LpSolution,
           tol: ToleranceConfig | None = None) -> VerifyReport:
    """Independent optimality audit of a solution returned by solve()."""
    tol = tol or ToleranceConfig()
    if sol.status is not LpStatus.OPTIMAL:
        raise ValueError("verify() expects an Optimal solution")
    Ax = lp.A @ sol.x
    Aty = lp.A.T @ sol.y
    primal = float(np.max(np.abs(Ax - lp.b)))
    dual = float(np.max(np.maximum(Aty - lp.c, 0.0)))
    gap = abs(float(lp.c @ sol.x) - float(lp.b @ sol.y))
    compl = float(np.max(np.abs(sol.x * (lp.c - Aty))))
    feasible = (
        primal <= 10 * tol.feas_tol
        and dual <= 10 * tol.feas_tol
        and float(np.min(sol.x)) >= -tol.feas_tol
        and gap <= tol.gap_tol * max(1.0, abs(sol.objective))
    )
    return VerifyReport(primal_residual=primal, dual_residual=dual,
                        duality_gap=gap, complementarity=compl,
                        feasible=feasible)
