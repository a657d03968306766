"""Row-and-column expansion: column generation on the Hottopixx model.

The loop solves the restricted model on a small index set L, prices the
columns outside L against the C1/C2 certificates, and expands L by the
violators until both certificates hold.  L only ever grows, so the loop
terminates in at most n rounds; if L reaches the full index set the final
round is simply the direct solve.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import model
from .baselines import spa
from .linalg import as_array


class RceRoundLimitError(RuntimeError):
    """Raised when the configured round cap is exceeded; carries the
    partial trace."""

    def __init__(self, trace):
        super().__init__(f"round limit reached after {len(trace.rounds)} rounds")
        self.trace = trace


@dataclass
class RceConfig:
    """Knobs of the expansion loop and of the initial index set.

    lam and mu control the seeding: the lam nearest neighbours of each
    greedy pick plus mu extra columns drawn without replacement from the
    remainder (defaults lam=10, mu=100).
    """

    r: int
    lam: int = 10
    mu: int = 100
    eps: float = 1e-7
    max_rounds: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.r < 1 or self.lam < 1 or self.mu < 0:
            raise ValueError("r and lam must be >= 1, mu >= 0")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")


@dataclass
class RoundRecord:
    ell: int
    u_star: float
    c1_violations: int
    c2_violations: int
    wall_time: float


@dataclass
class RceTrace:
    rounds: list = field(default_factory=list)
    final_sub: model.SubproblemSolution | None = None
    final_rjs: list | None = None

    @property
    def objective(self) -> float:
        return self.rounds[-1].u_star if self.rounds else float("nan")


def initial_index_set(A, cfg: RceConfig) -> list:
    """Seed L with the lam nearest neighbours of each greedy pick plus mu
    extra columns drawn uniformly without replacement (seeded)."""
    arr = as_array(A)
    n = arr.shape[1]
    if n < cfg.r:
        raise ValueError(f"need at least r={cfg.r} columns, got {n}")
    if cfg.lam * cfg.r > n:
        raise ValueError(f"lam*r = {cfg.lam * cfg.r} exceeds n = {n}")
    anchors = spa(arr, cfg.r)
    nn = set()
    for i in anchors:
        dist = np.linalg.norm(arr - arr[:, [i]], axis=0)
        order = np.argsort(dist, kind="stable")
        nn.update(int(u) for u in order[:cfg.lam])
    rest = np.array(sorted(set(range(n)) - nn), dtype=int)
    rng = np.random.default_rng(cfg.seed)
    take = min(cfg.mu, rest.size)
    extra = rng.choice(rest, size=take, replace=False) if take else []
    return sorted(nn | {int(j) for j in extra})


def rce_solve(A, cfg: RceConfig, initial=None):
    """Solve the full Hottopixx model by row-and-column expansion.

    Returns (X, trace) where X is the n x n optimal solution.  If
    `initial` is given it is used as the starting L instead of the
    seeded construction.
    """
    arr = as_array(A)
    n = arr.shape[1]
    if cfg.r > n:
        raise ValueError(f"r={cfg.r} exceeds column count {n}")
    L = sorted(initial) if initial is not None else initial_index_set(arr, cfg)
    if len(L) < cfg.r:
        raise ValueError(f"initial L has {len(L)} < r = {cfg.r} elements")
    max_rounds = cfg.max_rounds if cfg.max_rounds is not None else n
    trace = RceTrace()

    for _ in range(max_rounds):
        t0 = time.perf_counter()
        sub = model.solve_subproblem(arr, L, cfg.r)
        eps = cfg.eps * max(1.0, sub.u_star)

        if len(L) == n:
            trace.rounds.append(RoundRecord(
                ell=n, u_star=sub.u_star, c1_violations=0, c2_violations=0,
                wall_time=time.perf_counter() - t0))
            trace.final_sub, trace.final_rjs = sub, []
            return sub.X_star.copy(), trace

        diag = np.diag(sub.X_star)
        rjs = [model.solve_rj(arr, L, j, diag)
               for j in range(n) if j not in set(L)]
        c1_ok, c1_viol = model.check_c1(sub, rjs, eps)
        if not c1_ok:
            trace.rounds.append(RoundRecord(
                ell=len(L), u_star=sub.u_star, c1_violations=len(c1_viol),
                c2_violations=0, wall_time=time.perf_counter() - t0))
            L = sorted(set(L) | set(c1_viol))
            continue

        c2_ok, c2_viol = model.check_c2(sub, arr, eps)
        trace.rounds.append(RoundRecord(
            ell=len(L), u_star=sub.u_star, c1_violations=0,
            c2_violations=len(c2_viol), wall_time=time.perf_counter() - t0))
        if not c2_ok:
            L = sorted(set(L) | set(c2_viol))
            continue

        X = model.assemble_full(sub, rjs, n)
        trace.final_sub, trace.final_rjs = sub, rjs
        return X, trace

    raise RceRoundLimitError(trace)
