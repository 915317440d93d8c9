"""Restricted master LP: ``min c.w  s.t.  A_cap w <= S,  A_conv w = 1,  0 <= w <= 1``.

The LP is solved with the HiGHS dual simplex shipped in scipy, which is
deterministic and exposes row duals.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import SolverError

log = logging.getLogger(__name__)

FEAS_TOL = 1e-7
DUAL_TOL = 1e-6


@dataclass
class LpProblem:
    cost: np.ndarray  # (n,)
    capacity_rows: sp.csr_matrix  # (T, n), one <= row per slot
    capacity_rhs: np.ndarray  # (T,)
    convexity_rows: sp.csr_matrix  # (F, n), one = 1 row per content

    def __post_init__(self):
        n = len(self.cost)
        if self.capacity_rows.shape[1] != n or self.convexity_rows.shape[1] != n:
            raise ValueError("row matrices must have one column per variable")
        if self.capacity_rows.shape[0] != len(self.capacity_rhs):
            raise ValueError("capacity_rhs must match the capacity row count")

    @property
    def n(self) -> int:
        return len(self.cost)


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible"
    w: np.ndarray | None = None
    pi: np.ndarray | None = None
    beta: np.ndarray | None = None
    objective: float | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve the master LP and return primal weights plus row duals.

    ``pi`` are the capacity-row duals (non-positive), ``beta`` the convexity
    duals, both in the convention ``reduced cost = c - A_cap' pi - A_conv' beta``.
    """
    F = problem.convexity_rows.shape[0]
    # w <= 1 is implied by the convexity rows; leaving it out keeps all dual
    # information on the rows instead of on degenerate bound constraints.
    res = linprog(
        problem.cost,
        A_ub=problem.capacity_rows,
        b_ub=problem.capacity_rhs,
        A_eq=problem.convexity_rows,
        b_eq=np.ones(F),
        bounds=(0, None),
        method="highs-ds",
        options={"presolve": False},
    )
    if res.status == 2:
        return LpSolution(status="infeasible")
    if res.status != 0:
        raise SolverError(f"LP solve failed (status {res.status}): {res.message}")
    return LpSolution(
        status="optimal",
        w=np.clip(res.x, 0.0, None),
        pi=np.asarray(res.ineqlin.marginals, dtype=float),
        beta=np.asarray(res.eqlin.marginals, dtype=float),
        objective=float(res.fun),
    )
