"""Rounding of fractional master solutions and the repeated column
generation driver.

Each rounding step fixes caching decisions one ``(slot, content)`` pair at a
time, guided by ``z[t, f]``, the total master weight of content f's columns
that cache it in slot t.  Column generation is then re-run under the fixes,
reusing the column pool, until the master solution is integral.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .colgen import Column, ColumnPool, Pricer, RmpSolution, run_cga
from .cost import CachePlan, check_capacity, total_cost
from .errors import ContractError, SolverError
from .fixes import FixSet
from .model import Instance

log = logging.getLogger(__name__)

EPS = 1e-6

__all__ = [
    "EPS",
    "FixSet",
    "compute_z",
    "is_binary",
    "tra_step",
    "run_rcga",
    "RcgaResult",
]


def compute_z(solution: RmpSolution, instance: Instance) -> np.ndarray:
    """``z[t, f] = sum_k x^(k)[t] * w_k`` over content f's columns."""
    z = np.zeros((instance.T, instance.F))
    for col, w in zip(solution.columns, solution.w):
        if w:
            z[:, col.content] += w * np.asarray(col.sequence, dtype=float)
    near = np.isclose(z, 0.0, rtol=0, atol=1e-9) | (z < 0)
    z[near] = 0.0
    near = np.isclose(z, 1.0, rtol=0, atol=1e-9) | (z > 1)
    z[near] = 1.0
    return z


def is_binary(values: np.ndarray, eps: float = EPS) -> bool:
    values = np.asarray(values, dtype=float)
    return bool((np.minimum(np.abs(values), np.abs(1.0 - values)) <= eps).all())


class TraStep(NamedTuple):
    fixes: FixSet
    pool: ColumnPool
    pair: tuple[int, int]  # the (t, f) rounded in step (iii), 0-based
    value: int


def _spare(fixes: FixSet, t: int, instance: Instance) -> int:
    return instance.capacity - fixes.fixed_one_load(t, instance.sizes)


def tra_step(solution: RmpSolution, pool: ColumnPool, fixes: FixSet, instance: Instance) -> TraStep:
    """One rounding step on a fractional master solution.

    Returns a new fix set (a superset of ``fixes``); ``pool`` is updated in
    place, dropping columns that contradict the new fixes and adding, per
    content, the column that caches exactly the slots fixed to one.
    """
    z = compute_z(solution, instance)
    frac = (z > EPS) & (z < 1 - EPS)
    if not frac.any():
        raise ContractError("rounding requires a fractional master solution")
    fixes = fixes.copy()

    for t, f in zip(*np.nonzero(z >= 1 - EPS)):
        fixes.fix(int(t), int(f), 1)
    for t in range(instance.T):
        if _spare(fixes, t, instance) < 0:
            raise ContractError(f"slot {t}: integral master entries exceed capacity")

    low = np.where(frac, z, np.inf)
    high = np.where(frac, 1.0 - z, np.inf)
    t_lo, f_lo = np.unravel_index(int(np.argmin(low)), z.shape)
    t_hi, f_hi = np.unravel_index(int(np.argmin(high)), z.shape)
    if low[t_lo, f_lo] < high[t_hi, f_hi]:
        pair, value = (int(t_lo), int(f_lo)), 0
    elif instance.sizes[f_hi] <= _spare(fixes, int(t_hi), instance):
        pair, value = (int(t_hi), int(f_hi)), 1
    else:
        pair, value = (int(t_hi), int(f_hi)), 0
    fixes.fix(*pair, value)

    for t in range(instance.T):
        spare = _spare(fixes, t, instance)
        for f in range(instance.F):
            if fixes.get(t, f) is None and instance.sizes[f] > spare:
                fixes.fix(t, f, 0)

    pool.discard_incompatible(fixes)
    for f in range(instance.F):
        seq = [0] * instance.T
        for t, v in fixes.for_content(f).items():
            seq[t] = v
        pool.add(Column.make(f, seq, instance))
    return TraStep(fixes, pool, pair, value)


@dataclass
class RcgaResult:
    plan: CachePlan
    cost: int
    lower_bound: float
    iterations: int
    fixes: FixSet
    lower_bound_seconds: float = 0.0
    theorem3_violations: int = 0
    min_reduced_costs: list[float] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)


def run_rcga(
    instance: Instance,
    *,
    trace_sink: Callable[[dict], None] | None = None,
    cga_log: Callable[[str], None] | None = None,
) -> RcgaResult:
    """Alternate column generation and rounding until the master is integral.

    The objective of the first (unfixed) column generation pass is returned
    as ``lower_bound``.  Each iteration fixes at least one ``(slot, content)``
    pair, and the loop stops as soon as all of them are fixed, so at most
    ``F * T`` iterations are run.
    """
    pricer = Pricer(instance)
    pool = ColumnPool.seeded(instance)
    fixes = FixSet()
    limit = max(instance.F * instance.T, 1)
    lower = None
    violations = 0
    min_rcs: list[float] = []
    trace: list[dict] = []
    it = 0
    start = time.perf_counter()
    lb_seconds = 0.0
    x = None
    while True:
        it += 1
        if it > limit:
            raise SolverError(f"rounding did not terminate within {limit} iterations")
        cga = run_cga(instance, fixes, pool, pricer=pricer, log_sink=cga_log)
        sol = cga.solution
        if lower is None:
            lower = sol.objective
            lb_seconds = time.perf_counter() - start
        min_rcs.append(cga.min_reduced_cost)
        z = compute_z(sol, instance)
        z_binary = is_binary(z)
        w_integral = is_binary(sol.w)
        if z_binary != w_integral:
            violations += 1
            log.warning("iteration %d: w integral=%s but z binary=%s", it, w_integral, z_binary)
        entry = {
            "iteration": it,
            "fixes": len(fixes),
            "fractional": int(((z > EPS) & (z < 1 - EPS)).sum()),
            "objective": sol.objective,
            "cga_iterations": cga.iterations,
        }
        trace.append(entry)
        if trace_sink is not None:
            trace_sink(entry)
        if z_binary:
            x = (z > 0.5).astype(np.int8)
            break
        fixes, pool, _, _ = tra_step(sol, pool, fixes, instance)
        if len(fixes) == instance.F * instance.T:
            # every decision is made; another master solve would only
            # reproduce the forced plan
            x, _ = fixes.masks(instance.T, instance.F)
            x = x.astype(np.int8)
            break

    plan = CachePlan(x)
    violation = check_capacity(plan, instance)
    if violation is not None:
        raise SolverError(f"rounded plan violates capacity ({violation})")
    for (t, f), v in fixes.items():
        if plan.x[t, f] != v:
            raise SolverError(f"rounded plan contradicts fix x[{t},{f}]={v}")
    return RcgaResult(
        plan=plan,
        cost=total_cost(plan, instance),
        lower_bound=lower,
        iterations=it,
        fixes=fixes,
        lower_bound_seconds=lb_seconds,
        theorem3_violations=violations,
        min_reduced_costs=min_rcs,
        trace=trace,
    )
