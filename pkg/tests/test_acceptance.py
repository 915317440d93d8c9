"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) or through pytest; the
lines are also collected into the pytest terminal summary.

Criteria 6, 8 and 9 audit every RCGA run (and every emitted plan) produced
while checking criteria 2-5; the session fixtures below hold those runs.
"""
import itertools
import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from cachesched.colgen import Pricer, build_sp_graph, shortest_path
from cachesched.cost import check_capacity
from cachesched.exact import solve_exact
from cachesched.experiments import PAPER_DEFAULTS, gap
from cachesched.fixes import FixSet
from cachesched.greedy import run_pbc, run_rbc
from cachesched.model import GenParams, build_partition_instance, generate_instance
from cachesched.rounding import run_rcga

from conftest import random_instance

RESULTS: list[str] = []


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number} ({title}): {detail}"
    RESULTS.append(line)
    print(line)
    return ok


# --- criterion 1 --------------------------------------------------------------


def enumerate_objectives(inst, f, numerators, denom):
    """Scaled pricing objective ``denom * (C_f - sum_t l_f pi_t x_t)`` of every
    sequence, computed from scratch: row i of the result is sequence i in
    lexicographic order."""
    T = inst.T
    seqs = np.array(list(itertools.product((0, 1), repeat=T)), dtype=np.int64)
    size = inst.sizes[f]
    prev = np.concatenate([np.zeros((len(seqs), 1), dtype=np.int64), seqs[:, :-1]], axis=1)
    loads = ((seqs == 1) & (prev == 0)).sum(axis=1)
    cost = loads * size * (inst.cost_server - inst.cost_cache)
    prefix = np.concatenate([np.zeros((len(seqs), 1), dtype=np.int64), seqs.cumsum(axis=1)], axis=1)
    for r in inst.requests:
        if r.content - 1 != f:
            continue
        hit = prefix[:, r.deadline] - prefix[:, r.origin - 1] > 0
        cost = cost + size * np.where(hit, inst.cost_cache, inst.cost_server)
    return seqs, denom * cost - size * (seqs @ np.asarray(numerators, dtype=np.int64))


def test_criterion_1_pricing_oracle_equivalence():
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    mismatches = 0
    checked = 0
    for _ in range(1000):
        T = int(rng.integers(1, 11))
        F = int(rng.integers(1, 6))
        inst = random_instance(rng, T, F, max_requests=15, max_size=9)
        dens = [int(d) for d in rng.integers(1, 13, size=T)]
        pi = [Fraction(-int(rng.integers(0, 60)), d) for d in dens]
        denom = math.lcm(*dens)
        numerators = [int(p * denom) for p in pi]
        fixes = FixSet()
        if rng.random() < 0.3:
            for t in range(T):
                for f in range(F):
                    if rng.random() < 0.25:
                        fixes.fix(t, f, int(rng.integers(2)))
        _, pricer_objs = Pricer(inst).price(np.array(pi, dtype=object), fixes)
        for f in range(F):
            seqs, objs = enumerate_objectives(inst, f, numerators, denom)
            allowed = np.array([fixes.allows(f, s) for s in seqs])
            best = int(objs[allowed].min())
            seq, length = shortest_path(build_sp_graph(f, pi, inst, fixes))
            index = int("".join(map(str, seq)), 2)
            ok = (
                length * denom == best
                and pricer_objs[f] * denom == best
                and int(objs[index]) == best
                and fixes.allows(f, seq)
            )
            mismatches += not ok
            checked += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    report(1, "pricing-oracle equivalence", ok,
           f"1000 instances, {checked} subproblems, {mismatches} mismatches, {elapsed:.1f} s (limit 60 s)")
    assert ok


# --- shared runs ----------------------------------------------------------------


def small_params(rng, seed):
    T = int(rng.integers(1, 5))
    F = int(rng.integers(1, 12 // T + 1))
    return GenParams(
        T=T, F=F, U=int(rng.integers(1, 9)), size_range=(1, int(rng.integers(1, 11))),
        rho=float(rng.uniform(0.1, 0.9)), gamma=0.56, alpha=float(rng.uniform(0, 1)),
        requests_per_user_range=(1, 4), cost_server=10, cost_cache=1, seed=seed,
    )


@pytest.fixture(scope="session")
def small_runs():
    """Criterion 2/3 data: 200 instances with F*T <= 12."""
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    runs = []
    for seed in range(200):
        inst = generate_instance(small_params(rng, seed))
        exact_plan, exact = solve_exact(inst)
        rcga = run_rcga(inst)
        plans = {"exact": exact_plan, "rcga": rcga.plan,
                 "pbc": run_pbc(inst)[0], "rbc": run_rbc(inst, seed=seed)[0]}
        runs.append((inst, exact, rcga, plans))
    return runs, time.perf_counter() - start


@pytest.fixture(scope="session")
def paper_run():
    inst = generate_instance(PAPER_DEFAULTS)
    start = time.perf_counter()
    rcga = run_rcga(inst)
    elapsed = time.perf_counter() - start
    pbc_plan, pbc = run_pbc(inst)
    rbc_plan, rbc = run_rbc(inst, seed=PAPER_DEFAULTS.seed)
    return inst, rcga, elapsed, {"pbc": (pbc_plan, pbc), "rbc": (rbc_plan, rbc)}


@pytest.fixture(scope="session")
def alpha_runs():
    runs = {}
    for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
        for rep in range(3):
            params = GenParams(**{**PAPER_DEFAULTS.__dict__, "alpha": alpha, "seed": rep})
            inst = generate_instance(params)
            runs[(alpha, rep)] = (inst, run_rcga(inst))
    return runs


def all_rcga_runs(small_runs, paper_run, alpha_runs):
    runs = [(inst, rcga) for inst, _, rcga, _ in small_runs[0]]
    runs.append((paper_run[0], paper_run[1]))
    runs.extend(alpha_runs.values())
    return runs


# --- criteria 2-5 --------------------------------------------------------------


def test_criterion_2_exact_sandwich(small_runs):
    runs, elapsed = small_runs
    violations = 0
    for inst, exact, rcga, _ in runs:
        lb_ok = rcga.lower_bound <= exact + 1e-6 * max(1.0, abs(rcga.lower_bound))
        violations += not (lb_ok and exact <= rcga.cost)
    ok = violations == 0 and elapsed < 300
    report(2, "exact-oracle sandwich", ok,
           f"{len(runs)} instances, {violations} violations of LB <= exact <= RCGA, "
           f"{elapsed:.1f} s (limit 300 s)")
    assert ok


def test_criterion_3_rcga_quality_small(small_runs):
    runs, _ = small_runs
    gaps = np.array([
        0.0 if exact == rcga.cost else (rcga.cost - exact) / exact
        for _, exact, rcga, _ in runs
    ])
    median = float(np.median(gaps))
    p95 = float(np.percentile(gaps, 95))
    ok = median <= 0.02 and p95 <= 0.05
    report(3, "RCGA quality at desk scale", ok,
           f"median gap {median:.4%} (<= 2%), p95 {p95:.4%} (<= 5%), max {gaps.max():.4%}, "
           f"optimal on {int((gaps == 0).sum())}/{len(gaps)}")
    assert ok


def test_criterion_4_paper_scale(paper_run):
    inst, rcga, elapsed, greedy = paper_run
    rcga_gap = gap(rcga.cost, rcga.lower_bound)
    pbc_gap = gap(greedy["pbc"][1], rcga.lower_bound)
    rbc_gap = gap(greedy["rbc"][1], rcga.lower_bound)
    parts = {
        "time": elapsed < 1800,
        "rcga": rcga_gap <= 0.03,
        "pbc": 0.05 <= pbc_gap <= 0.40,
        "rbc": 0.05 <= rbc_gap <= 0.40,
    }
    ok = all(parts.values())
    failed = [k for k, v in parts.items() if not v]
    report(4, "paper-scale smoke run", ok,
           f"RCGA {elapsed:.1f} s (limit 1800 s), LB {rcga.lower_bound:.1f}, "
           f"RCGA gap {rcga_gap:.3%} (<= 3%), PBC gap {pbc_gap:.2%}, RBC gap {rbc_gap:.2%} "
           f"(both in [5%, 40%])" + (f"; out of range: {', '.join(failed)}" if failed else ""))
    assert ok


def test_criterion_5_deadline_slack_trend(alpha_runs):
    mean = {}
    for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
        mean[alpha] = np.mean([alpha_runs[(alpha, rep)][1].cost for rep in range(3)])
    drop = 1 - mean[1.0] / mean[0.0]
    ok = 0.20 <= drop <= 0.45
    trend = ", ".join(f"{a:g}: {c:.0f}" for a, c in mean.items())
    report(5, "deadline-slack trend", ok,
           f"mean RCGA cost by alpha ({trend}); alpha=1 is {drop:.2%} below alpha=0 (20-45%)")
    assert ok


# --- criteria 6, 8, 9: audits over every run above -------------------------------


def test_criterion_6_theorem3(small_runs, paper_run, alpha_runs):
    runs = all_rcga_runs(small_runs, paper_run, alpha_runs)
    violations = sum(r.theorem3_violations for _, r in runs)
    iterations = sum(r.iterations for _, r in runs)
    ok = violations == 0
    report(6, "w integral <=> z binary", ok,
           f"{len(runs)} RCGA runs, {iterations} iterations checked, {violations} violations")
    assert ok


def test_criterion_7_partition_reduction():
    rng = np.random.default_rng(99)
    wrong = 0
    yes = 0
    for _ in range(50):
        n = int(rng.integers(1, 13))
        values = [int(v) for v in rng.integers(1, 21, size=n)]
        total = sum(values)
        subset_sums = {sum(c) for k in range(n + 1) for c in itertools.combinations(values, k)}
        expected = total % 2 == 0 and total // 2 in subset_sums
        inst = build_partition_instance(values)
        _, cost = solve_exact(inst)
        gain = inst.server_only_cost() - cost
        answer = total % 2 == 0 and 2 * gain == total
        wrong += answer != expected
        yes += expected
    ok = wrong == 0
    report(7, "partition reduction", ok,
           f"50 multisets ({yes} yes / {50 - yes} no), {wrong} disagreements with subset-sum enumeration")
    assert ok


def test_criterion_8_termination(small_runs, paper_run, alpha_runs):
    runs = all_rcga_runs(small_runs, paper_run, alpha_runs)
    too_long = sum(r.iterations > max(inst.F * inst.T, 1) for inst, r in runs)
    worst_rc = min(min(r.min_reduced_costs) for _, r in runs)
    ok = too_long == 0 and worst_rc >= -1e-6
    worst_ratio = max(r.iterations / max(inst.F * inst.T, 1) for inst, r in runs)
    report(8, "termination", ok,
           f"{len(runs)} runs, {too_long} over F*T iterations (max ratio {worst_ratio:.3f}), "
           f"lowest final reduced cost {worst_rc:.3g} (>= -1e-6)")
    assert ok


def test_criterion_9_capacity(small_runs, paper_run, alpha_runs):
    plans = []
    for inst, _, _, by_algo in small_runs[0]:
        plans.extend((inst, p) for p in by_algo.values())
    inst, rcga, _, greedy = paper_run
    plans.append((inst, rcga.plan))
    plans.extend((inst, plan) for plan, _ in greedy.values())
    plans.extend((inst, r.plan) for inst, r in alpha_runs.values())
    bad = [str(v) for inst, p in plans if (v := check_capacity(p, inst)) is not None]
    ok = not bad
    report(9, "capacity feasibility", ok,
           f"{len(plans)} plans checked, {len(bad)} infeasible" + (f" (first: {bad[0]})" if bad else ""))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
