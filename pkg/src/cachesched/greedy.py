"""Slot-by-slot greedy baselines: popularity-based (PBC) and random-based (RBC)
caching.

Popularity of content f in slot t is the number of requests for f whose
deadline is exactly t.  Both baselines walk the slots in order and admit
contents one at a time in a per-slot ordering; they only differ in how that
ordering is produced.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .cost import CachePlan, total_cost
from .model import Instance

RBC_SMOOTHING = 1e-9


def popularity(instance: Instance) -> np.ndarray:
    """``P[t, f]``: requests for content f due exactly in (0-based) slot t."""
    P = np.zeros((instance.T, instance.F), dtype=np.int64)
    for r in instance.requests:
        P[r.deadline - 1, r.content - 1] += 1
    return P


def _by_popularity(P_t: np.ndarray) -> np.ndarray:
    # stable sort keeps smaller content ids first on ties
    return np.argsort(-P_t, kind="stable")


def _greedy(instance: Instance, order_for_slot: Callable[[int, np.ndarray], np.ndarray]) -> CachePlan:
    T, F = instance.T, instance.F
    sizes = instance.sizes
    P = popularity(instance)
    x = np.zeros((T, F), dtype=np.int8)
    prev = np.zeros(F, dtype=np.int8)
    for t in range(T):
        spare = instance.capacity
        order = order_for_slot(t, P[t])
        for pos, f in enumerate(order):
            size = sizes[f]
            if size > spare:
                continue
            if prev[f]:
                x[t, f] = 1
                spare -= size
                continue
            # contents that would have to make room: cached last slot and
            # ranked after f; take the least popular until they cover l_f
            psi = [i for i in order[pos + 1 :] if prev[i]]
            e_del = 0
            l_del = 0
            while l_del <= size and psi:
                victim = min(psi, key=lambda i: (P[t, i], i))
                e_del += P[t, victim]
                l_del += sizes[victim]
                psi.remove(victim)
            if P[t, f] > 0 and P[t, f] >= e_del:
                x[t, f] = 1
                spare -= size
        prev = x[t]
    return CachePlan(x)


def run_pbc(instance: Instance) -> tuple[CachePlan, int]:
    plan = _greedy(instance, lambda t, P_t: _by_popularity(P_t))
    return plan, total_cost(plan, instance)


def random_order(rng: np.random.Generator, P_t: np.ndarray) -> np.ndarray:
    """Permutation drawn without replacement, each pick proportional to
    popularity (smoothed so unrequested contents can still be drawn)."""
    weights = P_t.astype(float) + RBC_SMOOTHING
    return rng.choice(len(P_t), size=len(P_t), replace=False, p=weights / weights.sum())


def run_rbc(instance: Instance, seed: int = 0) -> tuple[CachePlan, int]:
    """Like :func:`run_pbc` but each slot's ordering is :func:`random_order`."""
    rng = np.random.default_rng(seed)
    plan = _greedy(instance, lambda t, P_t: random_order(rng, P_t))
    return plan, total_cost(plan, instance)
