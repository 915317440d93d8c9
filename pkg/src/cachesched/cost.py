"""Feasibility and cost evaluation for caching plans.

Plans are ``(T, F)`` 0/1 matrices indexed by 0-based slot and content.
All costs are exact integers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParameterError, ParseError
from .model import Instance


class CachePlan:
    """Binary caching matrix ``x[t, f]`` with its derived update matrix."""

    __slots__ = ("x",)

    def __init__(self, x):
        x = np.array(x, dtype=np.int8)
        if x.ndim != 2:
            raise ParameterError("plan: x must be a 2-D matrix")
        if not np.isin(x, (0, 1)).all():
            raise ParameterError("plan: x must be binary")
        x.setflags(write=False)
        self.x = x

    @classmethod
    def empty(cls, instance: Instance) -> "CachePlan":
        return cls(np.zeros((instance.T, instance.F), dtype=np.int8))

    @classmethod
    def from_slots(cls, instance: Instance, slots: Sequence[Sequence[int]]) -> "CachePlan":
        """Build from per-slot lists of 1-based content ids."""
        x = np.zeros((instance.T, instance.F), dtype=np.int8)
        for t, contents in enumerate(slots):
            for c in contents:
                x[t, c - 1] = 1
        return cls(x)

    @property
    def a(self) -> np.ndarray:
        return _updates(self.x)

    def cached(self, t: int) -> list[int]:
        """1-based ids of the contents stored in 0-based slot ``t``."""
        return [int(f) + 1 for f in np.flatnonzero(self.x[t])]

    def __eq__(self, other):
        return isinstance(other, CachePlan) and np.array_equal(self.x, other.x)

    def __repr__(self):
        slots = [self.cached(t) for t in range(self.x.shape[0])]
        return f"CachePlan({slots})"


@dataclass(frozen=True)
class DownloadAssignment:
    """Per-request service slot (1-based), ``None`` meaning served by the server.

    Entries are aligned with ``instance.requests``.
    """

    slots: tuple[int | None, ...]

    def from_cache(self, i: int) -> bool:
        return self.slots[i] is not None


def _updates(x: np.ndarray) -> np.ndarray:
    prev = np.zeros_like(x)
    prev[1:] = x[:-1]
    return ((x == 1) & (prev == 0)).astype(np.int8)


def _check_shape(x: np.ndarray, instance: Instance) -> None:
    if x.shape != (instance.T, instance.F):
        raise ParameterError(
            f"plan: expected shape {(instance.T, instance.F)}, got {tuple(x.shape)}"
        )


def derive_updates(x, instance: Instance) -> np.ndarray:
    """``a[t, f] = 1`` iff content f enters the cache at slot t (slot 0 empty)."""
    x = np.asarray(x)
    _check_shape(x, instance)
    return _updates(x)


def assign_downloads(plan: CachePlan, instance: Instance) -> DownloadAssignment:
    """Serve each request at the earliest cached slot inside its window."""
    _check_shape(plan.x, instance)
    x = plan.x
    slots = []
    for r in instance.requests:
        col = x[r.origin - 1 : r.deadline, r.content - 1]
        hits = np.flatnonzero(col)
        slots.append(int(hits[0]) + r.origin if hits.size else None)
    return DownloadAssignment(tuple(slots))


def download_cost(plan: CachePlan, instance: Instance) -> int:
    assignment = assign_downloads(plan, instance)
    total = 0
    for r, slot in zip(instance.requests, assignment.slots):
        unit = instance.cost_cache if slot is not None else instance.cost_server
        total += unit * instance.sizes[r.content - 1]
    return total


def update_cost(plan: CachePlan, instance: Instance) -> int:
    a = derive_updates(plan.x, instance)
    loads = a.sum(axis=0).astype(np.int64)
    return int(instance.update_unit * int(loads @ instance.size_array))


def total_cost(plan: CachePlan, instance: Instance) -> int:
    return download_cost(plan, instance) + update_cost(plan, instance)


@dataclass(frozen=True)
class CapacityViolation:
    slot: int  # 1-based
    load: int
    capacity: int

    def __str__(self):
        return f"slot {self.slot}: load {self.load} > capacity {self.capacity}"


def slot_loads(plan: CachePlan, instance: Instance) -> np.ndarray:
    _check_shape(plan.x, instance)
    return plan.x.astype(np.int64) @ instance.size_array


def check_capacity(plan: CachePlan, instance: Instance) -> CapacityViolation | None:
    """Return the first over-full slot, or ``None`` when the plan fits."""
    loads = slot_loads(plan, instance)
    for t, load in enumerate(loads):
        if load > instance.capacity:
            return CapacityViolation(slot=t + 1, load=int(load), capacity=instance.capacity)
    return None


def column_cost(f: int, sequence: Sequence[int], instance: Instance) -> int:
    """Cost attributable to content ``f`` (0-based) when cached per ``sequence``.

    Download cost of the requests for f plus the update cost of the sequence.
    Requests for other contents do not contribute, so summing this over all
    contents of a plan gives its total cost.
    """
    seq = [int(v) for v in sequence]
    if len(seq) != instance.T:
        raise ParameterError(f"sequence: expected length {instance.T}, got {len(seq)}")
    size = instance.sizes[f]
    cost = 0
    prev = 0
    for v in seq:
        if v and not prev:
            cost += size * instance.update_unit
        prev = v
    for r in instance.requests_by_content[f]:
        served = any(seq[t] for t in range(r.origin - 1, r.deadline))
        cost += size * (instance.cost_cache if served else instance.cost_server)
    return cost


# --- plan documents ------------------------------------------------------------


def plan_to_dict(plan: CachePlan, **extra) -> dict:
    T, F = plan.x.shape
    return {"T": int(T), "F": int(F), "x": plan.x.astype(int).tolist(), **extra}


def save_plan(plan: CachePlan, sink, **extra) -> None:
    doc = plan_to_dict(plan, **extra)
    rows = ",\n    ".join(json.dumps(row) for row in doc.pop("x"))
    head = json.dumps(doc, indent=2)[:-2]
    text = f'{head},\n  "x": [\n    {rows}\n  ]\n}}\n'
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def load_plan(source, instance: Instance | None = None) -> CachePlan:
    text = source.read() if hasattr(source, "read") else Path(source).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("<document>", f"invalid JSON ({exc})") from None
    if not isinstance(doc, dict) or "x" not in doc:
        raise ParseError("x", "missing field")
    try:
        plan = CachePlan(doc["x"])
    except (ParameterError, ValueError, TypeError) as exc:
        raise ParseError("x", str(exc)) from None
    if instance is not None and plan.x.shape != (instance.T, instance.F):
        raise ParseError("x", f"expected shape {(instance.T, instance.F)}, got {plan.x.shape}")
    return plan
