import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cachesched.cost import (
    CachePlan,
    CapacityViolation,
    assign_downloads,
    check_capacity,
    column_cost,
    derive_updates,
    download_cost,
    load_plan,
    save_plan,
    total_cost,
    update_cost,
)
from cachesched.errors import ParameterError, ParseError
from cachesched.model import Instance, Request

from conftest import random_instance


def one_content(T, requests, size=1):
    return Instance(T=T, F=1, U=len(requests) or 1, sizes=(size,), capacity=size,
                    cost_server=2, cost_cache=1,
                    requests=tuple(Request(i + 1, 1, 1, o, d) for i, (o, d) in enumerate(requests)))


def reference_cost(x, inst):
    """Direct transcription of the objective: per-request service at any
    cached slot in the window, plus a load charge per 0->1 transition."""
    total = 0
    for r in inst.requests:
        l = inst.sizes[r.content - 1]
        hit = any(x[t - 1][r.content - 1] for t in range(r.origin, r.deadline + 1))
        total += l * (inst.cost_cache if hit else inst.cost_server)
    for f in range(inst.F):
        for t in range(inst.T):
            before = x[t - 1][f] if t else 0
            if x[t][f] and not before:
                total += inst.sizes[f] * (inst.cost_server - inst.cost_cache)
    return total


@pytest.mark.parametrize(
    "xf, af", [([1, 1], [1, 0]), ([0, 1], [0, 1]), ([1, 0, 1], [1, 0, 1])]
)
def test_derive_updates(xf, af):
    inst = one_content(len(xf), [])
    a = derive_updates(np.array(xf)[:, None], inst)
    assert a[:, 0].tolist() == af


def test_derive_updates_shape_mismatch(tiny):
    with pytest.raises(ParameterError):
        derive_updates(np.zeros((3, 2)), tiny)


@pytest.mark.parametrize(
    "origin, deadline, xf, expected",
    [(1, 2, [0, 1], 2), (1, 2, [1, 1], 1), (2, 2, [1, 0], None)],
)
def test_assign_downloads(origin, deadline, xf, expected):
    inst = one_content(2, [(origin, deadline)])
    plan = CachePlan(np.array(xf)[:, None])
    assert assign_downloads(plan, inst).slots == (expected,)


def test_tiny_costs(tiny):
    plan = CachePlan.from_slots(tiny, [[2], [1]])
    assert download_cost(plan, tiny) == 7
    assert update_cost(plan, tiny) == 5
    assert total_cost(plan, tiny) == 12
    assert assign_downloads(plan, tiny).slots == (2, 1, 2)

    content1_slot2 = CachePlan([[0, 0], [1, 0]])
    assert update_cost(content1_slot2, tiny) == 2
    assert total_cost(content1_slot2, tiny) == 12

    both_first = CachePlan([[1, 1], [0, 0]])
    assert update_cost(both_first, tiny) == 2 + 3

    empty = CachePlan.empty(tiny)
    assert download_cost(empty, tiny) == 14
    assert update_cost(empty, tiny) == 0
    assert total_cost(empty, tiny) == 14


def test_update_cost_content1_first_slot(tiny):
    # x_1 = [1, 1] (content 1 cached in both slots), nothing else
    plan = CachePlan([[1, 0], [1, 0]])
    assert update_cost(plan, tiny) == 2


def test_zero_requests(empty_instance):
    plan = CachePlan.empty(empty_instance)
    assert download_cost(plan, empty_instance) == 0
    assert total_cost(plan, empty_instance) == 0


def test_check_capacity(tiny):
    v = check_capacity(CachePlan.from_slots(tiny, [[1, 2], []]), tiny)
    assert v == CapacityViolation(slot=1, load=5, capacity=3)
    assert check_capacity(CachePlan.empty(tiny), tiny) is None
    assert check_capacity(CachePlan.from_slots(tiny, [[2], []]), tiny) is None


@pytest.mark.parametrize("seq, expected", [([0, 0], 8), ([0, 1], 6), ([1, 1], 6)])
def test_column_cost_examples(tiny, seq, expected):
    assert column_cost(0, seq, tiny) == expected


def test_column_cost_length_checked(tiny):
    with pytest.raises(ParameterError):
        column_cost(0, [0, 1, 1], tiny)


def test_plan_rejects_non_binary():
    with pytest.raises(ParameterError):
        CachePlan([[0, 2]])


def random_plan(rng, inst):
    return CachePlan(rng.integers(0, 2, size=(inst.T, inst.F)))


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), T=st.integers(1, 6), F=st.integers(1, 5))
def test_costs_match_reference(seed, T, F):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, T, F)
    plan = random_plan(rng, inst)
    cost = total_cost(plan, inst)
    assert cost == reference_cost(plan.x.tolist(), inst)
    # per-content decomposition
    assert cost == sum(column_cost(f, plan.x[:, f], inst) for f in range(F))
    # service slots lie in the window and hit a cached copy
    for r, slot in zip(inst.requests, assign_downloads(plan, inst).slots):
        if slot is not None:
            assert r.origin <= slot <= r.deadline
            assert plan.x[slot - 1, r.content - 1] == 1
    assert total_cost(CachePlan.empty(inst), inst) == sum(
        inst.cost_server * inst.sizes[r.content - 1] for r in inst.requests
    )


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), T=st.integers(1, 6), F=st.integers(1, 4))
def test_adding_a_slot_never_raises_download_cost(seed, T, F):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, T, F)
    x = rng.integers(0, 2, size=(T, F))
    t, f = int(rng.integers(T)), int(rng.integers(F))
    y = x.copy()
    y[t, f] = 1

    def download_for(plan, f):
        slots = assign_downloads(plan, inst).slots
        return sum(
            inst.sizes[f] * (inst.cost_cache if s is not None else inst.cost_server)
            for r, s in zip(inst.requests, slots) if r.content - 1 == f
        )

    assert download_for(CachePlan(y), f) <= download_for(CachePlan(x), f)


def test_plan_round_trip(tiny, tmp_path):
    plan = CachePlan.from_slots(tiny, [[2], [1]])
    path = tmp_path / "plan.json"
    save_plan(plan, path, algo="exact", cost=12)
    assert load_plan(path, tiny) == plan
    buf = io.StringIO()
    save_plan(plan, buf)
    assert '[0, 1]' in buf.getvalue().splitlines()[4]


def test_plan_parse_errors(tiny):
    with pytest.raises(ParseError):
        load_plan(io.StringIO('{"x": [[0, 0, 0]]}'), tiny)
    with pytest.raises(ParseError):
        load_plan(io.StringIO('{"T": 2}'), tiny)
    with pytest.raises(ParseError):
        load_plan(io.StringIO('{"x": [[0, 3], [0, 0]]}'), tiny)
