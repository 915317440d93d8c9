import numpy as np
import pytest

from cachesched.cost import check_capacity
from cachesched.model import Instance, Request


def tiny_instance() -> Instance:
    """T=2, F=2, sizes (2, 3), S=3, c_s=2, c_b=1, three requests."""
    return Instance(
        T=2, F=2, U=2, sizes=(2, 3), capacity=3, cost_server=2, cost_cache=1,
        requests=(
            Request(user=1, index=1, content=1, origin=1, deadline=2),
            Request(user=2, index=1, content=2, origin=1, deadline=1),
            Request(user=2, index=2, content=1, origin=2, deadline=2),
        ),
    )


def random_instance(rng: np.random.Generator, T: int, F: int, *, max_requests=8, max_size=5,
                    cost_server=None, cost_cache=None) -> Instance:
    """Arbitrary small instance, drawn independently of the workload generator."""
    sizes = tuple(int(s) for s in rng.integers(1, max_size + 1, size=F))
    capacity = int(rng.integers(0, sum(sizes) + 1))
    cb = int(rng.integers(0, 3)) if cost_cache is None else cost_cache
    cs = cb + int(rng.integers(1, 6)) if cost_server is None else cost_server
    n = int(rng.integers(0, max_requests + 1))
    requests = []
    for i in range(n):
        o = int(rng.integers(1, T + 1))
        d = int(rng.integers(o, T + 1))
        requests.append(
            Request(user=i + 1, index=1, content=int(rng.integers(1, F + 1)), origin=o, deadline=d)
        )
    return Instance(T=T, F=F, U=max(n, 1), sizes=sizes, capacity=capacity,
                    cost_server=cs, cost_cache=cb, requests=tuple(requests))


def assert_feasible(plan, instance):
    violation = check_capacity(plan, instance)
    assert violation is None, str(violation)


@pytest.fixture
def tiny():
    return tiny_instance()


@pytest.fixture
def empty_instance():
    return Instance(T=3, F=2, U=1, sizes=(2, 3), capacity=4, cost_server=5, cost_cache=1)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
