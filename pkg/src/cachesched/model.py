"""Problem instances: data types, random generation, the Partition
construction and JSON (de)serialization.

Ids stored in :class:`Request` (user, content, origin, deadline) are 1-based,
exactly as they appear in instance documents.  Array-facing code elsewhere in
the package uses 0-based ``t``/``f`` indices.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from numbers import Integral
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .errors import ParameterError, ParseError

SWEEPABLE = ("alpha", "T", "U", "F", "rho", "gamma")


@dataclass(frozen=True)
class Request:
    user: int
    index: int
    content: int
    origin: int
    deadline: int


@dataclass(frozen=True)
class Instance:
    T: int
    F: int
    U: int
    sizes: tuple[int, ...]
    capacity: int
    cost_server: int
    cost_cache: int
    requests: tuple[Request, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(self.sizes))
        object.__setattr__(self, "requests", tuple(self.requests))
        problem = _first_problem(self)
        if problem is not None:
            raise ParameterError(f"{problem[0]}: {problem[1]}")

    @property
    def update_unit(self) -> int:
        """Per-data-unit cost of loading a content into the cache."""
        return self.cost_server - self.cost_cache

    @cached_property
    def size_array(self) -> np.ndarray:
        return np.asarray(self.sizes, dtype=np.int64)

    @cached_property
    def requests_by_content(self) -> tuple[tuple[Request, ...], ...]:
        buckets: list[list[Request]] = [[] for _ in range(self.F)]
        for r in self.requests:
            buckets[r.content - 1].append(r)
        return tuple(tuple(b) for b in buckets)

    def server_only_cost(self) -> int:
        return sum(self.cost_server * self.sizes[r.content - 1] for r in self.requests)


def _is_int(v) -> bool:
    return isinstance(v, Integral) and not isinstance(v, bool)


def _first_problem(inst: Instance):
    """Return ``(field, message)`` for the first invariant violation, or None."""
    for name in ("T", "F", "U", "capacity", "cost_server", "cost_cache"):
        if not _is_int(getattr(inst, name)):
            return name, "must be an integer"
    if inst.T < 1:
        return "T", "must be >= 1"
    if inst.F < 0:
        return "F", "must be >= 0"
    if inst.U < 0:
        return "U", "must be >= 0"
    if inst.capacity < 0:
        return "capacity", "must be >= 0"
    if inst.cost_cache < 0:
        return "cost_cache", "must be >= 0"
    if not inst.cost_server > inst.cost_cache:
        return "cost_server", "must exceed cost_cache"
    if len(inst.sizes) != inst.F:
        return "sizes", f"expected {inst.F} entries, got {len(inst.sizes)}"
    for f, size in enumerate(inst.sizes):
        if not _is_int(size) or size <= 0:
            return f"sizes[{f}]", "must be a positive integer"
    seen = set()
    for i, r in enumerate(inst.requests):
        where = f"requests[{i}]"
        for name in ("user", "index", "content", "origin", "deadline"):
            if not _is_int(getattr(r, name)):
                return f"{where}.{name}", "must be an integer"
        if not 1 <= r.user <= max(inst.U, 0):
            return f"{where}.user", f"must be in 1..{inst.U}"
        if not 1 <= r.content <= inst.F:
            return f"{where}.content", f"must be in 1..{inst.F}"
        if not 1 <= r.origin <= inst.T:
            return f"{where}.origin", f"must be in 1..{inst.T}"
        if not r.origin <= r.deadline <= inst.T:
            return f"{where}.deadline", f"must be in {r.origin}..{inst.T}"
        if (r.user, r.index) in seen:
            return where, f"duplicate (user, index) = ({r.user}, {r.index})"
        seen.add((r.user, r.index))
    return None


@dataclass(frozen=True)
class GenParams:
    T: int = 24
    U: int = 600
    F: int = 200
    size_range: tuple[int, int] = (1, 10)
    rho: float = 0.5
    gamma: float = 0.56
    alpha: float = 1.0
    requests_per_user_range: tuple[int, int] = (1, 10)
    cost_server: int = 10
    cost_cache: int = 1
    seed: int = 0

    def validate(self) -> None:
        for name in ("T", "U", "F", "cost_server", "cost_cache", "seed"):
            if not _is_int(getattr(self, name)):
                raise ParameterError(f"{name}: must be an integer")
        if self.T < 1 or self.F < 1 or self.U < 0:
            raise ParameterError("T and F must be >= 1, U >= 0")
        if not 0 <= self.rho <= 1:
            raise ParameterError("rho: must be in [0, 1]")
        if not 0 <= self.alpha <= 1:
            raise ParameterError("alpha: must be in [0, 1]")
        if self.gamma < 0:
            raise ParameterError("gamma: must be >= 0")
        lo, hi = self.size_range
        if not (_is_int(lo) and _is_int(hi) and 1 <= lo <= hi):
            raise ParameterError("size_range: need integers 1 <= min <= max")
        lo, hi = self.requests_per_user_range
        if not (_is_int(lo) and _is_int(hi) and 0 <= lo <= hi):
            raise ParameterError("requests_per_user_range: need integers 0 <= min <= max")
        if not self.cost_server > self.cost_cache >= 0:
            raise ParameterError("costs: need cost_server > cost_cache >= 0")


def zipf_probabilities(F: int, gamma: float) -> np.ndarray:
    """Probability of each popularity rank 1..F under a ZipF law."""
    weights = np.arange(1, F + 1, dtype=float) ** -gamma
    return weights / weights.sum()


def sample_zipf_ranks(rng: np.random.Generator, F: int, gamma: float, n: int) -> np.ndarray:
    """Draw ``n`` 0-based popularity ranks."""
    return rng.choice(F, size=n, p=zipf_probabilities(F, gamma))


def capacity_for(sizes: Sequence[int], rho: float) -> int:
    # round half up, independent of float banker's rounding
    return int(math.floor(rho * sum(sizes) + 0.5))


def generate_instance(params: GenParams) -> Instance:
    params.validate()
    rng = np.random.default_rng(params.seed)
    T, F, U = params.T, params.F, params.U

    sizes = rng.integers(params.size_range[0], params.size_range[1] + 1, size=F)
    # rank -> content index, redrawn every slot so popularity drifts over time
    rank_to_content = np.stack([rng.permutation(F) for _ in range(T)])
    per_user = rng.integers(
        params.requests_per_user_range[0], params.requests_per_user_range[1] + 1, size=U
    )
    n = int(per_user.sum())
    origins = rng.integers(1, T + 1, size=n)
    ranks = sample_zipf_ranks(rng, F, params.gamma, n)
    max_slack = np.floor(params.alpha * (T - origins) + 1e-9).astype(np.int64)
    slack = rng.integers(0, max_slack + 1)
    deadlines = origins + slack
    contents = rank_to_content[origins - 1, ranks] + 1

    requests = []
    k = 0
    for u in range(U):
        for r in range(int(per_user[u])):
            requests.append(
                Request(
                    user=u + 1,
                    index=r + 1,
                    content=int(contents[k]),
                    origin=int(origins[k]),
                    deadline=int(deadlines[k]),
                )
            )
            k += 1
    sizes = tuple(int(s) for s in sizes)
    return Instance(
        T=T,
        F=F,
        U=U,
        sizes=sizes,
        capacity=capacity_for(sizes, params.rho),
        cost_server=params.cost_server,
        cost_cache=params.cost_cache,
        requests=tuple(requests),
    )


def build_partition_instance(integers: Sequence[int]) -> Instance:
    """Single-slot instance whose optimum decides Partition for ``integers``.

    Each content f has size n_f and two requesters (users 2f-1 and 2f), with
    c_s=2, c_b=1 and capacity half the total.  An odd total is allowed; the
    capacity is then floored and the answer is "no".
    """
    integers = list(integers)
    if not integers:
        raise ParameterError("integers: must be non-empty")
    if any(not _is_int(n) or n <= 0 for n in integers):
        raise ParameterError("integers: must all be positive integers")
    requests = []
    for f in range(1, len(integers) + 1):
        for user in (2 * f - 1, 2 * f):
            requests.append(Request(user=user, index=1, content=f, origin=1, deadline=1))
    return Instance(
        T=1,
        F=len(integers),
        U=2 * len(integers),
        sizes=tuple(integers),
        capacity=sum(integers) // 2,
        cost_server=2,
        cost_cache=1,
        requests=tuple(requests),
    )


# --- serialization ---------------------------------------------------------

_TOP_FIELDS = ("T", "F", "U", "capacity", "cost_server", "cost_cache")
_REQUEST_FIELDS = ("user", "index", "content", "origin", "deadline")


def instance_to_dict(instance: Instance) -> dict:
    doc = {name: getattr(instance, name) for name in _TOP_FIELDS}
    doc["sizes"] = list(instance.sizes)
    doc["requests"] = [
        {name: getattr(r, name) for name in _REQUEST_FIELDS} for r in instance.requests
    ]
    return doc


def instance_from_dict(doc) -> Instance:
    if not isinstance(doc, dict):
        raise ParseError("<root>", "expected an object")
    for name in _TOP_FIELDS + ("sizes", "requests"):
        if name not in doc:
            raise ParseError(name, "missing field")
    for name in _TOP_FIELDS:
        if not _is_int(doc[name]):
            raise ParseError(name, "must be an integer")
    if not isinstance(doc["sizes"], list):
        raise ParseError("sizes", "must be an array")
    if not isinstance(doc["requests"], list):
        raise ParseError("requests", "must be an array")
    requests = []
    for i, rec in enumerate(doc["requests"]):
        if not isinstance(rec, dict):
            raise ParseError(f"requests[{i}]", "must be an object")
        for name in _REQUEST_FIELDS:
            if name not in rec:
                raise ParseError(f"requests[{i}].{name}", "missing field")
        requests.append(Request(**{name: rec[name] for name in _REQUEST_FIELDS}))
    candidate = Instance.__new__(Instance)
    for name in _TOP_FIELDS:
        object.__setattr__(candidate, name, doc[name])
    object.__setattr__(candidate, "sizes", tuple(doc["sizes"]))
    object.__setattr__(candidate, "requests", tuple(requests))
    problem = _first_problem(candidate)
    if problem is not None:
        raise ParseError(*problem)
    return Instance(
        **{name: doc[name] for name in _TOP_FIELDS},
        sizes=tuple(doc["sizes"]),
        requests=tuple(requests),
    )


def dumps_instance(instance: Instance) -> str:
    doc = instance_to_dict(instance)
    requests = doc.pop("requests")
    head = json.dumps(doc, indent=2)[:-2]
    lines = [json.dumps(r, separators=(", ", ": ")) for r in requests]
    body = ",\n    ".join(lines)
    tail = f',\n  "requests": [\n    {body}\n  ]\n}}\n' if lines else ',\n  "requests": []\n}\n'
    return head + tail


def save_instance(instance: Instance, sink: str | Path | IO[str]) -> None:
    text = dumps_instance(instance)
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        Path(sink).write_text(text, encoding="utf-8", newline="\n")


def load_instance(source: str | Path | IO[str]) -> Instance:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("<document>", f"invalid JSON ({exc})") from None
    return instance_from_dict(doc)
