"""Column generation over per-content caching sequences.

A column is one content's full 0/1 caching sequence.  The restricted master
LP picks a convex combination of pooled columns per content under the slot
capacity rows; its duals price new columns.  Pricing a content is a shortest
path in a layered DAG whose states track the most recent slot the content was
cached in, which is enough to know which pending requests a newly cached slot
serves.

Two implementations of pricing live here:

* :func:`build_sp_graph` + :func:`shortest_path` materialize the DAG
  explicitly and run a generic topological relaxation;
* :class:`Pricer` runs the same recursion vectorized over all contents and is
  what :func:`run_cga` uses.

Both break ties identically (fewest cached slots, then lexicographically
smallest sequence).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from graphlib import TopologicalSorter
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .cost import column_cost
from .errors import ConvergenceError, SolverError
from .fixes import FixSet
from .lpsolve import DUAL_TOL, LpProblem, solve_lp
from .model import Instance

log = logging.getLogger(__name__)

INF = float("inf")


class PricingInfeasible(SolverError):
    """The fixes leave no path from source to sink."""


@dataclass(frozen=True)
class Column:
    content: int  # 0-based
    sequence: tuple[int, ...]
    cost: int

    @classmethod
    def make(cls, f: int, sequence: Sequence[int], instance: Instance) -> "Column":
        seq = tuple(int(v) for v in sequence)
        return cls(f, seq, column_cost(f, seq, instance))


class ColumnPool:
    """Columns per content, deduplicated by sequence, in insertion order."""

    def __init__(self, F: int):
        self._cols: list[dict[tuple[int, ...], Column]] = [{} for _ in range(F)]

    @classmethod
    def seeded(cls, instance: Instance) -> "ColumnPool":
        """Pool holding only the never-cache column of every content."""
        pool = cls(instance.F)
        zero = (0,) * instance.T
        for f in range(instance.F):
            pool.add(Column.make(f, zero, instance))
        return pool

    def add(self, column: Column) -> bool:
        bucket = self._cols[column.content]
        if column.sequence in bucket:
            return False
        bucket[column.sequence] = column
        return True

    def __contains__(self, column: Column) -> bool:
        return column.sequence in self._cols[column.content]

    def columns(self, f: int) -> list[Column]:
        return list(self._cols[f].values())

    def all_columns(self) -> list[Column]:
        return [c for bucket in self._cols for c in bucket.values()]

    def __len__(self) -> int:
        return sum(len(b) for b in self._cols)

    @property
    def F(self) -> int:
        return len(self._cols)

    def discard_incompatible(self, fixes: FixSet) -> int:
        """Permanently drop columns that contradict ``fixes``; return how many."""
        dropped = 0
        by_content: dict[int, list[tuple[int, int]]] = {}
        for (t, f), v in fixes.items():
            by_content.setdefault(f, []).append((t, v))
        for f, pairs in by_content.items():
            bucket = self._cols[f]
            bad = [s for s in bucket if any(s[t] != v for t, v in pairs)]
            for s in bad:
                del bucket[s]
            dropped += len(bad)
        return dropped

    def copy(self) -> "ColumnPool":
        out = ColumnPool(self.F)
        out._cols = [dict(b) for b in self._cols]
        return out


# --- pricing graph -------------------------------------------------------------

SOURCE = ("source",)
SINK = ("sink",)
ROOT = ("zero", 0, 0)


def one(t: int) -> tuple:
    """Vertex: content cached in (1-based) slot t."""
    return ("one", t)


def zero(t: int, k: int) -> tuple:
    """Vertex: not cached in slot t, last cached in slot k (0 = never)."""
    return ("zero", t, k)


@dataclass
class SpGraph:
    content: int
    T: int
    arcs: dict[tuple, list[tuple[tuple, object]]] = field(default_factory=dict)

    @property
    def vertices(self) -> list[tuple]:
        return list(self.arcs)

    def weight(self, u: tuple, v: tuple):
        for head, w in self.arcs[u]:
            if head == v:
                return w
        raise KeyError((u, v))

    @property
    def arc_count(self) -> int:
        return sum(len(a) for a in self.arcs.values())


def _savings(instance: Instance, f: int) -> Callable[[int, int], int]:
    """``g(t, d)``: cost saved by serving from cache the requests for f made in
    slot t whose deadline is at least d (1-based slots)."""
    unit = instance.sizes[f] * instance.update_unit
    counts: dict[tuple[int, int], int] = {}
    for r in instance.requests_by_content[f]:
        counts[(r.origin, r.deadline)] = counts.get((r.origin, r.deadline), 0) + 1

    def g(t: int, d: int) -> int:
        return unit * sum(n for (o, dl), n in counts.items() if o == t and dl >= d)

    return g


def build_sp_graph(f: int, pi: Sequence, instance: Instance, fixes: FixSet | None = None) -> SpGraph:
    """Layered pricing DAG for content ``f`` (0-based) under duals ``pi``.

    Path length from source to sink equals the pricing objective
    ``column_cost - sum_t l_f pi_t x_t`` of the sequence the path encodes.
    """
    T = instance.T
    size = instance.sizes[f]
    Q = sum(size * instance.cost_server for _ in instance.requests_by_content[f])
    q = size * instance.update_unit
    p = [-size * pi[t] for t in range(T)]  # p[t-1] for 1-based slot t
    g = _savings(instance, f)

    removed: set[tuple] = set()
    for t0, v in (fixes or FixSet()).for_content(f).items():
        t = t0 + 1
        if v == 1:
            removed.update(zero(j, i) for j in range(t, T + 1) for i in range(t))
        else:
            removed.add(one(t))

    graph = SpGraph(content=f, T=T)
    arcs = graph.arcs

    def add(u, v, w):
        if u in removed or v in removed:
            return
        arcs.setdefault(u, []).append((v, w))
        arcs.setdefault(v, [])

    for v in (SOURCE, ROOT):
        arcs.setdefault(v, [])
    add(SOURCE, ROOT, Q)
    add(ROOT, one(1), q + p[0] - g(1, 1))
    add(ROOT, zero(1, 0), 0)
    for t in range(2, T + 1):
        add(one(t - 1), one(t), p[t - 1] - g(t, t))
        for k in range(t - 1):
            add(zero(t - 1, k), one(t), q + p[t - 1] - sum(g(i, t) for i in range(k + 1, t + 1)))
        for i in range(t - 1):
            add(zero(t - 1, i), zero(t, i), 0)
        add(one(t - 1), zero(t, t - 1), 0)
    add(one(T), SINK, 0)
    for i in range(T):
        add(zero(T, i), SINK, 0)
    arcs.setdefault(SINK, [])
    # vertices isolated by pruning still count as vertices of the graph
    for t in range(1, T + 1):
        for v in [one(t)] + [zero(t, k) for k in range(t)]:
            if v not in removed:
                arcs.setdefault(v, [])
    return graph


def shortest_path(graph: SpGraph) -> tuple[tuple[int, ...], object]:
    """Shortest source-sink path by relaxation in reverse topological order.

    Returns ``(sequence, length)`` where slot t is cached iff the path visits
    the slot-t "cached" vertex.  Among shortest paths the one with fewest
    cached slots, then the lexicographically smallest sequence, is chosen.
    """
    # successors passed as "dependencies": static_order yields sink-first
    order = TopologicalSorter({u: [v for v, _ in a] for u, a in graph.arcs.items()}).static_order()
    best: dict[tuple, tuple] = {SINK: (0, 0)}
    for u in order:
        if u == SINK:
            continue
        cand = (INF, 0)
        for v, w in graph.arcs[u]:
            cv, nv = best.get(v, (INF, 0))
            if cv == INF:
                continue
            key = (w + cv, nv + (v[0] == "one"))
            if key < cand:
                cand = key
        best[u] = cand
    if best.get(SOURCE, (INF, 0))[0] == INF:
        raise PricingInfeasible(f"content {graph.content}: sink unreachable under fixes")

    seq = [0] * graph.T
    u = SOURCE
    while u != SINK:
        choice = None
        for v, w in graph.arcs[u]:
            cv, nv = best.get(v, (INF, 0))
            if cv == INF:
                continue
            key = (w + cv, nv + (v[0] == "one"), v[0] == "one")
            if choice is None or key < choice[0]:
                choice = (key, v)
        u = choice[1]
        if u[0] == "one":
            seq[u[1] - 1] = 1
    return tuple(seq), best[SOURCE][0]


class Pricer:
    """Vectorized pricing for all contents of one instance.

    Holds the dual-independent arc weights; :meth:`price` adds the dual term
    and solves every content's DAG at once.  State ``k`` before slot t means
    "last cached in slot k" (0 = never), so ``k = t-1`` is the cached-in-
    previous-slot vertex and ``k < t-1`` the not-cached vertices.
    """

    def __init__(self, instance: Instance):
        T, F = instance.T, instance.F
        self.instance = instance
        self.T, self.F = T, F
        sizes = instance.size_array
        self.sizes = sizes
        q = sizes * instance.update_unit
        counts = np.zeros((F, T + 2, T + 2), dtype=np.int64)  # [f, origin, deadline]
        nreq = np.zeros(F, dtype=np.int64)
        for r in instance.requests:
            counts[r.content - 1, r.origin, r.deadline] += 1
            nreq[r.content - 1] += 1
        self.server_cost = nreq * sizes * instance.cost_server
        # ge[f, i, t] = requests made in slot i with deadline >= t
        ge = counts[:, :, ::-1].cumsum(axis=2)[:, :, ::-1]
        i_idx = np.arange(T + 2)
        ge = ge * (i_idx[:, None] <= i_idx[None, :])
        # from_k[f, k, t] = requests made in slots k+1..t with deadline >= t
        suffix = ge[:, ::-1, :].cumsum(axis=1)[:, ::-1, :]
        # base[f, t, k] = weight into "cached at t" from state k, without duals
        base = np.zeros((F, T + 1, T + 1), dtype=np.int64)
        for t in range(1, T + 1):
            k = np.arange(t)
            needs_update = (k == 0) | (k < t - 1)
            base[:, t, :t] = q[:, None] * needs_update[None, :] - q[:, None] * suffix[:, k + 1, t]
        self.base = base

    def price(self, pi: Sequence, fixes: FixSet | None = None):
        """Return ``(sequences (F, T) int8, objectives (F,))``.

        Objectives are ``column_cost - sum_t l_f pi_t x_t``; with ``Fraction``
        duals the computation is exact.
        """
        T, F = self.T, self.F
        pi_arr = np.asarray(pi)
        exact = pi_arr.dtype == object
        dtype = object if exact else float
        base = self.base.astype(dtype)
        p = -(self.sizes.astype(dtype)[:, None] * pi_arr[None, :].astype(dtype))  # (F, T)
        if fixes is not None and len(fixes):
            ones, zeros = fixes.masks(T, F)
        else:
            ones = zeros = np.zeros((T, F), dtype=bool)
        inf = np.array(INF, dtype=dtype)

        # backward values after slot t, per state k in 0..t
        vc = [None] * (T + 1)
        vn = [None] * (T + 1)
        vc[T] = np.zeros((F, T + 1), dtype=dtype)
        vn[T] = np.zeros((F, T + 1), dtype=np.int64)
        for t in range(T, 0, -1):
            stay_c, stay_n, go_c, go_n = self._branches(t, base, p, vc[t], vn[t], ones, zeros, inf)
            take = _lex_less(go_c, go_n, stay_c, stay_n)
            c = np.where(take, go_c, stay_c)
            n = np.where(take, go_n, stay_n)
            vc[t - 1] = np.zeros((F, T + 1), dtype=dtype)
            vn[t - 1] = np.zeros((F, T + 1), dtype=np.int64)
            vc[t - 1][:, :t] = c
            vn[t - 1][:, :t] = n

        root = vc[0][:, 0]
        objectives = self.server_cost.astype(dtype) + root
        seqs = np.zeros((F, T), dtype=np.int8)
        state = np.zeros(F, dtype=np.int64)
        rows = np.arange(F)
        for t in range(1, T + 1):
            stay_c, stay_n, go_c, go_n = self._branches(t, base, p, vc[t], vn[t], ones, zeros, inf)
            take = _lex_less(go_c[rows, state], go_n[rows, state], stay_c[rows, state], stay_n[rows, state])
            seqs[take, t - 1] = 1
            state = np.where(take, t, state)
        return seqs, objectives

    def _branches(self, t, base, p, vc_t, vn_t, ones, zeros, inf):
        stay_c = vc_t[:, :t]
        stay_n = vn_t[:, :t]
        go_c = base[:, t, :t] + p[:, t - 1, None] + vc_t[:, t, None]
        go_n = np.broadcast_to(vn_t[:, t, None] + 1, stay_n.shape)
        stay_c = np.where(ones[t - 1][:, None], inf, stay_c)
        go_c = np.where(zeros[t - 1][:, None], inf, go_c)
        return stay_c, stay_n, go_c, go_n


def _lex_less(ac, an, bc, bn):
    return (ac < bc) | ((ac == bc) & (an < bn))


# --- restricted master ---------------------------------------------------------


@dataclass
class RmpSolution:
    columns: list[Column]
    w: np.ndarray
    pi: np.ndarray
    beta: np.ndarray
    objective: float

    def weights(self, f: int) -> list[tuple[Column, float]]:
        return [(c, float(w)) for c, w in zip(self.columns, self.w) if c.content == f]


def active_columns(pool: ColumnPool, fixes: FixSet | None) -> list[Column]:
    cols = pool.all_columns()
    if fixes is None or not len(fixes) or not cols:
        return cols
    T = len(cols[0].sequence)
    ones, zeros = fixes.masks(T, pool.F)
    X = np.array([c.sequence for c in cols], dtype=bool)
    f = np.array([c.content for c in cols])
    bad = (~X & ones[:, f].T).any(axis=1) | (X & zeros[:, f].T).any(axis=1)
    return [c for c, b in zip(cols, bad) if not b]


def build_rmp(columns: list[Column], instance: Instance) -> LpProblem:
    n = len(columns)
    T, F = instance.T, instance.F
    cost = np.array([c.cost for c in columns], dtype=float)
    X = np.array([c.sequence for c in columns], dtype=np.int8).reshape(n, T)
    f = np.array([c.content for c in columns], dtype=np.int64)
    rows, cols = np.nonzero(X.T)
    vals = instance.size_array[f[cols]].astype(float)
    cap = sp.csr_matrix((vals, (rows, cols)), shape=(T, n))
    conv = sp.csr_matrix((np.ones(n), (f, np.arange(n))), shape=(F, n))
    return LpProblem(
        cost=cost,
        capacity_rows=cap,
        capacity_rhs=np.full(T, float(instance.capacity)),
        convexity_rows=conv,
    )


def solve_rmp(pool: ColumnPool, instance: Instance, fixes: FixSet | None = None) -> RmpSolution:
    columns = active_columns(pool, fixes)
    missing = set(range(instance.F)) - {c.content for c in columns}
    if missing:
        raise SolverError(f"contents without a usable column: {sorted(missing)[:5]}")
    if instance.F == 0:
        return RmpSolution([], np.zeros(0), np.zeros(instance.T), np.zeros(0), 0.0)
    sol = solve_lp(build_rmp(columns, instance))
    if not sol.optimal:
        raise SolverError("restricted master LP is infeasible")
    return RmpSolution(columns, sol.w, sol.pi, sol.beta, sol.objective)


# --- column generation loop ----------------------------------------------------


class CgaResult(NamedTuple):
    solution: RmpSolution
    pool: ColumnPool
    iterations: int
    min_reduced_cost: float
    history: list[float]


def run_cga(
    instance: Instance,
    fixes: FixSet | None = None,
    pool: ColumnPool | None = None,
    *,
    pricer: Pricer | None = None,
    max_rmp_solves: int | None = None,
    log_sink: Callable[[str], None] | None = None,
) -> CgaResult:
    """Solve the master LP to optimality by column generation.

    ``pool`` is extended in place.  Each iteration adds at most one column per
    content, the pricing minimizer, when its reduced cost is below
    ``-DUAL_TOL``.
    """
    fixes = fixes if fixes is not None else FixSet()
    pool = pool if pool is not None else ColumnPool.seeded(instance)
    pricer = pricer or Pricer(instance)
    cap = max_rmp_solves or max(10 * instance.F * instance.T, 10)
    history: list[float] = []
    it = 0
    while True:
        it += 1
        if it > cap:
            raise ConvergenceError(
                f"column generation did not converge in {cap} RMP solves",
                best_bound=history[-1] if history else None,
            )
        sol = solve_rmp(pool, instance, fixes)
        history.append(sol.objective)
        if instance.F == 0:
            return CgaResult(sol, pool, it, 0.0, history)
        seqs, objectives = pricer.price(sol.pi, fixes)
        reduced = objectives - sol.beta
        added = 0
        for f in np.flatnonzero(reduced < -DUAL_TOL):
            if pool.add(Column.make(int(f), seqs[f], instance)):
                added += 1
            else:
                log.warning("content %d: priced column already pooled (rc=%g)", f, reduced[f])
        min_rc = float(reduced.min())
        line = f"iter={it} objective={sol.objective:.6f} added={added} min_rc={min_rc:.3g}"
        log.debug(line)
        if log_sink is not None:
            log_sink(line)
        if added == 0:
            return CgaResult(sol, pool, it, min_rc, history)


def lower_bound(instance: Instance) -> float:
    """Optimal value of the LP relaxation of the column formulation."""
    return run_cga(instance).solution.objective
