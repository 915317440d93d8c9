"""Ground-truth solvers for small instances and ILP export.

``solve_exact`` enumerates every caching matrix; it is the reference the
heuristics are measured against in tests.  ``export_lp`` writes the full
integer program so larger instances can be handed to an external MIP solver.
"""
from __future__ import annotations

import itertools
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .cost import CachePlan, column_cost
from .errors import SizeError
from .fixes import FixSet
from .model import Instance

DEFAULT_LIMIT = 2**24
_CHUNK = 2**15


def _sequence_costs(instance: Instance) -> np.ndarray:
    """``table[f, code]``: column cost of content f for the sequence encoded
    by ``code`` (bit T-1-t holds slot t)."""
    T = instance.T
    table = np.zeros((instance.F, 2**T), dtype=np.int64)
    for code in range(2**T):
        seq = [(code >> (T - 1 - t)) & 1 for t in range(T)]
        for f in range(instance.F):
            table[f, code] = column_cost(f, seq, instance)
    return table


def solve_exact(instance: Instance, limit: int = DEFAULT_LIMIT) -> tuple[CachePlan, int]:
    """Globally optimal capacity-feasible plan by exhaustive enumeration.

    Plans are visited in lexicographic order of the slot-major flattening of
    ``x``, so the first optimum found is the lexicographically smallest.
    """
    T, F = instance.T, instance.F
    n = T * F
    if 2**n > limit:
        raise SizeError(f"2^{n} plans exceed the enumeration limit {limit}")
    if n == 0:
        return CachePlan.empty(instance), 0
    table = _sequence_costs(instance)
    sizes = instance.size_array
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    slot_weights = (1 << np.arange(T - 1, -1, -1, dtype=np.int64))

    best_cost = None
    best_code = None
    for start in range(0, 2**n, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, 2**n), dtype=np.int64)
        x = ((codes[:, None] >> shifts) & 1).reshape(-1, T, F)
        feasible = ((x * sizes).sum(axis=2) <= instance.capacity).all(axis=1)
        if not feasible.any():
            continue
        x = x[feasible]
        seq_codes = np.einsum("ntf,t->nf", x, slot_weights)
        costs = table[np.arange(F), seq_codes].sum(axis=1)
        i = int(np.argmin(costs))
        if best_cost is None or costs[i] < best_cost:
            best_cost = int(costs[i])
            best_code = int(codes[feasible][i])
    x = np.array([(best_code >> s) & 1 for s in range(n - 1, -1, -1)], dtype=np.int8)
    return CachePlan(x.reshape(T, F)), best_cost


def solve_subproblem_bruteforce(f: int, pi: Sequence, instance: Instance, fixes: FixSet | None = None):
    """Minimize ``column_cost - sum_t l_f * pi_t * x_t`` over all 2^T sequences.

    Works with any numeric type for ``pi`` (``Fraction`` gives exact results).
    Ties go to fewer cached slots, then the lexicographically smallest
    sequence.  Returns ``(sequence, objective)``.
    """
    T = instance.T
    size = instance.sizes[f]
    fixed = (fixes or FixSet()).for_content(f)
    choices = [(fixed[t],) if t in fixed else (0, 1) for t in range(T)]
    best = None
    for seq in itertools.product(*choices):
        obj = column_cost(f, seq, instance) - sum(size * pi[t] for t in range(T) if seq[t])
        key = (obj, sum(seq), seq)
        if best is None or key < best:
            best = key
    return best[2], best[0]


# --- LP-format export --------------------------------------------------------


def _terms(pairs) -> str:
    parts = []
    for coef, name in pairs:
        body = name if abs(coef) == 1 else f"{abs(coef)} {name}"
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {body}" if parts or coef < 0 else body)
    return " ".join(parts)


def lp_lines(instance: Instance) -> list[str]:
    T, F = instance.T, instance.F
    cs, cb = instance.cost_server, instance.cost_cache
    lines = ["\\ Cache update scheduling with delivery deadlines", "Minimize"]

    def x(t, f):
        return f"x_{t}_{f}"

    def a(t, f):
        return f"a_{t}_{f}"

    obj = []
    constant = 0
    for t in range(1, T + 1):
        for f in range(1, F + 1):
            obj.append((instance.sizes[f - 1] * (cs - cb), a(t, f)))
    ys = []
    for r in instance.requests:
        size = instance.sizes[r.content - 1]
        constant += cs * size
        for t in range(r.origin, r.deadline + 1):
            name = f"y_{r.user}_{r.index}_{t}"
            ys.append((r, t, name))
            obj.append((-(cs - cb) * size, name))
    if constant:
        obj.append((constant, "ONE_VAR_CONSTANT"))
    lines.append(" obj: " + (_terms(obj) if obj else "0 ONE_VAR_CONSTANT"))
    lines.append("Subject To")
    for t in range(1, T + 1):
        row = _terms((instance.sizes[f - 1], x(t, f)) for f in range(1, F + 1))
        lines.append(f" cap_{t}: {row or '0 ONE_VAR_CONSTANT'} <= {instance.capacity}")
    for f in range(1, F + 1):
        lines.append(f" upd_first_{f}: {a(1, f)} - {x(1, f)} = 0")
        for t in range(2, T + 1):
            lines.append(f" upd_lo_{t}_{f}: {a(t, f)} - {x(t, f)} + {x(t - 1, f)} >= 0")
            lines.append(f" upd_prev_{t}_{f}: {a(t, f)} + {x(t - 1, f)} <= 1")
            lines.append(f" upd_cur_{t}_{f}: {a(t, f)} - {x(t, f)} <= 0")
    for r, t, name in ys:
        lines.append(f" serve_{r.user}_{r.index}_{t}: {name} - {x(t, r.content)} <= 0")
    for r in instance.requests:
        names = [f"y_{r.user}_{r.index}_{t}" for t in range(r.origin, r.deadline + 1)]
        lines.append(f" once_{r.user}_{r.index}: {' + '.join(names)} <= 1")
    lines.append("Bounds")
    lines.append(" ONE_VAR_CONSTANT = 1")
    lines.append("Binaries")
    names = [x(t, f) for t in range(1, T + 1) for f in range(1, F + 1)]
    names += [a(t, f) for t in range(1, T + 1) for f in range(1, F + 1)]
    names += [name for _, _, name in ys]
    lines.extend(f" {name}" for name in names)
    lines.append("End")
    return lines


def export_lp(instance: Instance, sink: str | Path | IO[str]) -> None:
    """Write the complete integer program in CPLEX LP text format."""
    text = "\n".join(lp_lines(instance)) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
