"""Parameter sweeps comparing RCGA and the greedy baselines against the
column-generation lower bound.

Each sweep point generates ``replications`` instances (seed = base seed +
replication), runs every algorithm on each, and reports costs and relative
gaps to the lower bound.  Raw results go to CSV, one line per
(value, replication, algorithm).
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Sequence

from .errors import ParseError
from .greedy import run_pbc, run_rbc
from .model import SWEEPABLE, GenParams, generate_instance
from .rounding import run_rcga

log = logging.getLogger(__name__)

ALGOS = ("lb", "rcga", "pbc", "rbc")
CSV_COLUMNS = ("param", "value", "replication", "seed", "algo", "cost", "gap", "millis")

PAPER_DEFAULTS = GenParams(
    T=24, U=600, F=200, size_range=(1, 10), rho=0.5, gamma=0.56, alpha=1.0,
    requests_per_user_range=(1, 10), cost_server=10, cost_cache=1,
)


def gap(cost: float, lb: float) -> float:
    """Relative deviation of ``cost`` from the lower bound ``lb``."""
    if lb == 0:
        return 0.0 if cost == 0 else math.inf
    return (cost - lb) / lb


@dataclass
class SweepSpec:
    param: str
    values: Sequence
    base: GenParams = PAPER_DEFAULTS
    replications: int = 5
    base_seed: int = 0
    timing: bool = True

    def __post_init__(self):
        if self.param not in SWEEPABLE:
            raise ValueError(f"param: must be one of {SWEEPABLE}, got {self.param!r}")
        if self.replications < 1:
            raise ValueError("replications: must be >= 1")
        if not len(self.values):
            raise ValueError("values: must be non-empty")

    def params_for(self, value, replication: int) -> GenParams:
        return dataclasses.replace(
            self.base, **{self.param: value, "seed": self.base_seed + replication}
        )

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepSpec":
        base = dict(doc.get("base", {}))
        for key in ("size_range", "requests_per_user_range"):
            if key in base:
                base[key] = tuple(base[key])
        return cls(
            param=doc["param"],
            values=list(doc["values"]),
            base=dataclasses.replace(PAPER_DEFAULTS, **base),
            replications=int(doc.get("replications", 5)),
            base_seed=int(doc.get("base_seed", 0)),
            timing=bool(doc.get("timing", True)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "SweepSpec":
        text = Path(path).read_text(encoding="utf-8")
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError("<document>", f"invalid JSON ({exc})") from None
        except KeyError as exc:
            raise ParseError(exc.args[0], "missing field") from None
        except TypeError as exc:
            raise ParseError("<document>", str(exc)) from None


@dataclass
class SweepRow:
    value: object
    cost: dict[str, float] = field(default_factory=dict)
    gap: dict[str, float] = field(default_factory=dict)
    millis: dict[str, float] = field(default_factory=dict)
    failed: int = 0


def run_point(spec: SweepSpec, value, replication: int) -> list[dict]:
    """Run every algorithm on one generated instance; return CSV records."""
    params = spec.params_for(value, replication)
    base = {"param": spec.param, "value": value, "replication": replication, "seed": params.seed}
    try:
        instance = generate_instance(params)
        results = {}
        start = time.perf_counter()
        rcga = run_rcga(instance)
        results["rcga"] = (rcga.cost, time.perf_counter() - start)
        # the lower bound is the first column generation pass of RCGA
        results["lb"] = (rcga.lower_bound, rcga.lower_bound_seconds)
        start = time.perf_counter()
        _, cost = run_pbc(instance)
        results["pbc"] = (cost, time.perf_counter() - start)
        start = time.perf_counter()
        _, cost = run_rbc(instance, seed=params.seed)
        results["rbc"] = (cost, time.perf_counter() - start)
    except Exception as exc:  # noqa: BLE001 - a failed point must not stop the sweep
        log.error("sweep point %s=%s rep %d failed: %s", spec.param, value, replication, exc)
        return [
            {**base, "algo": algo, "cost": math.nan, "gap": math.nan, "millis": math.nan}
            for algo in ALGOS
        ]
    lb = results["lb"][0]
    records = []
    for algo in ALGOS:
        cost, seconds = results[algo]
        records.append(
            {
                **base,
                "algo": algo,
                "cost": cost,
                "gap": 0.0 if algo == "lb" else gap(cost, lb),
                "millis": round(seconds * 1000.0, 3) if spec.timing else 0,
            }
        )
    return records


def _run_job(args):
    spec, value, replication = args
    return run_point(spec, value, replication)


def run_sweep(spec: SweepSpec, out: str | Path | IO[str] | None = None, threads: int = 1):
    """Run the sweep; return ``(rows, records)`` and write CSV to ``out``."""
    jobs = [(spec, v, rep) for v in spec.values for rep in range(spec.replications)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_run_job, jobs))
    else:
        chunks = [_run_job(job) for job in jobs]
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: (r["value"], r["replication"], ALGOS.index(r["algo"])))
    if out is not None:
        write_csv(records, out)
    return aggregate(records, spec.values), records


def aggregate(records: list[dict], values: Sequence) -> list[SweepRow]:
    rows = []
    for value in sorted(values):
        recs = [r for r in records if r["value"] == value]
        row = SweepRow(value=value)
        row.failed = len({r["replication"] for r in recs if math.isnan(r["cost"])})
        for algo in ALGOS:
            ok = [r for r in recs if r["algo"] == algo and not math.isnan(r["cost"])]
            if not ok:
                continue
            row.cost[algo] = sum(r["cost"] for r in ok) / len(ok)
            row.gap[algo] = sum(r["gap"] for r in ok) / len(ok)
            row.millis[algo] = sum(r["millis"] for r in ok) / len(ok)
        rows.append(row)
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf"
        return repr(v)
    return str(v)


def write_csv(records: list[dict], out: str | Path | IO[str]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow([_fmt(rec[c]) for c in CSV_COLUMNS])
    if hasattr(out, "write"):
        out.write(buf.getvalue())
    else:
        Path(out).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def format_rows(param: str, rows: list[SweepRow]) -> str:
    lines = [f"{param:>8} " + " ".join(f"{a + ' cost':>12} {a + ' gap':>9}" for a in ALGOS)]
    for row in rows:
        cells = []
        for a in ALGOS:
            cells.append(f"{row.cost.get(a, math.nan):12.1f} {row.gap.get(a, math.nan):9.4f}")
        lines.append(f"{_fmt(row.value):>8} " + " ".join(cells))
    return "\n".join(lines)
