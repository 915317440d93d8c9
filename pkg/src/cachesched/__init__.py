"""Deadline-aware cache update scheduling.

Column generation with shortest-path pricing and iterative rounding (RCGA),
popularity and random greedy baselines, an exhaustive oracle for small
instances, and a sweep harness reporting gaps to the LP lower bound.
"""
from .colgen import ColumnPool, Pricer, build_sp_graph, lower_bound, run_cga, shortest_path
from .cost import (
    CachePlan,
    assign_downloads,
    check_capacity,
    column_cost,
    download_cost,
    load_plan,
    save_plan,
    total_cost,
    update_cost,
)
from .errors import (
    ContractError,
    ConvergenceError,
    ParameterError,
    ParseError,
    SizeError,
    SolverError,
)
from .exact import export_lp, solve_exact, solve_subproblem_bruteforce
from .fixes import FixSet
from .greedy import run_pbc, run_rbc
from .model import (
    GenParams,
    Instance,
    Request,
    build_partition_instance,
    generate_instance,
    load_instance,
    save_instance,
)
from .rounding import run_rcga, tra_step

__version__ = "0.1.0"
