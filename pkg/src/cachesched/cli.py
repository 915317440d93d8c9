"""Command-line entry point.

Every command reads and writes the JSON instance/plan documents of
:mod:`cachesched.model` and :mod:`cachesched.cost`.  ``solve`` prints one
machine-readable line::

    algo=rcga cost=1234 lb=1230.5 gap=0.00284 millis=812.4

Exit status: 0 on success, 1 on user error (bad flags, unreadable or invalid
input, infeasible plan in ``verify``), 2 when a solver fails.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time

from .colgen import lower_bound
from .cost import check_capacity, download_cost, load_plan, save_plan, total_cost, update_cost
from .errors import ContractError, ParameterError, ParseError, SizeError, SolverError
from .exact import export_lp, solve_exact
from .experiments import SweepSpec, format_rows, gap, run_sweep
from .greedy import run_pbc, run_rbc
from .model import GenParams, generate_instance, load_instance, save_instance
from .rounding import run_rcga

log = logging.getLogger("cachesched")

USER_ERROR = 1
SOLVER_ERROR = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for solver failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USER_ERROR, f"{self.prog}: error: {message}\n")


def _pair(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return lo, hi


def _num(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def cmd_gen(args) -> int:
    params = GenParams(
        T=args.T, U=args.U, F=args.F, size_range=args.sizes, rho=args.rho, gamma=args.gamma,
        alpha=args.alpha, requests_per_user_range=args.requests, cost_server=args.cost_server,
        cost_cache=args.cost_cache, seed=args.seed,
    )
    instance = generate_instance(params)
    save_instance(instance, args.out if args.out else sys.stdout)
    return 0


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    start = time.perf_counter()
    lb = None
    if args.algo == "rcga":
        result = run_rcga(instance)
        plan, cost, lb = result.plan, result.cost, result.lower_bound
    elif args.algo == "pbc":
        plan, cost = run_pbc(instance)
    elif args.algo == "rbc":
        plan, cost = run_rbc(instance, seed=args.seed)
    elif args.algo == "exact":
        plan, cost = solve_exact(instance)
    else:
        plan, cost = None, lower_bound(instance)
        lb = cost
    millis = (time.perf_counter() - start) * 1000.0
    if lb is None and not args.no_lb:
        lb = lower_bound(instance)
    violation = check_capacity(plan, instance) if plan is not None else None
    if violation is not None:
        raise SolverError(f"{args.algo} produced an infeasible plan: {violation}")
    if plan is not None and args.plan_out:
        save_plan(plan, args.plan_out, algo=args.algo, cost=cost)
    g = gap(cost, lb) if lb is not None else None
    print(f"algo={args.algo} cost={_num(cost)} lb={_num(lb)} gap={_num(g)} millis={millis:.1f}")
    return 0


def cmd_sweep(args) -> int:
    spec = SweepSpec.load(args.spec)
    rows, _ = run_sweep(spec, out=args.out, threads=args.threads)
    print(format_rows(spec.param, rows))
    return 0


def cmd_export_lp(args) -> int:
    export_lp(load_instance(args.instance), args.out)
    return 0


def cmd_verify(args) -> int:
    instance = load_instance(args.instance)
    plan = load_plan(args.plan, instance)
    violation = check_capacity(plan, instance)
    if violation is not None:
        print(f"infeasible: {violation}")
        return USER_ERROR
    print(
        f"feasible cost={total_cost(plan, instance)} download={download_cost(plan, instance)} "
        f"update={update_cost(plan, instance)}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cachesched", description=__doc__.split("\n\n")[0])
    parser.add_argument("--threads", type=int, default=1, help="worker process cap (sweep)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    defaults = GenParams()
    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--T", type=int, default=defaults.T)
    p.add_argument("--U", type=int, default=defaults.U)
    p.add_argument("--F", type=int, default=defaults.F)
    p.add_argument("--sizes", type=_pair, default=defaults.size_range, metavar="LO,HI")
    p.add_argument("--rho", type=float, default=defaults.rho)
    p.add_argument("--gamma", type=float, default=defaults.gamma)
    p.add_argument("--alpha", type=float, default=defaults.alpha)
    p.add_argument("--requests", type=_pair, default=defaults.requests_per_user_range, metavar="LO,HI")
    p.add_argument("--cost-server", type=int, default=defaults.cost_server)
    p.add_argument("--cost-cache", type=int, default=defaults.cost_cache)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run one algorithm on an instance")
    p.add_argument("--algo", choices=("rcga", "pbc", "rbc", "exact", "lb"), required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--plan-out", help="write the plan here")
    p.add_argument("--seed", type=int, default=0, help="seed for rbc")
    p.add_argument("--no-lb", action="store_true", help="skip the lower bound for non-LP algorithms")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a parameter sweep from a JSON spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True, help="CSV output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-lp", help="write the integer program in LP format")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("verify", help="check a plan's feasibility and recompute its cost")
    p.add_argument("--instance", required=True)
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return USER_ERROR
    try:
        return args.func(args)
    except (ParseError, ParameterError, SizeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USER_ERROR
    except (SolverError, ContractError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return SOLVER_ERROR


if __name__ == "__main__":
    sys.exit(main())
