from argparse import ArgumentParser, Namespace
from dataclasses import replace
from json import dumps
from logging import basicConfig, getLogger
from sys import exit
from time import perf_counter

from _config import (LOG_FORMAT, LOG_LEVEL, MAX_SWEEPS, MC_SAMPLES,
                     QUAD_POINTS, SEED, TOL_RESIDUAL)
from _constants import c_d_gamma, c_d_monte_carlo
from _continuum import QuadratureConfig, sphere_flux
from _edgelist import read_edge_list
from _errors import CapacityError, InputError
from _lattice import LatticeSpec, kappa
from _report import RunRecord, csv_header, csv_row, to_json
from _solver import CapacityReport, SolverConfig
from _verify import SUITES, run_suites
from capacity import capacity, flow_bracket, graph_capacity, lattice_config

logger = getLogger(__name__)


def build_parser() -> ArgumentParser:
    """The argument parser with one subcommand per action."""
    parser = ArgumentParser(
        prog="cli.py", description="Discrete p-capacity of boxes and networks."
    )
    parser.add_argument(
        "--log-level", type=str.upper, default=LOG_LEVEL,
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
    )
    commands = parser.add_subparsers(dest="command", required=True)

    for name in ("capacity", "sweep"):
        sub = commands.add_parser(name)
        sub.add_argument("--dim", type=int, default=2)
        sub.add_argument("--p", type=float, default=2.0)
        sub.add_argument(
            "--method", choices=("dirichlet", "flow", "both"), default="both"
        )
        sub.add_argument("--tol", type=float, default=TOL_RESIDUAL)
        sub.add_argument("--max-sweeps", type=int, default=MAX_SWEEPS)
        sub.add_argument("--quad-points", type=int, default=QUAD_POINTS)
        sub.add_argument("--out", choices=("json", "csv"), default="json")
        sub.add_argument(
            "--seed", type=int, default=SEED,
            help="accepted on every subcommand; solves are deterministic",
        )
        sub.add_argument(
            "--no-timing", action="store_true",
            help="report wall_seconds as 0 so output is reproducible",
        )

        if name == "capacity":
            sub.add_argument("--n", type=int, default=None)
            sub.add_argument("--graph", default=None)

        else:
            sub.add_argument("--n-list", default="")

    constant = commands.add_parser("constant")
    constant.add_argument("--dim", type=int, required=True)
    constant.add_argument("--samples", type=int, default=MC_SAMPLES)
    constant.add_argument("--seed", type=int, default=SEED)
    constant.add_argument("--quad-points", type=int, default=QUAD_POINTS)

    verify = commands.add_parser("verify")
    verify.add_argument(
        "--suite", action="append", choices=sorted(SUITES), default=None
    )
    return parser


def _solve(args: Namespace, spec: LatticeSpec) -> CapacityReport:
    """Run one lattice computation with the chosen method."""
    quad = QuadratureConfig(points_per_axis=args.quad_points)

    if args.method == "flow":
        return flow_bracket(spec, quad)

    cfg = replace(
        lattice_config(spec), tol_residual=args.tol, max_sweeps=args.max_sweeps
    )
    return capacity(spec, cfg, quad, flow_bound=args.method == "both")


def _record(
    d: int, p: float, n: int, report: CapacityReport, seconds: float,
    spec: LatticeSpec | None = None,
) -> RunRecord:
    """Turn a report into an output record; kappa is None when the
    normalization is undefined.
    """
    try:
        k = None if spec is None else kappa(spec, report.capacity)

    except InputError:
        k = None

    return RunRecord(
        d=d,
        p=p,
        n=n,
        cap=report.capacity,
        kappa=k,
        lower=report.lower_bound,
        upper=report.upper_bound,
        sweeps=report.sweeps,
        max_residual=report.max_residual,
        wall_seconds=seconds,
    )


def cmd_capacity(args: Namespace) -> int:
    """Compute one capacity, on a box or on an edge-list network."""
    start = perf_counter()

    if args.graph is not None:
        cfg = SolverConfig(tol_residual=args.tol, max_sweeps=args.max_sweeps)
        report = graph_capacity(read_edge_list(args.graph), args.p, cfg)
        spec, d, n = None, 0, 0

    else:
        if args.n is None:
            raise InputError("capacity needs --n or --graph")

        spec = LatticeSpec(args.dim, args.n, args.p)
        report, d, n = _solve(args, spec), args.dim, args.n

    seconds = 0.0 if args.no_timing else perf_counter() - start
    record = _record(d, args.p, n, report, seconds, spec)
    print(
        to_json(record)
        if args.out == "json"
        else csv_header() + csv_row(record),
        end="",
    )
    return 0 if report.converged else 2


def parse_n_list(text: str) -> list[int]:
    """Parse 'a,b,c' into an ascending list of radii."""
    try:
        ns = [int(part) for part in text.split(",") if part.strip()]

    except ValueError:
        raise InputError(f"invalid --n-list '{text}'") from None

    if not ns:
        raise InputError("--n-list is empty")

    if ns != sorted(ns):
        raise InputError("--n-list must be ascending")

    return ns


def cmd_sweep(args: Namespace) -> int:
    """One record per radius, flushed row by row for CSV."""
    ns, records, code = parse_n_list(args.n_list), [], 0

    if args.out == "csv":
        print(csv_header(), end="")

    for n in ns:
        start = perf_counter()
        spec = LatticeSpec(args.dim, n, args.p)
        report = _solve(args, spec)
        seconds = 0.0 if args.no_timing else perf_counter() - start
        record = _record(args.dim, args.p, n, report, seconds, spec)
        records.append(record)
        code = code if report.converged else 2

        if args.out == "csv":
            print(csv_row(record), end="", flush=True)

    if args.out == "json":
        print(to_json(records), end="")

    return code


def cmd_constant(args: Namespace) -> int:
    """Print c_d by the gamma formula, Monte Carlo and flux quadrature."""
    exact = c_d_gamma(args.dim)
    quad = QuadratureConfig(points_per_axis=args.quad_points)
    estimate, err = c_d_monte_carlo(args.dim, args.samples, args.seed)
    payload: dict[str, float | int | None] = {
        "d": args.dim,
        "gamma_formula": exact,
        "monte_carlo": estimate,
        "stderr": err,
        "flux_quadrature": (
            sphere_flux(args.dim, 1.0, quad) if args.dim <= 3 else None
        ),
        "delta_sigma": abs(estimate - exact) / err if err else None,
    }
    print(dumps(payload))
    return 0


def cmd_verify(args: Namespace) -> int:
    """Run the property suites and print one line per suite."""
    results = run_suites(args.suite)

    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name}: {status} ({r.seconds:.1f}s) {r.detail}")

    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "capacity": cmd_capacity,
    "sweep": cmd_sweep,
    "constant": cmd_constant,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> None:
    """Main function of the command line. Exits 1 on bad input and 2 when
    a solve did not converge.
    """
    args = build_parser().parse_args(argv)
    basicConfig(level=args.log_level, format=LOG_FORMAT)

    try:
        code = COMMANDS[args.command](args)

    except (CapacityError, SyntaxError, OSError) as e:
        logger.error("%s", e)
        exit(1)

    if code:
        exit(code)


if __name__ == "__main__":
    main()
