"""Command-line entry point: run, compare and rates"""

import argparse
import asyncio
import json
import logging
import logging.config
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from .config import RunConfigFile, SolverConfig
from .diagnostics import estimate_iterate_rate, estimate_rate
from .errors import ContractViolation, InvariantViolation, SolverAbort
from .models import CompositeProblem, ProblemKind, RunResult, RunStatus, Variant
from .problems import build_problem, l0_stationary_value
from .reporting import (
    comparison_csv_text,
    trace_rows,
    write_json,
    write_summary_json,
    write_trace_csv,
)
from .solver import solve
from .utils import problem_scale

logger = logging.getLogger(__name__)

LOGGING_CONFIG = Path(__file__).resolve().parent.parent / "logging_config.json"
LOG_FORMAT = "%(asctime)s - [%(levelname)s] - %(name)s - %(message)s"

EXIT_CODES = {
    RunStatus.CONVERGED: 0,
    RunStatus.MAX_ITER: 2,
    RunStatus.MERIT_STALL: 3,
}
EXIT_ERROR = 1

# Concurrent variant runs in compare
MAX_CONCURRENT_RUNS = 4
LONG_RUN_TOL = 1e-14
LONG_RUN_MAX_ITER = 1_000_000


def configure_logging(level: Optional[str] = None) -> None:
    """Load logging_config.json, falling back to basicConfig with the same format"""
    if LOGGING_CONFIG.is_file():
        with LOGGING_CONFIG.open() as f:
            logging.config.dictConfig(json.load(f))
    else:
        logging.basicConfig(level=logging.WARNING, format=LOG_FORMAT)
    if level:
        logging.getLogger("src").setLevel(getattr(logging, level.upper()))


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    # Every flag defaults to None so that only given flags override the config file
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    problem = parser.add_argument_group("problem")
    problem.add_argument("--problem", choices=[k.value for k in ProblemKind])
    problem.add_argument("--seed", type=int)
    problem.add_argument("--rows", type=int, help="rows m of the data matrix")
    problem.add_argument("--cols", type=int, help="dimension n")
    problem.add_argument("--lam", type=float, help="regularization weight")
    problem.add_argument("--center", type=_float_list, help="l0quad center, e.g. 1,0.3")

    solver = parser.add_argument_group("solver")
    solver.add_argument("--variant", choices=[v.value for v in Variant])
    solver.add_argument("--tau", type=float)
    solver.add_argument("--gamma-min", type=float)
    solver.add_argument("--gamma-max", type=float)
    solver.add_argument("--gamma0", type=float)
    solver.add_argument("--delta", type=float)
    solver.add_argument("--p-min", type=float)
    solver.add_argument("--p-schedule", choices=["constant", "increasing"])
    solver.add_argument("--m", type=int, help="max-variant window length")
    solver.add_argument("--step-init", choices=["constant", "bb"])
    solver.add_argument("--tol", type=float)
    solver.add_argument("--max-iter", type=int)
    solver.add_argument("--strict-invariants", action="store_const", const=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npg",
        description="Nonmonotone proximal gradient solver",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="solve one problem and write its trace")
    _add_common_arguments(run)
    run.add_argument("--csv", type=Path, help="trace CSV path")
    run.add_argument("--json", type=Path, help="summary JSON path")
    run.set_defaults(handler=cmd_run)

    compare = commands.add_parser("compare", help="run several variants on one problem")
    _add_common_arguments(compare)
    compare.add_argument("--variants", default="monotone,average,max",
                         help="comma-separated variants to sweep")
    compare.add_argument("--degenerate", action="store_true",
                         help="force p_min = 1 and m = 0; such sweeps are checked for identical traces")
    compare.add_argument("--csv", type=Path, help="comparison table path (stdout when omitted)")
    compare.set_defaults(handler=cmd_compare)

    rates = commands.add_parser("rates", help="run and classify the convergence rate")
    _add_common_arguments(rates)
    rates.add_argument("--q-star-source", choices=["known", "oracle", "long-run"], default="long-run")
    rates.add_argument("--long-run-iter", type=int, default=LONG_RUN_MAX_ITER)
    rates.add_argument("--iterates", action="store_true",
                       help="also classify the iterate distances to the reference point")
    rates.add_argument("--json", type=Path, help="rate report path (stdout when omitted)")
    rates.set_defaults(handler=cmd_rates)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Nested config overrides from the flags that were given"""
    problem_flags = {
        "problem": "kind", "seed": "seed", "rows": "m", "cols": "n", "lam": "lam", "center": "center",
    }
    solver_flags = {
        "variant": "variant", "tau": "tau", "gamma_min": "gamma_min", "gamma_max": "gamma_max",
        "gamma0": "gamma0", "delta": "delta", "p_min": "p_min", "p_schedule": "p_schedule",
        "m": "m", "step_init": "step_init", "tol": "tol", "max_iter": "max_iter",
        "strict_invariants": "strict_invariants",
    }
    overrides: Dict[str, Dict[str, Any]] = {"problem": {}, "solver": {}, "output": {}}
    for flag, key in problem_flags.items():
        if getattr(args, flag, None) is not None:
            overrides["problem"][key] = getattr(args, flag)
    for flag, key in solver_flags.items():
        if getattr(args, flag, None) is not None:
            overrides["solver"][key] = getattr(args, flag)
    if args.command == "run":
        if args.csv is not None:
            overrides["output"]["csv_path"] = args.csv
        if args.json is not None:
            overrides["output"]["json_path"] = args.json
    return {section: values for section, values in overrides.items() if values}


def load_run_config(args: argparse.Namespace) -> RunConfigFile:
    return RunConfigFile.load(args.config, _overrides(args))


def cmd_run(args: argparse.Namespace) -> int:
    """
    Solve one problem, write the trace CSV and summary JSON

    Returns:
        0 converged, 2 max_iter, 3 merit_stall
    """
    config = load_run_config(args)
    problem = build_problem(config.problem)
    result = solve(problem, config.solver)

    if config.output.csv_path is not None:
        write_trace_csv(config.output.csv_path, result.trace)
    if config.output.json_path is not None:
        write_summary_json(config.output.json_path, result, config.resolved())

    print(
        f"{result.status.value}: iterations={result.iterations} "
        f"final_q={result.final_q!r} residual={result.final_residual!r}"
    )
    return EXIT_CODES[result.status]


async def _run_variants(
    problem: CompositeProblem,
    configs: Sequence[SolverConfig],
    limit: int = MAX_CONCURRENT_RUNS,
) -> List[Any]:
    """Run independent solver configurations in worker threads"""
    semaphore = asyncio.Semaphore(limit)

    async def solve_with_limit(solver_config: SolverConfig):
        async with semaphore:
            return await asyncio.to_thread(solve, problem, solver_config)

    return await asyncio.gather(
        *(solve_with_limit(c) for c in configs), return_exceptions=True
    )


def is_degenerate_sweep(configs: Sequence[SolverConfig]) -> bool:
    """
    True when every configuration reduces to the monotone method

    Average runs need p_min = 1 and max runs need m = 0; monotone runs always
    qualify. A single configuration is not a sweep.
    """
    if len(configs) < 2:
        return False
    return all(
        c.m == 0 if c.uses_window else c.effective_p_min == 1.0 for c in configs
    )


def _iterate_columns(result: RunResult) -> List[List[str]]:
    # partition names a different set family per variant and is not compared
    return [row[:-1] for row in trace_rows(result.trace)]


def cmd_compare(args: argparse.Namespace) -> int:
    """
    Run a sweep of variants on one problem and emit a comparison table

    Returns:
        0 when every variant converged, 1 when the degeneracy check fails,
        otherwise the exit code of the first variant that did not converge
    """
    config = load_run_config(args)
    problem = build_problem(config.problem)
    variants = [Variant(v.strip()) for v in args.variants.split(",") if v.strip()]
    if not variants:
        raise ContractViolation("compare needs at least one variant")

    base = config.solver.model_dump()
    configs = []
    for variant in variants:
        values = dict(base, variant=variant)
        if args.degenerate:
            values.update(p_min=1.0, m=0)
        configs.append(SolverConfig(**values))

    logger.info(f"Comparing {', '.join(v.value for v in variants)} on {problem.name}")
    outcomes = asyncio.run(_run_variants(problem, configs))
    results: List[RunResult] = []
    for variant, outcome in zip(variants, outcomes):
        if isinstance(outcome, Exception):
            logger.error(f"Variant {variant.value} failed: {outcome}")
            raise outcome
        results.append(outcome)

    note = None
    exit_code = 0
    if is_degenerate_sweep(configs):
        reference = _iterate_columns(results[0])
        if all(_iterate_columns(r) == reference for r in results[1:]):
            note = "degeneracy equivalence holds: identical iterate traces"
            logger.info(note)
        else:
            note = "degeneracy equivalence FAILED: iterate traces differ"
            logger.error(note)
            exit_code = EXIT_ERROR

    table = comparison_csv_text(results, note)
    if args.csv is not None:
        Path(args.csv).write_text(table)
        logger.info(f"Wrote comparison table to {args.csv}")
    else:
        sys.stdout.write(table)

    if exit_code:
        return exit_code
    for result in results:
        if result.status != RunStatus.CONVERGED:
            return EXIT_CODES[result.status]
    return 0


def _long_run(problem: CompositeProblem, solver: SolverConfig, max_iter: int) -> RunResult:
    reference = solver.model_copy(update={
        "variant": Variant.MONOTONE,
        "tol": LONG_RUN_TOL,
        "max_iter": max_iter,
        "check_invariants": False,
        "record_iterates": False,
    })
    logger.info(f"Computing long-run reference value (tol={LONG_RUN_TOL}, max_iter={max_iter})")
    return solve(problem, reference)


def cmd_rates(args: argparse.Namespace) -> int:
    """
    Run, then classify the merit convergence rate against q_star

    q_star comes from the problem's known optimum, from the l0 brute-force
    oracle at the reached support, or from a long monotone run.
    """
    config = load_run_config(args)
    problem = build_problem(config.problem)
    solver = config.solver
    if args.iterates:
        solver = solver.model_copy(update={"record_iterates": True})
    result = solve(problem, solver)

    x_ref = result.x_final
    if args.q_star_source == "known":
        if problem.known_optimum is None:
            raise ContractViolation(f"problem {problem.name} has no known optimum")
        q_star = problem.known_optimum
    elif args.q_star_source == "oracle":
        if config.problem.kind != ProblemKind.L0QUAD:
            raise ContractViolation("the brute-force oracle is only available for l0quad")
        q_star = l0_stationary_value(problem, result.x_final)
    else:
        reference = _long_run(problem, solver, args.long_run_iter)
        q_star = min(reference.final_q, min(result.merit_history))
        x_ref = reference.x_final

    report = estimate_rate(result.trace, q_star)
    payload: Dict[str, Any] = {
        "status": result.status.value,
        "iterations": result.iterations,
        "q_star_source": args.q_star_source,
        "scale": problem_scale(result.q_initial),
        "merit_rate": report.model_dump(mode="json"),
    }
    if args.iterates:
        payload["iterate_rate"] = estimate_iterate_rate(result.iterates, x_ref).model_dump(mode="json")

    if args.json is not None:
        write_json(args.json, payload)
    else:
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return EXIT_CODES[result.status]


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"error: invalid configuration: {e}", file=sys.stderr)
    except ContractViolation as e:
        logger.error(f"{e}")
        print(f"error: {e}", file=sys.stderr)
    except SolverAbort as e:
        logger.error(f"Solver aborted: {e} ({e.diagnostic})")
        print(f"error: solver aborted: {e}; {e.diagnostic}", file=sys.stderr)
    except InvariantViolation as e:
        print(f"error: invariant violated: {e}", file=sys.stderr)
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        print(f"error: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
