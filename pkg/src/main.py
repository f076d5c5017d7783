"""
MinSMC - Main Entry Point

Command line front end for the min-cost submodular cover solvers.

Usage:
    # Generate a random weighted coverage instance
    python -m src.main gen --m 30 --universe 60 --density 0.1 --seed 7 --out inst.json

    # Parallel solve (with preprocessing) and save the solution
    python -m src.main solve --instance inst.json --epsilon 0.1 --seed 1 --out sol.json

    # Baselines
    python -m src.main greedy --instance inst.json
    python -m src.main exact --instance inst.json --limit 20

    # Benchmark suite and verification
    python -m src.main bench --config bench.json
    python -m src.main verify --instance inst.json --solution sol.json
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.baselines import Solution, exact_solve, greedy_solve
from src.config import SolverConfig, load_config
from src.core import QueryLedger
from src.errors import ConfigError, MinSMCError
from src.graph import minsmc_main, minsmc_par
from src.harness.bench import load_bench_config, run_bench, summarize
from src.harness.report import (
    RunReport,
    load_solution,
    report_to_dict,
    save_solution,
    write_csv,
)
from src.harness.verify import verify_rows, verify_solution
from src.instances import GeneratorConfig, gen_random_coverage, load_instance, save_instance

logger = logging.getLogger("minsmc")

IO_EXIT_CODE = 4


def print_banner():
    """Print the application banner."""
    banner = """
+======================================================================+
|                                                                      |
|         MINSMC - MIN-COST SUBMODULAR COVER                           |
|                                                                      |
|         Low-Adaptivity Parallel Solver with Round Accounting         |
|         Built with LangGraph | State Machine Architecture            |
|                                                                      |
+======================================================================+
    """
    print(banner)


def print_solution(solution: Solution, report: Optional[RunReport] = None):
    """Print a solve summary."""
    print("=" * 60)
    print(f"Algorithm:  {solution.algorithm}")
    print(f"Chosen:     {solution.ids}")
    print(f"Cost:       {solution.total_cost:.9g}")
    print(f"Achieved:   {solution.achieved}")
    if report is not None:
        print(f"Rounds:     {report.rounds}" + (
            f" (bound {report.round_bound})" if report.round_bound is not None else ""
        ))
        print(f"Queries:    {report.queries}")
        calls, satisfied = report.nis_audit_summary
        if calls:
            print(f"NIS audit:  {satisfied}/{calls} calls nearly independent")
        if report.fallback_used:
            print("Fallback:   greedy finished the residual demand")
        if report.m_prime_capped:
            print("Note:       sample count was capped")
    print("=" * 60)


# =============================================================================
# SUBCOMMANDS
# =============================================================================

def cmd_gen(args, config: SolverConfig) -> int:
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    else:
        data = {
            "m": args.m, "universe_size": args.universe, "density": args.density,
            "cost_low": args.cost_low, "cost_high": args.cost_high,
            "k_fraction": args.k_fraction, "seed": args.seed,
        }
    inst = gen_random_coverage(GeneratorConfig.from_dict(data))
    save_instance(inst, args.out)
    print(f"Wrote instance m={inst.m} k={inst.k} to {args.out}")
    return 0


def _emit(solution: Solution, report: Optional[RunReport], args, quiet: bool) -> None:
    if not quiet:
        print_solution(solution, report)
    if args.out:
        save_solution(solution, args.out)
        logger.info("solution saved to %s", args.out)
    if report is not None and getattr(args, "csv", None):
        write_csv([report], args.csv)
    if report is not None and getattr(args, "json", None):
        Path(args.json).write_text(json.dumps(report_to_dict(report), indent=2) + "\n",
                                   encoding="utf-8")


def cmd_solve(args, config: SolverConfig) -> int:
    inst = load_instance(args.instance)
    config = config.with_overrides(sample_cap=args.sample_cap)
    solver = minsmc_par if args.no_preprocess else minsmc_main
    solution, report = solver(inst, args.epsilon, args.seed, config)
    _emit(solution, report, args, args.quiet)
    return 0


def cmd_greedy(args, config: SolverConfig) -> int:
    inst = load_instance(args.instance)
    ledger = QueryLedger()
    solution = greedy_solve(inst, ledger, workers=config.workers)
    if not args.quiet:
        print(f"Greedy used {ledger.rounds} rounds and {ledger.queries} queries")
    _emit(solution, None, args, args.quiet)
    return 0


def cmd_exact(args, config: SolverConfig) -> int:
    inst = load_instance(args.instance)
    limit = args.limit if args.limit is not None else config.exact_limit
    solution = exact_solve(inst, limit, workers=config.workers)
    _emit(solution, None, args, args.quiet)
    return 0


def _fmt_rate(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def cmd_bench(args, config: SolverConfig) -> int:
    bench = load_bench_config(args.config)
    rows = run_bench(bench, config)
    if not args.quiet:
        for (algorithm, epsilon), group in summarize(rows).items():
            print(
                f"{algorithm:>6} eps={epsilon:<5g} runs={group.runs} errors={group.errors} "
                f"within_bound={_fmt_rate(group.success_fraction)} "
                f"mean_ratio={_fmt_rate(group.mean_ratio)} nis_ok={_fmt_rate(group.nis_rate)} "
                f"max_rounds={group.max_rounds} fallbacks={group.fallbacks}"
            )
    for problem in verify_rows(rows):
        logger.warning(problem)
    return 0


def cmd_verify(args, config: SolverConfig) -> int:
    inst = load_instance(args.instance)
    solution = load_solution(args.solution)
    result = verify_solution(inst, solution)
    for name, passed in result.checks.items():
        print(f"  {'PASS' if passed else 'FAIL'}  {name}")
    for message in result.messages:
        print(f"  - {message}")
    return 0 if result.ok else 1


# =============================================================================
# ARGUMENT PARSING
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minsmc",
        description="MinSMC - min-cost submodular cover solvers and benchmark harness",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  minsmc gen --m 30 --universe 60 --density 0.1 --out inst.json
  minsmc solve --instance inst.json --epsilon 0.1 --seed 1
  minsmc solve --instance inst.json --no-preprocess --csv run.csv
  minsmc bench --config bench.json

Environment:
  MINSMC_WORKERS, MINSMC_SAMPLE_CAP, MINSMC_EXACT_LIMIT, MINSMC_VERBOSE
  (read from the environment or a .env file)
        """,
    )
    parser.add_argument("--quiet", "-q", action="store_true", help="Reduce output verbosity")
    parser.add_argument("--workers", type=int, help="Worker threads (speed only, never results)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate a random weighted coverage instance")
    gen.add_argument("--config", help="Generator config JSON (overrides the flags below)")
    gen.add_argument("--m", type=int, default=30)
    gen.add_argument("--universe", type=int, default=60)
    gen.add_argument("--density", type=float, default=0.1)
    gen.add_argument("--cost-low", type=float, default=1.0)
    gen.add_argument("--cost-high", type=float, default=1.0)
    gen.add_argument("--k-fraction", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", "-o", required=True, help="Instance file to write")

    solve = sub.add_parser("solve", help="Run the parallel algorithm")
    solve.add_argument("--instance", "-i", required=True)
    solve.add_argument("--epsilon", "-e", type=float, default=0.1)
    solve.add_argument("--seed", "-s", type=int, default=0)
    solve.add_argument("--no-preprocess", action="store_true",
                       help="Skip cost-spread preprocessing")
    solve.add_argument("--sample-cap", type=int, help="Cap on Mean samples per estimate")
    solve.add_argument("--json", help="Write the run report as JSON")
    solve.add_argument("--csv", help="Write the run report as a one-row CSV")
    solve.add_argument("--out", "-o", help="Write the solution JSON")

    greedy = sub.add_parser("greedy", help="Run sequential greedy")
    greedy.add_argument("--instance", "-i", required=True)
    greedy.add_argument("--out", "-o", help="Write the solution JSON")

    exact = sub.add_parser("exact", help="Brute-force the optimum")
    exact.add_argument("--instance", "-i", required=True)
    exact.add_argument("--limit", type=int, help="Largest m to enumerate")
    exact.add_argument("--out", "-o", help="Write the solution JSON")

    bench = sub.add_parser("bench", help="Run a benchmark suite")
    bench.add_argument("--config", "-c", required=True, help="Bench config JSON")

    verify = sub.add_parser("verify", help="Check a stored solution against its instance")
    verify.add_argument("--instance", "-i", required=True)
    verify.add_argument("--solution", required=True)

    return parser


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "greedy": cmd_greedy,
    "exact": cmd_exact,
    "bench": cmd_bench,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point. Returns the process exit code."""
    args = build_parser().parse_args(argv)

    try:
        config = load_config()
        config = config.with_overrides(workers=args.workers)
        if args.quiet:
            config = config.with_overrides(verbose=False)
    except MinSMCError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code

    logging.basicConfig(
        level=logging.INFO if config.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if not args.quiet and args.command in ("solve", "bench"):
        print_banner()

    try:
        return COMMANDS[args.command](args, config)
    except MinSMCError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except json.JSONDecodeError as e:
        print(f"Error: invalid JSON: {e}", file=sys.stderr)
        return ConfigError.exit_code
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return IO_EXIT_CODE
    except KeyboardInterrupt:
        print("\n\nCancelled by user.")
        return 130


if __name__ == "__main__":
    sys.exit(main())
