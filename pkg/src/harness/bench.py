"""
Benchmark Runner

Runs the Cartesian product instance × algorithm × ε × seed, attaches the
exact optimum where the instance is small enough, verifies every solution,
and emits the table as CSV and JSON. Rows may run concurrently; the table
is always assembled in configuration order.
"""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from ..baselines import Solution, exact_solve, greedy_solve
from ..config import SolverConfig
from ..core import QueryLedger, harmonic
from ..errors import ConfigError, MinSMCError
from ..graph import max_singleton, minsmc_main, minsmc_par
from ..instances import CoverageInstance, GeneratorConfig, gen_random_coverage, load_instance
from .report import RunReport, write_csv, write_json
from .verify import verify_solution

logger = logging.getLogger(__name__)

ALGORITHMS = ("greedy", "exact", "par", "main")


@dataclass(frozen=True)
class InstanceSource:
    """An instance file path or a generator configuration."""

    path: Optional[str] = None
    generator: Optional[GeneratorConfig] = None
    name: Optional[str] = None

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.path:
            return Path(self.path).stem
        g = self.generator
        return f"gen-m{g.m}-u{g.universe_size}-s{g.seed}"

    def load(self) -> CoverageInstance:
        if self.path is not None:
            inst = load_instance(self.path)
        else:
            inst = gen_random_coverage(self.generator)
        return replace(inst, name=self.label)


@dataclass
class BenchConfig:
    """What to run and where to write it."""

    instances: List[InstanceSource]
    algorithms: List[str]
    epsilons: List[float]
    seeds: List[int]
    output: Optional[str] = None
    exact_limit: int = 16
    sample_cap: Optional[int] = None
    timing: bool = True

    def validate(self) -> None:
        if not self.algorithms or not self.seeds:
            raise ConfigError("bench needs at least one algorithm and one seed")
        if not self.epsilons:
            raise ConfigError("bench needs at least one epsilon")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithms {unknown}; choose from {list(ALGORITHMS)}")

    @classmethod
    def from_dict(cls, data: dict) -> "BenchConfig":
        sources = []
        for entry in data.get("instances", []):
            if "path" in entry:
                sources.append(InstanceSource(path=entry["path"], name=entry.get("name")))
            elif "generator" in entry:
                sources.append(InstanceSource(
                    generator=GeneratorConfig.from_dict(entry["generator"]), name=entry.get("name")
                ))
            else:
                raise ConfigError("bench instance entries need 'path' or 'generator'")
        return cls(
            instances=sources,
            algorithms=list(data.get("algorithms", [])),
            epsilons=[float(e) for e in data.get("epsilons", [0.1])],
            seeds=[int(s) for s in data.get("seeds", [])],
            output=data.get("output"),
            exact_limit=int(data.get("exact_limit", 16)),
            sample_cap=data.get("sample_cap"),
            timing=bool(data.get("timing", True)),
        )


def load_bench_config(path: Union[str, Path]) -> BenchConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"bench config {path} is not valid JSON: {e}")
    return BenchConfig.from_dict(data)


def theoretical_bound(algorithm: str, delta: int, k: int, epsilon: float) -> float:
    """Approximation bound each algorithm is held to."""
    h = harmonic(min(delta, k))
    if algorithm == "greedy":
        return h
    if algorithm == "exact":
        return 1.0
    if algorithm == "par":
        return h / (1 - 4 * epsilon)
    return h / (1 - 5 * epsilon)


def run_one(
    inst: CoverageInstance, algorithm: str, epsilon: float, seed: int, config: SolverConfig
) -> Tuple[Solution, RunReport]:
    """Run one algorithm on one instance and return its solution and report."""
    if algorithm == "par":
        return minsmc_par(inst, epsilon, seed, config)
    if algorithm == "main":
        return minsmc_main(inst, epsilon, seed, config)

    started = time.perf_counter()
    ledger = QueryLedger()
    if algorithm == "greedy":
        solution = greedy_solve(inst, ledger, workers=config.workers)
    else:
        solution = exact_solve(inst, config.exact_limit, workers=config.workers)
    core = inst.to_instance()
    report = RunReport(
        algorithm=algorithm,
        seed=seed,
        rounds=ledger.rounds,
        queries=ledger.queries,
        wall_ms=(time.perf_counter() - started) * 1000.0,
        cost=solution.total_cost,
        achieved=solution.achieved,
        delta_max_singleton=max_singleton(core),
        instance=inst.name,
        epsilon=epsilon,
        m=inst.m,
        k=inst.k,
    )
    return solution, report


def _error_report(label: str, algorithm: str, epsilon: float, seed: int, error: str) -> RunReport:
    return RunReport(
        algorithm=algorithm, seed=seed, rounds=0, queries=0, wall_ms=0.0, cost=0.0,
        achieved=0, delta_max_singleton=0, instance=label, epsilon=epsilon, error=error,
    )


def run_bench(cfg: BenchConfig, config: Optional[SolverConfig] = None) -> List[RunReport]:
    """
    Run every (instance, algorithm, ε, seed) combination.

    An instance that fails to load yields error rows; the rest of the bench
    still runs. Rows are returned, and written when cfg.output is set, in
    configuration order.
    """
    cfg.validate()
    config = config or SolverConfig()
    solver_config = config.with_overrides(
        workers=1, sample_cap=cfg.sample_cap, exact_limit=cfg.exact_limit
    )

    loaded: List[Tuple[str, Optional[CoverageInstance], Optional[str]]] = []
    for source in cfg.instances:
        try:
            loaded.append((source.label, source.load(), None))
        except (OSError, MinSMCError) as e:
            logger.error("could not load instance %s: %s", source.label, e)
            loaded.append((source.label, None, f"{type(e).__name__}: {e}"))

    optima: Dict[int, Optional[float]] = {}
    for index, (_, inst, _) in enumerate(loaded):
        if inst is not None and inst.m <= cfg.exact_limit:
            optima[index] = exact_solve(inst, cfg.exact_limit, workers=config.workers).total_cost
        else:
            optima[index] = None

    jobs = [
        (index, algorithm, epsilon, seed)
        for index in range(len(loaded))
        for algorithm in cfg.algorithms
        for epsilon in cfg.epsilons
        for seed in cfg.seeds
    ]

    def run_job(job) -> RunReport:
        index, algorithm, epsilon, seed = job
        label, inst, load_error = loaded[index]
        if inst is None:
            return _error_report(label, algorithm, epsilon, seed, load_error)
        if algorithm == "exact" and inst.m > cfg.exact_limit:
            return _error_report(label, algorithm, epsilon, seed, "instance too large for exact")
        try:
            solution, report = run_one(inst, algorithm, epsilon, seed, solver_config)
        except MinSMCError as e:
            return _error_report(label, algorithm, epsilon, seed, f"{type(e).__name__}: {e}")
        report.instance = label
        report.epsilon = epsilon
        report.seed = seed
        report.attach_opt(
            optima[index], theoretical_bound(algorithm, report.delta_max_singleton, inst.k, epsilon)
        )
        check = verify_solution(inst, solution)
        if not check.ok:
            report.error = "verification failed: " + "; ".join(check.messages)
        return report

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(run_job, jobs))
    else:
        rows = [run_job(job) for job in jobs]

    if cfg.output:
        base = Path(cfg.output)
        base.parent.mkdir(parents=True, exist_ok=True)
        write_csv(rows, base.with_suffix(".csv"), timing=cfg.timing)
        write_json(rows, base.with_suffix(".json"), timing=cfg.timing)
        logger.info("wrote %d rows to %s.{csv,json}", len(rows), base)
    return rows


@dataclass
class GroupSummary:
    """Aggregates for one (algorithm, ε) group of bench rows."""

    runs: int = 0
    errors: int = 0
    with_opt: int = 0
    within_bound: int = 0
    ratios: List[float] = field(default_factory=list)
    max_rounds: int = 0
    fallbacks: int = 0
    capped: int = 0
    nis_calls: int = 0
    nis_satisfied: int = 0

    @property
    def success_fraction(self) -> Optional[float]:
        return self.within_bound / self.with_opt if self.with_opt else None

    @property
    def mean_ratio(self) -> Optional[float]:
        return sum(self.ratios) / len(self.ratios) if self.ratios else None

    @property
    def nis_rate(self) -> Optional[float]:
        return self.nis_satisfied / self.nis_calls if self.nis_calls else None


def summarize(rows: List[RunReport]) -> Dict[Tuple[str, float], GroupSummary]:
    """Group rows by (algorithm, ε) and aggregate their statistics."""
    groups: Dict[Tuple[str, float], GroupSummary] = {}
    for row in rows:
        group = groups.setdefault((row.algorithm, row.epsilon), GroupSummary())
        group.runs += 1
        if row.error:
            group.errors += 1
            continue
        if row.within_bound is not None:
            group.with_opt += 1
            group.within_bound += int(row.within_bound)
        if row.ratio_vs_exact is not None:
            group.ratios.append(row.ratio_vs_exact)
        group.max_rounds = max(group.max_rounds, row.rounds)
        group.fallbacks += int(row.fallback_used)
        group.capped += int(row.m_prime_capped)
        calls, satisfied = row.nis_audit_summary
        group.nis_calls += calls
        group.nis_satisfied += satisfied
    return groups
