"""
Workflow Graph Module

Builds the LangGraph state machine for MinSMC-Par and exposes the two
parallel entry points: `minsmc_par` on a raw instance and `minsmc_main`,
which first bounds the cost spread by preprocessing.
"""

import logging
import time
from typing import Optional, Tuple

from langgraph.graph import END, StateGraph

from .baselines import Solution
from .config import SolverConfig
from .core import Instance, MarginalScan, QueryLedger, as_instance, batch_values, harmonic
from .errors import ContractError, InfeasibleDemandError
from .harness.report import RunReport
from .nis import NisAudit
from .nodes import NodeFactory, route_after_scan
from .params import SolverParams, check_epsilon, params_from_singletons, singleton_scan
from .preprocess import PREPROCESSING_ROUNDS, preprocess
from .state import SolverState, create_initial_state

logger = logging.getLogger(__name__)


def create_minsmc_graph(factory: NodeFactory) -> StateGraph:
    """
    Create the MinSMC-Par workflow graph.

        ┌─────────────┐
        │    scan     │ ◄──────────────┐  find next nonempty bucket (t, t')
        └──────┬──────┘                │
               │                       │
       ┌───────┼──────────┐            │
       ▼       ▼          ▼            │
      END   fallback    select ────────┘  NIS on the bucket, B ← B ∪ J
               │
               ▼
              END

    Args:
        factory: Node factory bound to one solve

    Returns:
        An uncompiled StateGraph
    """
    workflow = StateGraph(SolverState)

    workflow.add_node("scan", factory.scan)
    workflow.add_node("select", factory.select)
    workflow.add_node("fallback", factory.fallback)

    workflow.set_entry_point("scan")

    workflow.add_conditional_edges(
        "scan",
        route_after_scan,
        {
            "select": "select",
            "fallback": "fallback",
            "end": END,
        },
    )
    workflow.add_edge("select", "scan")
    workflow.add_edge("fallback", END)

    return workflow


def compile_graph(workflow: StateGraph):
    return workflow.compile()


def step_limit(params: SolverParams) -> int:
    """Graph steps needed in the worst case: a scan and a select per bucket."""
    return 2 * params.T * params.ell + 8


def max_singleton(inst: Instance) -> int:
    """Δ = max_v f({v}) over the active ground set (not charged to the ledger)."""
    if not inst.ground:
        return 0
    empty = inst.oracle.evaluate(frozenset())
    gains = inst.oracle.singleton_gains(frozenset(), list(inst.ground))
    return int(gains.max()) + empty


class ParallelSolver:
    """
    Runs MinSMC-Par on one instance.

    The solver derives its parameters in one adaptive round, then hands the
    bucket loops to the compiled state machine.
    """

    def __init__(self, inst, epsilon: float, seed: int, config: Optional[SolverConfig] = None):
        self.inst = as_instance(inst)
        self.epsilon = epsilon
        self.seed = int(seed)
        self.config = config or SolverConfig()
        check_epsilon(epsilon)
        if self.inst.k < 1:
            raise ContractError(f"parallel solve needs k >= 1, got {self.inst.k}")

    def run(self, ledger: QueryLedger, check_feasible: bool = True):
        """
        Execute the solve against `ledger`.

        Returns:
            (final state, params, audit)
        """
        inst = self.inst
        g = inst.truncated()
        workers = self.config.workers

        if check_feasible:
            (available,) = batch_values(g, [inst.ground], ledger, workers)
            if available < inst.k:
                raise InfeasibleDemandError(inst.k, available)

        base_value, gains = singleton_scan(inst, ledger, workers)
        params = params_from_singletons(inst, gains, self.epsilon, self.config.sample_cap)
        audit = NisAudit(epsilon=self.epsilon)

        factory = NodeFactory(
            inst, params, ledger, audit, self.seed, workers=workers, verbose=self.config.verbose
        )
        app = compile_graph(create_minsmc_graph(factory))
        initial = create_initial_state(MarginalScan(frozenset(), base_value, gains))
        final = app.invoke(initial, config={"recursion_limit": step_limit(params)})
        return final, params, audit


def _report(
    algorithm: str,
    seed: int,
    inst: Instance,
    epsilon: float,
    ledger: QueryLedger,
    started: float,
    solution: Solution,
    params: Optional[SolverParams],
    audit: Optional[NisAudit],
    fallback_used: bool,
) -> RunReport:
    delta = max_singleton(inst)
    if algorithm == "main":
        bound = harmonic(min(delta, inst.k)) / (1 - 5 * epsilon)
    else:
        bound = harmonic(min(delta, inst.k)) / (1 - 4 * epsilon)
    return RunReport(
        algorithm=algorithm,
        seed=seed,
        rounds=ledger.rounds,
        queries=ledger.queries,
        wall_ms=(time.perf_counter() - started) * 1000.0,
        cost=solution.total_cost,
        achieved=solution.achieved,
        delta_max_singleton=delta,
        nis_audit_summary=audit.summary() if audit else (0, 0),
        fallback_used=fallback_used,
        m_prime_capped=bool(params and params.m_prime_capped),
        instance=inst.name,
        epsilon=epsilon,
        m=inst.m,
        k=inst.k,
        bound=bound,
        round_bound=params.round_bound(PREPROCESSING_ROUNDS) if params else None,
        shrink_ratios=list(audit.shrink_ratios) if audit else [],
        nis_unfinished=audit.unfinished if audit else 0,
    )


def minsmc_par(
    inst,
    epsilon: float,
    rng_seed: int,
    config: Optional[SolverConfig] = None,
    ledger: Optional[QueryLedger] = None,
) -> Tuple[Solution, RunReport]:
    """
    MinSMC-Par on the raw instance (no cost-spread preprocessing).

    The output always satisfies g(B) >= k; when the bucket loops run out
    first, greedy finishes the residual and the report says so.
    """
    inst = as_instance(inst)
    ledger = ledger if ledger is not None else QueryLedger()
    started = time.perf_counter()

    solver = ParallelSolver(inst, epsilon, rng_seed, config)
    final, params, audit = solver.run(ledger)
    chosen = final["chosen"]
    solution = Solution(chosen, inst.cost_of(chosen), int(final["value"]), "par", int(rng_seed))
    report = _report("par", int(rng_seed), inst, epsilon, ledger, started, solution, params,
                     audit, final["fallback_used"])
    return solution, report


def minsmc_main(
    inst,
    epsilon: float,
    rng_seed: int,
    config: Optional[SolverConfig] = None,
    ledger: Optional[QueryLedger] = None,
) -> Tuple[Solution, RunReport]:
    """
    Preprocess, solve the moderate-cost residual instance with MinSMC-Par,
    and return B^mod ∪ V0.
    """
    inst = as_instance(inst)
    check_epsilon(epsilon)
    ledger = ledger if ledger is not None else QueryLedger()
    started = time.perf_counter()

    pre = preprocess(inst, epsilon, ledger, workers=(config or SolverConfig()).workers)
    params = audit = None
    fallback_used = False
    chosen = pre.V0
    achieved = pre.g_V0
    if pre.k_mod > 0:
        residual = pre.residual_instance(inst)
        solver = ParallelSolver(residual, epsilon, rng_seed, config)
        final, params, audit = solver.run(ledger, check_feasible=False)
        chosen = pre.V0 | final["chosen"]
        achieved = min(inst.k, pre.g_V0 + int(final["value"]))
        fallback_used = final["fallback_used"]
    else:
        logger.info("V0 alone covers k=%d; parallel solve skipped", inst.k)

    solution = Solution(chosen, inst.cost_of(chosen), achieved, "main", int(rng_seed))
    report = _report("main", int(rng_seed), inst, epsilon, ledger, started, solution, params,
                     audit, fallback_used)
    report.preprocess = {
        "j": pre.j, "V0": len(pre.V0), "V1": len(pre.V1), "Vmod": len(pre.Vmod), "k_mod": pre.k_mod,
    }
    return solution, report
