"""
Tests for the parallel solvers

Run with: pytest tests/ -v

Test Coverage:
- State creation and routing
- Graph node behaviour on hand-checked instances
- Preprocessing partitions and bounds
- Feasibility, round bounds and approximation ratios of both solvers
- Determinism across worker counts and cost-scale invariance
"""

from unittest.mock import patch

import pytest

from src.baselines import exact_solve, greedy_solve
from src.config import SolverConfig
from src.core import Instance, QueryLedger, SetFunctionOracle, harmonic
from src.errors import ConfigError, InfeasibleDemandError
from src.graph import (
    ParallelSolver,
    compile_graph,
    create_minsmc_graph,
    max_singleton,
    minsmc_main,
    minsmc_par,
    step_limit,
)
from src.instances import CoverageInstance, GeneratorConfig, gen_random_coverage
from src.nis import NisAudit
from src.nodes import NodeFactory, route_after_scan
from src.params import derive_params
from src.preprocess import PreprocessResult, preprocess
from src.state import create_initial_state

from .conftest import make_ex_i1, make_random


def star_instance() -> CoverageInstance:
    return CoverageInstance(
        m=3, universe_size=3, covers=((0, 1, 2), (0,), (1,)), costs=(1.0, 1.0, 1.0), k=3
    )


def spread_instance() -> CoverageInstance:
    """One very cheap and one very dear element around three ordinary ones."""
    return CoverageInstance(
        m=5, universe_size=4, covers=((0,), (0, 1, 2, 3), (1,), (2,), (3,)),
        costs=(1e-9, 1e9, 1.0, 1.1, 1.2), k=4,
    )


class RoundSpy(SetFunctionOracle):
    """Delegating oracle that notes the open round index at every call."""

    def __init__(self, inner: SetFunctionOracle, ledger: QueryLedger):
        self.inner = inner
        self.ledger = ledger
        self.rounds_seen = []

    def _note(self):
        self.rounds_seen.append(self.ledger.rounds if self.ledger.in_round else None)

    @property
    def size(self) -> int:
        return self.inner.size

    def evaluate(self, ids):
        self._note()
        return self.inner.evaluate(ids)

    def gains_many(self, base, masks):
        self._note()
        return self.inner.gains_many(base, masks)

    def singleton_gains(self, base, candidates):
        self._note()
        return self.inner.singleton_gains(base, candidates)


def make_factory(inst, epsilon=0.1, seed=0):
    core = inst.to_instance()
    ledger = QueryLedger()
    params = derive_params(core, epsilon, ledger, sample_cap=256)
    return NodeFactory(core, params, ledger, NisAudit(epsilon), seed), ledger


class TestSolverState:
    """Tests for state creation and routing."""

    def test_initial_state(self):
        state = create_initial_state()
        assert state["chosen"] == frozenset()
        assert state["value"] is None
        assert (state["t"], state["t_prime"]) == (1, 1)
        assert state["status"] == "scanning"
        assert state["fallback_used"] is False

    @pytest.mark.parametrize("status, route", [
        ("selecting", "select"),
        ("exhausted", "fallback"),
        ("feasible", "end"),
    ])
    def test_route_after_scan(self, status, route):
        state = create_initial_state()
        state["status"] = status
        assert route_after_scan(state) == route


class TestNodes:
    """Tests for the scan, select and fallback nodes."""

    def test_scan_finds_first_bucket(self):
        factory, _ = make_factory(star_instance())
        update = factory.scan(create_initial_state())
        assert update["status"] == "selecting"
        assert (update["t"], update["t_prime"]) == (1, 1)
        assert update["bucket"] == [0]

    def test_scan_reuses_cached_marginals(self):
        factory, ledger = make_factory(star_instance())
        state = create_initial_state()
        state.update(factory.scan(state))
        rounds = ledger.rounds
        state.update({"t": 1, "t_prime": 2, "status": "scanning"})
        factory.scan(state)
        assert ledger.rounds == rounds

    def test_select_grows_solution(self):
        factory, _ = make_factory(star_instance())
        state = create_initial_state()
        state.update(factory.scan(state))
        update = factory.select(state)
        assert update["chosen"] == frozenset({0})
        assert update["nis_calls"] == 1
        assert (update["t"], update["t_prime"]) == (1, 2)
        assert update["scan"] is None

    def test_fallback_finishes_greedily(self):
        factory, _ = make_factory(make_ex_i1())
        state = create_initial_state()
        state.update({"chosen": frozenset({0}), "value": 2, "status": "exhausted"})
        update = factory.fallback(state)
        assert update["fallback_used"] is True
        assert update["value"] == 3
        assert update["chosen"] == frozenset({0, 1})
        assert update["status"] == "feasible"

    def test_scan_stops_when_feasible(self):
        factory, _ = make_factory(star_instance())
        state = create_initial_state()
        state.update({"chosen": frozenset({0}), "value": 3})
        assert factory.scan(state)["status"] == "feasible"


class TestGraph:
    """Tests for the compiled state machine."""

    def test_graph_nodes(self):
        factory = make_factory(star_instance())[0]
        workflow = create_minsmc_graph(factory)
        assert {"scan", "select", "fallback"} <= set(workflow.nodes)

    def test_run_on_star(self):
        core = star_instance().to_instance()
        ledger = QueryLedger()
        final, params, audit = ParallelSolver(core, 0.1, 0, SolverConfig(sample_cap=256)).run(ledger)
        assert final["chosen"] == frozenset({0})
        assert final["status"] == "feasible"
        assert audit.calls == 1
        assert ledger.rounds <= params.round_bound()

    def test_compiled_graph_invokes(self):
        core = star_instance().to_instance()
        ledger = QueryLedger()
        params = derive_params(core, 0.1, ledger, sample_cap=256)
        factory = NodeFactory(core, params, ledger, NisAudit(0.1), 0)
        app = compile_graph(create_minsmc_graph(factory))
        final = app.invoke(create_initial_state(), config={"recursion_limit": step_limit(params)})
        assert final["value"] >= core.k


class TestPreprocess:
    """Tests for cost-spread preprocessing."""

    def test_uniform_costs_identity(self):
        inst = CoverageInstance(
            m=4, universe_size=4, covers=((0, 1), (1, 2), (2, 3), (3,)), costs=(2.0,) * 4, k=4
        )
        result = preprocess(inst, 0.1, QueryLedger())
        assert result.V0 == result.V1 == frozenset()
        assert result.Vmod == frozenset(range(4))
        assert result.k_mod == 4

    def test_extreme_spread(self):
        ledger = QueryLedger()
        result = preprocess(spread_instance(), 0.1, ledger)
        assert result.j == 4
        assert result.V0 == frozenset({0})
        assert result.V1 == frozenset({1})
        assert result.Vmod == frozenset({2, 3, 4})
        assert result.g_V0 == 1 and result.k_mod == 3
        assert ledger.rounds == 2

    def test_partition_and_bounds(self):
        epsilon = 0.1
        for seed in range(30):
            inst = gen_random_coverage(GeneratorConfig(
                m=10 + seed % 5, universe_size=20, density=0.25, cost_low=1.0, cost_high=1e6,
                k_fraction=0.7, seed=seed,
            ))
            result = preprocess(inst, epsilon, QueryLedger())
            assert result.V0 | result.V1 | result.Vmod == frozenset(range(inst.m))
            assert not (result.V0 & result.V1 or result.V0 & result.Vmod or result.V1 & result.Vmod)
            opt = exact_solve(inst).total_cost
            assert inst.to_instance().cost_of(result.V0) <= epsilon / inst.k * opt + 1e-9
            assert result.cost_spread(inst.to_instance()) <= inst.m ** 2 * inst.k / epsilon

    def test_infeasible(self):
        inst = CoverageInstance(m=1, universe_size=2, covers=((0,),), costs=(1.0,), k=2)
        with pytest.raises(InfeasibleDemandError):
            preprocess(inst, 0.1, QueryLedger())

    def test_residual_instance(self):
        inst = spread_instance().to_instance()
        result = preprocess(inst, 0.1, QueryLedger())
        residual = result.residual_instance(inst)
        assert residual.ground == (2, 3, 4)
        assert residual.k == 3
        assert residual.oracle.evaluate({2, 3, 4}) == 3


class TestMinSMCPar:
    """Tests for the parallel solver without preprocessing."""

    def test_ex_i1_many_seeds(self, fast_config):
        bound = harmonic(3) / (1 - 5 * 0.1) * 2.0
        for seed in range(20):
            solution, report = minsmc_par(make_ex_i1(), 0.1, seed, fast_config)
            assert solution.achieved >= 3
            assert solution.total_cost <= bound + 1e-9
            assert report.rounds <= report.round_bound

    def test_ex_i1_solution(self, fast_config):
        solution, _ = minsmc_par(make_ex_i1(), 0.1, 0, fast_config)
        assert solution.chosen == frozenset({0, 1})

    def test_best_element_alone(self, fast_config):
        solution, report = minsmc_par(star_instance(), 0.1, 4, fast_config)
        assert solution.chosen == frozenset({0})
        assert report.nis_audit_summary == (1, 1)

    def test_single_element(self, fast_config):
        inst = CoverageInstance(m=1, universe_size=1, covers=((0,),), costs=(2.0,), k=1)
        solution, _ = minsmc_par(inst, 0.1, 0, fast_config)
        assert solution.chosen == frozenset({0})

    def test_infeasible(self, fast_config):
        inst = CoverageInstance(m=2, universe_size=3, covers=((0,), (1,)), costs=(1.0, 1.0), k=3)
        with pytest.raises(InfeasibleDemandError):
            minsmc_par(inst, 0.1, 0, fast_config)

    @pytest.mark.parametrize("epsilon", [0.0, 0.2, 0.25])
    def test_epsilon_range(self, epsilon, fast_config):
        with pytest.raises(ConfigError):
            minsmc_par(make_ex_i1(), epsilon, 0, fast_config)

    def test_report_fields(self, fast_config):
        inst = make_random(1)
        solution, report = minsmc_par(inst, 0.1, 3, fast_config)
        assert report.algorithm == "par"
        assert report.cost == solution.total_cost
        assert report.delta_max_singleton == max_singleton(inst.to_instance())
        assert report.m_prime_capped
        assert report.queries >= report.rounds

    def test_ledger_counts_match_report(self, fast_config):
        ledger = QueryLedger()
        _, report = minsmc_par(make_random(2), 0.1, 1, fast_config, ledger=ledger)
        assert (report.rounds, report.queries) == (ledger.rounds, ledger.queries)

    def test_cost_scale_keeps_solution(self, fast_config):
        for seed in range(3):
            base = make_random(seed)
            scaled = CoverageInstance(
                m=base.m, universe_size=base.universe_size, covers=base.covers,
                costs=tuple(4.0 * c for c in base.costs), k=base.k,
            )
            a, _ = minsmc_par(base, 0.1, seed, fast_config)
            b, _ = minsmc_par(scaled, 0.1, seed, fast_config)
            assert a.chosen == b.chosen

    def test_rounds_are_synchronization_points(self, fast_config):
        """Every round that charges queries is one where the oracle was actually called."""
        ledger = QueryLedger()
        source = make_random(2, m=16, universe_size=30)
        spy = RoundSpy(source.oracle, ledger)
        inst = Instance(oracle=spy, costs=source.costs, k=source.k)
        _, report = minsmc_par(inst, 0.1, 1, fast_config, ledger=ledger)
        seen = {index for index in spy.rounds_seen if index is not None}
        charged = {i for i, queries in enumerate(ledger.per_round_queries) if queries > 0}
        assert seen == charged
        assert report.rounds == ledger.rounds

    def test_buckets_shrink_between_iterations(self, fast_config):
        ratios = []
        eps_bar = None
        sources = [CoverageInstance(
            m=8, universe_size=8, covers=tuple((i,) for i in range(8)), costs=(1.0,) * 8, k=8,
        )]
        sources += [make_random(seed, m=24, universe_size=30, density=0.3, cost_high=2.0)
                    for seed in range(6)]
        for seed, source in enumerate(sources):
            _, params, audit = ParallelSolver(source, 0.1, seed, fast_config).run(QueryLedger())
            ratios.extend(audit.shrink_ratios)
            eps_bar = params.eps_bar if eps_bar is None else min(eps_bar, params.eps_bar)
        assert ratios
        assert all(r < 1.0 for r in ratios)
        assert sum(ratios) / len(ratios) <= 1 - eps_bar / 2


class TestMinSMCMain:
    """Tests for the preprocessed parallel solver."""

    def test_feasible_with_round_bound(self, fast_config):
        for seed in range(20):
            inst = gen_random_coverage(GeneratorConfig(
                m=5 + 3 * (seed % 10), universe_size=30, density=0.15, cost_low=1.0,
                cost_high=10.0 ** (seed % 4), k_fraction=0.8, seed=seed,
            ))
            for epsilon in (0.05, 0.19):
                solution, report = minsmc_main(inst, epsilon, seed, fast_config)
                assert min(inst.oracle.evaluate(solution.chosen), inst.k) >= inst.k
                assert report.rounds <= report.round_bound

    def test_ratio_against_exact(self, fast_config):
        within = total = 0
        for seed in range(12):
            inst = make_random(seed, m=12, universe_size=24)
            opt = exact_solve(inst).total_cost
            bound = harmonic(min(max_singleton(inst.to_instance()), inst.k)) / (1 - 5 * 0.1)
            for run_seed in range(3):
                solution, _ = minsmc_main(inst, 0.1, run_seed, fast_config)
                within += solution.total_cost <= bound * opt + 1e-9
                total += 1
        assert within / total >= 0.7

    def test_nis_audit_rate(self, fast_config):
        calls = satisfied = 0
        for seed in range(10):
            _, report = minsmc_main(make_random(seed, m=14, universe_size=30), 0.1, seed, fast_config)
            calls += report.nis_audit_summary[0]
            satisfied += report.nis_audit_summary[1]
        assert calls > 0
        assert satisfied / calls >= 1 - 2 * 0.1

    def test_thousand_elements_beside_greedy(self):
        inst = gen_random_coverage(GeneratorConfig(
            m=1000, universe_size=1000, density=0.01, cost_low=1.0, cost_high=2.0,
            k_fraction=0.5, seed=11,
        ))
        config = SolverConfig(sample_cap=128)
        solution, report = minsmc_main(inst, 0.19, 0, config)
        greedy_ledger = QueryLedger()
        greedy = greedy_solve(inst, greedy_ledger)
        assert solution.achieved >= inst.k
        assert report.rounds < inst.m
        assert report.m_prime_capped
        assert greedy_ledger.rounds == len(greedy.chosen)

    def test_preprocess_recorded(self, fast_config):
        _, report = minsmc_main(spread_instance(), 0.1, 0, fast_config)
        assert report.preprocess == {"j": 4, "V0": 1, "V1": 1, "Vmod": 3, "k_mod": 3}
        assert report.algorithm == "main"

    def test_spread_instance_solution(self, fast_config):
        solution, _ = minsmc_main(spread_instance(), 0.1, 0, fast_config)
        assert solution.chosen == frozenset({0, 2, 3, 4})
        assert solution.achieved == 4

    def test_k_mod_zero_skips_parallel_solve(self, fast_config):
        inst = make_ex_i1()
        covering = PreprocessResult(
            j=1, pivot=2, pivot_cost=2.5, V0=frozenset({2}), V1=frozenset(),
            Vmod=frozenset({0, 1}), k_mod=0, g_V0=3,
        )
        with patch("src.graph.preprocess", return_value=covering), \
                patch("src.graph.ParallelSolver") as solver:
            solution, report = minsmc_main(inst, 0.1, 0, fast_config)
        solver.assert_not_called()
        assert solution.chosen == frozenset({2})
        assert solution.achieved == 3
        assert report.nis_audit_summary == (0, 0)

    def test_uniform_costs_match_par(self, fast_config):
        inst = CoverageInstance(
            m=6, universe_size=8, covers=((0, 1), (1, 2, 3), (3, 4), (4, 5, 6), (6, 7), (0, 7)),
            costs=(1.0,) * 6, k=8,
        )
        for seed in range(3):
            a, _ = minsmc_main(inst, 0.1, seed, fast_config)
            b, _ = minsmc_par(inst, 0.1, seed, fast_config)
            assert a.chosen == b.chosen

    def test_deterministic_across_workers(self):
        inst = make_random(7, m=20, universe_size=40)
        runs = []
        for workers in (1, 4):
            config = SolverConfig(workers=workers, sample_cap=5000)
            ledger = QueryLedger()
            solution, _ = minsmc_main(inst, 0.1, 11, config, ledger=ledger)
            runs.append((solution, ledger.per_round_queries))
        assert runs[0] == runs[1]
