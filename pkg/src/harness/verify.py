"""
Solution Verification

Recomputes a solution's g-value and cost from scratch with a fresh oracle
and compares them with the stored fields. Problems are reported, never
raised.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List

from ..baselines import Solution
from ..core import cost_of
from ..instances import CoverageInstance, CoverageOracle
from .report import RunReport

COST_TOLERANCE = 1e-9


@dataclass
class VerificationReport:
    """Named pass/fail checks plus a message for every failure."""

    checks: Dict[str, bool] = field(default_factory=dict)
    messages: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def check(self, name: str, passed: bool, message: str) -> None:
        self.checks[name] = passed
        if not passed:
            self.messages.append(message)


def verify_solution(inst: CoverageInstance, sol: Solution) -> VerificationReport:
    """Check ids, feasibility, the stored g-value and the stored cost."""
    report = VerificationReport()
    ids = sorted(sol.chosen)
    valid = all(isinstance(v, int) and 0 <= v < inst.m for v in ids)
    report.check("ids", valid, f"solution references ids outside [0, {inst.m})")
    if not valid:
        for name in ("feasible", "achieved", "cost"):
            report.checks[name] = False
        return report

    oracle = CoverageOracle(inst.covers, inst.universe_size, inst.item_weights)
    value = min(oracle.evaluate(ids), inst.k)
    cost = cost_of(inst.costs, ids)

    report.check("feasible", value >= inst.k, f"g(chosen)={value} is below k={inst.k}")
    report.check("achieved", value == sol.achieved,
                 f"stored achieved={sol.achieved} but recomputed g={value}")
    report.check("cost", abs(cost - sol.total_cost) <= COST_TOLERANCE,
                 f"stored total_cost={sol.total_cost!r} but recomputed {cost!r}")
    return report


def verify_rows(rows: Iterable[RunReport]) -> List[str]:
    """
    Re-check bench rows for internal consistency.

    Returns one message per problem: an error row, a row short of its
    demand, a parallel row over its round bound, or a row over its
    approximation bound.
    """
    problems = []
    for row in rows:
        tag = f"{row.instance}/{row.algorithm}/eps={row.epsilon}/seed={row.seed}"
        if row.error:
            problems.append(f"{tag}: {row.error}")
            continue
        if row.achieved < row.k:
            problems.append(f"{tag}: achieved {row.achieved} < k={row.k}")
        if row.round_bound is not None and row.rounds > row.round_bound:
            problems.append(f"{tag}: {row.rounds} rounds exceed bound {row.round_bound}")
        if row.within_bound is False:
            problems.append(f"{tag}: cost {row.cost} exceeds {row.bound}·OPT={row.opt}")
    return problems
