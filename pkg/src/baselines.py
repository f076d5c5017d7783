"""
Baseline Solvers

Wolsey's sequential greedy and an exhaustive exact solver. Both are used as
correctness and approximation-ratio oracles for the parallel algorithm.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from .core import Instance, QueryLedger, as_instance, cost_of, map_chunks, scan_marginals
from .errors import InfeasibleDemandError, InstanceFormatError, RefusalError

logger = logging.getLogger(__name__)

DEFAULT_SUBSET_LIMIT = 24

# Subsets enumerated per chunk by exact_solve.
ENUM_CHUNK = 1 << 14


@dataclass(frozen=True)
class Solution:
    """A chosen element set with its cost, g-value and provenance."""

    chosen: FrozenSet[int]
    total_cost: float
    achieved: int
    algorithm: str
    seed: Optional[int] = None

    @property
    def ids(self) -> List[int]:
        return sorted(self.chosen)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "chosen": self.ids,
            "total_cost": self.total_cost,
            "achieved": self.achieved,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Solution":
        """
        Raises:
            InstanceFormatError: when a required field is missing or has the
                wrong type
        """
        if not isinstance(data, dict):
            raise InstanceFormatError("schema violation: solution must be a JSON object")
        missing = [key for key in ("chosen", "total_cost", "achieved") if key not in data]
        if missing:
            raise InstanceFormatError(f"schema violation: solution is missing {missing}")
        if not isinstance(data["chosen"], list):
            raise InstanceFormatError("schema violation: solution 'chosen' must be a list")
        try:
            return cls(
                chosen=frozenset(int(v) for v in data["chosen"]),
                total_cost=float(data["total_cost"]),
                achieved=int(data["achieved"]),
                algorithm=str(data.get("algorithm", "unknown")),
                seed=data.get("seed"),
            )
        except (TypeError, ValueError) as e:
            raise InstanceFormatError(f"schema violation: bad solution field ({e})")


def greedy_key(gain: int, cost: float, v: int) -> Tuple[float, int, int]:
    """Selection order: ratio, then gain, then smaller id."""
    return gain / cost, gain, -v


def greedy_extend(
    inst: Instance,
    ledger: QueryLedger,
    base: Iterable[int] = (),
    base_value: int = 0,
    workers: int = 1,
) -> Tuple[FrozenSet[int], int, int]:
    """
    Grow `base` greedily until g reaches k.

    Each iteration scans every remaining element in one adaptive round; the
    new g-value comes from the same scan, so rounds equal iterations.

    Returns:
        (chosen set, achieved g-value, iterations)
    """
    g = inst.truncated()
    chosen = frozenset(base)
    value = base_value
    iterations = 0
    while value < g.k:
        remaining = [v for v in inst.ground if v not in chosen]
        if not remaining:
            raise InfeasibleDemandError(g.k, value)
        scan = scan_marginals(g, chosen, remaining, ledger, workers)
        best = max(remaining, key=lambda v: greedy_key(scan.gains[v], inst.costs[v], v))
        gain = scan.gains[best]
        if gain <= 0:
            raise InfeasibleDemandError(g.k, scan.base_value)
        chosen = chosen | {best}
        value = scan.base_value + gain
        iterations += 1
        logger.debug("greedy step %d: picked %d (gain %d, cost %.6g)", iterations, best, gain,
                     inst.costs[best])
    return chosen, value, iterations


def greedy_solve(inst, ledger: Optional[QueryLedger] = None, workers: int = 1) -> Solution:
    """
    Wolsey's greedy: add the best profit-to-cost element until g(B) >= k.

    Guarantees c(B) <= H(min{Δ, k})·OPT.
    """
    inst = as_instance(inst)
    ledger = ledger if ledger is not None else QueryLedger()
    chosen, value, _ = greedy_extend(inst, ledger, workers=workers)
    return Solution(chosen, inst.cost_of(chosen), value, "greedy")


def _ids_of(mask: int) -> Tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def exact_solve(inst, subset_limit: int = DEFAULT_SUBSET_LIMIT, workers: int = 1) -> Solution:
    """
    Exhaustive minimum-cost cover.

    Ties on cost go to the lexicographically smallest sorted id tuple, so
    the answer does not depend on how subsets are split across workers.

    Raises:
        RefusalError: more elements than subset_limit
        InfeasibleDemandError: k > f(V)
    """
    inst = as_instance(inst)
    m = inst.m
    if m > subset_limit:
        raise RefusalError(f"exact solve refuses m={m} > subset limit {subset_limit}")

    g = inst.truncated()
    ground = np.asarray(inst.ground, dtype=np.int64)
    local_costs = np.asarray([inst.costs[v] for v in inst.ground])
    bits = np.arange(m, dtype=np.int64)

    def best_in(lo: int, hi: int):
        codes = np.arange(lo, hi, dtype=np.int64)
        local = (codes[:, None] >> bits) & 1 == 1
        masks = np.zeros((hi - lo, g.size), dtype=bool)
        masks[:, ground] = local
        _, values = g.values_over(frozenset(), masks)
        feasible = np.flatnonzero(values >= g.k)
        if feasible.size == 0:
            return None
        approx = local[feasible].astype(float) @ local_costs
        near = feasible[approx <= approx.min() * (1 + 1e-9) + 1e-12]
        options = []
        for row in near.tolist():
            ids = tuple(int(ground[i]) for i in _ids_of(int(codes[row])))
            options.append((cost_of(inst.costs, ids), ids))
        return min(options)

    results = [r for r in map_chunks(best_in, 1 << m, workers, ENUM_CHUNK) if r is not None]
    if not results:
        raise InfeasibleDemandError(g.k, g.evaluate(inst.ground))
    cost, ids = min(results)
    chosen = frozenset(ids)
    return Solution(chosen, cost, g.evaluate(chosen), "exact")
