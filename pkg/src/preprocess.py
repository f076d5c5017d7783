"""
Cost-Spread Preprocessing

Bounds c_max / c_min before the parallel solve. Elements are sorted by cost
and j is the shortest feasible cost-sorted prefix. Elements far cheaper than
the pivot c(v_j) are taken outright (V0), elements dearer than j·c(v_j) are
dropped (V1), and the rest (V^mod) form a residual instance with demand
k - g(V0) over the marginal profit function g_{V0}.
"""

import logging
from dataclasses import dataclass
from typing import FrozenSet

from .core import Instance, QueryLedger, ResidualOracle, as_instance, batch_values
from .errors import ContractError, InfeasibleDemandError
from .params import check_epsilon

logger = logging.getLogger(__name__)

PREPROCESSING_ROUNDS = 2


@dataclass(frozen=True)
class PreprocessResult:
    """Partition of the ground set around the pivot element v_j."""

    j: int
    pivot: int
    pivot_cost: float
    V0: FrozenSet[int]
    V1: FrozenSet[int]
    Vmod: FrozenSet[int]
    k_mod: int
    g_V0: int

    def residual_instance(self, inst: Instance) -> Instance:
        """The modified instance (V^mod, g_{V0}, c, k_mod)."""
        return Instance(
            oracle=ResidualOracle(inst.oracle, self.V0),
            costs=inst.costs,
            k=self.k_mod,
            ground=tuple(sorted(self.Vmod)),
            name=f"{inst.name}:mod",
        )

    def cost_spread(self, inst: Instance) -> float:
        """c_max / c_min within V^mod (1.0 when V^mod is empty)."""
        if not self.Vmod:
            return 1.0
        costs = [inst.costs[v] for v in self.Vmod]
        return max(costs) / min(costs)


def preprocess(inst, epsilon: float, ledger: QueryLedger, workers: int = 1) -> PreprocessResult:
    """
    Split the ground set into V0, V1 and V^mod.

    Two adaptive rounds: every cost-sorted prefix value at once, then g(V0).

    Raises:
        InfeasibleDemandError: when even the full ground set misses k
    """
    inst = as_instance(inst)
    check_epsilon(epsilon)
    if inst.k < 1:
        raise ContractError(f"preprocessing needs k >= 1, got {inst.k}")

    g = inst.truncated()
    order = sorted(inst.ground, key=lambda v: (inst.costs[v], v))
    prefixes = [order[: i + 1] for i in range(len(order))]
    values = batch_values(g, prefixes, ledger, workers)
    if not values or values[-1] < inst.k:
        raise InfeasibleDemandError(inst.k, values[-1] if values else 0)

    j = next(i + 1 for i, value in enumerate(values) if value >= inst.k)
    pivot = order[j - 1]
    pivot_cost = inst.costs[pivot]
    low = epsilon / (inst.m * inst.k) * pivot_cost
    high = j * pivot_cost

    V0 = frozenset(v for v in inst.ground if inst.costs[v] < low)
    V1 = frozenset(v for v in inst.ground if inst.costs[v] > high)
    Vmod = frozenset(inst.ground) - V0 - V1

    (g_V0,) = batch_values(g, [V0], ledger, workers)
    k_mod = max(0, inst.k - g_V0)
    logger.debug(
        "preprocess: j=%d pivot=%d |V0|=%d |V1|=%d |Vmod|=%d k_mod=%d",
        j, pivot, len(V0), len(V1), len(Vmod), k_mod,
    )
    return PreprocessResult(
        j=j, pivot=pivot, pivot_cost=pivot_cost, V0=V0, V1=V1, Vmod=Vmod,
        k_mod=k_mod, g_V0=g_V0,
    )
