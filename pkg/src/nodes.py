"""
Graph Nodes

Node functions for the MinSMC-Par state machine. Each node is one step
between adaptive rounds: scanning buckets, selecting a nearly independent
set from a bucket, or finishing greedily when the bucket loops run out.
"""

import logging
from typing import Any, Dict, Optional, Sequence

from .baselines import greedy_extend
from .core import Instance, QueryLedger, batch_values, scan_marginals
from .nis import NisAudit, nis
from .params import SolverParams, bucket_index
from .state import SolverState

logger = logging.getLogger(__name__)


class NodeFactory:
    """
    Creates node functions bound to one solve: the instance, its derived
    parameters, the query ledger and the NIS audit.
    """

    def __init__(
        self,
        inst: Instance,
        params: SolverParams,
        ledger: QueryLedger,
        audit: NisAudit,
        seed: int,
        workers: int = 1,
        verbose: bool = False,
    ):
        self.inst = inst
        self.g = inst.truncated()
        self.params = params
        self.ledger = ledger
        self.audit = audit
        self.seed = seed
        self.workers = workers
        self.verbose = verbose

    def _log(self, message: str, *args):
        logger.log(logging.INFO if self.verbose else logging.DEBUG, message, *args)

    def _advance(self, t: int, t_prime: int):
        t_prime += 1
        if t_prime > self.params.ell:
            return t + 1, 1
        return t, t_prime

    # =========================================================================
    # NODE 1: BUCKET SCAN
    # =========================================================================

    def scan(self, state: SolverState) -> Dict[str, Any]:
        """
        Find the next nonempty bucket at or after (t, t').

        A fresh marginal scan (one round) is needed only when B changed since
        the last one. Empty buckets are passed over using the cached scan.
        """
        chosen = state["chosen"]
        value: Optional[int] = state["value"]
        if value is not None and value >= self.g.k:
            return {"status": "feasible"}

        scan = state["scan"]
        remaining = [v for v in self.inst.ground if v not in chosen]
        if not remaining:
            if value is None:
                (value,) = batch_values(self.g, [chosen], self.ledger, self.workers)
            return {"value": value, "status": "feasible" if value >= self.g.k else "exhausted"}
        if scan is None or scan.base != chosen:
            scan = scan_marginals(self.g, chosen, remaining, self.ledger, self.workers)
        value = scan.base_value
        if value >= self.g.k:
            return {"scan": scan, "value": value, "status": "feasible"}

        pointer = (state["t"], state["t_prime"])
        located: Dict[tuple, list] = {}
        for v in remaining:
            index = bucket_index(self.params, scan.gains[v], self.inst.costs[v])
            if index[0] and index >= pointer:
                located.setdefault(index, []).append(v)

        if not located:
            self._log("bucket loops exhausted with g(B)=%d < k=%d", value, self.g.k)
            return {
                "scan": scan, "value": value, "status": "exhausted",
                "t": self.params.T + 1, "t_prime": 1,
            }

        t, t_prime = min(located)
        return {
            "scan": scan,
            "value": value,
            "t": t,
            "t_prime": t_prime,
            "bucket": sorted(located[(t, t_prime)]),
            "status": "selecting",
        }

    # =========================================================================
    # NODE 2: NIS SELECTION
    # =========================================================================

    def select(self, state: SolverState) -> Dict[str, Any]:
        """Pick a nearly independent set from the current bucket and add it to B."""
        t, t_prime = state["t"], state["t_prime"]
        spec = self.params.bucket(t, t_prime)
        result = nis(
            self.g,
            state["bucket"],
            state["chosen"],
            self.params,
            spec,
            (self.seed, t, t_prime),
            self.ledger,
            self.audit,
            self.inst.costs,
            initial_scan=state["scan"],
            workers=self.workers,
        )
        self._log(
            "bucket (%d,%d): |A|=%d, selected %d in %d iterations",
            t, t_prime, len(state["bucket"]), len(result.selected), result.iterations,
        )
        t, t_prime = self._advance(t, t_prime)
        update = {
            "chosen": result.base,
            "value": result.base_value,
            "t": t,
            "t_prime": t_prime,
            "bucket": [],
            "nis_calls": state["nis_calls"] + 1,
            "status": "scanning",
        }
        if result.selected:
            update["scan"] = None
        return update

    # =========================================================================
    # NODE 3: GREEDY FALLBACK
    # =========================================================================

    def fallback(self, state: SolverState) -> Dict[str, Any]:
        """Finish the residual demand with sequential greedy."""
        logger.warning(
            "bucket loops ended with g(B)=%s < k=%d; finishing greedily", state["value"], self.g.k
        )
        chosen, value, iterations = greedy_extend(
            self.inst, self.ledger, state["chosen"], state["value"] or 0, self.workers
        )
        self._log("greedy fallback added %d elements in %d rounds",
                  len(chosen - state["chosen"]), iterations)
        return {
            "chosen": chosen,
            "value": value,
            "fallback_used": True,
            "status": "feasible",
        }


# =============================================================================
# ROUTING FUNCTIONS (for conditional edges)
# =============================================================================

def route_after_scan(state: SolverState) -> str:
    """
    Returns:
        "select" when a nonempty bucket was found
        "fallback" when the bucket loops are exhausted short of k
        "end" once g(B) >= k
    """
    status = state.get("status")
    if status == "selecting":
        return "select"
    if status == "exhausted":
        return "fallback"
    return "end"
