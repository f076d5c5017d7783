"""
Solver State Definition

The state that flows through the MinSMC-Par state machine. It carries the
partial solution B, the bucket pointer (t, t'), the cached marginal scan of
B, and control-flow status.
"""

from typing import FrozenSet, List, Literal, Optional, TypedDict

from .core import MarginalScan


class SolverState(TypedDict):
    """
    The state object passed between graph nodes.

    `scan` holds g(B) and g_B(v) for every element outside B; it is reused
    for as long as B is unchanged, so empty buckets cost no queries.
    """

    # Partial solution
    chosen: FrozenSet[int]
    value: Optional[int]  # g(B) when already known

    # Bucket pointer
    t: int
    t_prime: int
    bucket: List[int]

    # Cached marginals of the current B
    scan: Optional[MarginalScan]

    # Bookkeeping
    nis_calls: int
    fallback_used: bool

    status: Literal["scanning", "selecting", "exhausted", "feasible"]


def create_initial_state(scan: Optional[MarginalScan] = None) -> SolverState:
    """
    Fresh state at B = ∅ and bucket (1, 1).

    Args:
        scan: Singleton scan from parameter derivation, reused as the first
            bucket scan
    """
    return SolverState(
        chosen=frozenset(),
        value=None if scan is None else scan.base_value,
        t=1,
        t_prime=1,
        bucket=[],
        scan=scan,
        nis_calls=0,
        fallback_used=False,
        status="scanning",
    )
