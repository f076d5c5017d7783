"""
Nearly Independent Set Selection

The Mean estimator, its exact counterpart used as a test oracle, and the
NIS routine that repeatedly guesses the size of a random subset whose joint
gain nearly equals the sum of its members' gains.

The estimator target for a bucket A, base B and size t is the probability
that a uniform element x of A \\ X still gains at least (1 - ε)·τ after a
uniform t-subset X of A has been added to B. It is zero by convention when
X = A.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import (
    CHUNK_ROWS,
    MarginalScan,
    QueryLedger,
    TruncatedOracle,
    keyed_rng,
    map_chunks,
    scan_marginals,
)
from .errors import ContractError, RefusalError
from .params import BucketSpec, SolverParams

logger = logging.getLogger(__name__)

EXACT_MEAN_BUDGET = 10 ** 6

MEAN_STREAM = 1
SELECT_STREAM = 2

SeedKey = Union[int, Sequence[int]]


def _key(seed: SeedKey) -> Tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def _check_size(A: Sequence[int], t: int) -> None:
    if t < 1 or t > len(A):
        raise ContractError(f"sample size t={t} must lie in [1, |A|={len(A)}]")


def mean_estimate(
    g: TruncatedOracle,
    B: Iterable[int],
    A: Iterable[int],
    t: int,
    tau_threshold: float,
    params: SolverParams,
    rng_seed: SeedKey,
    ledger: Optional[QueryLedger] = None,
    workers: int = 1,
) -> float:
    """
    Monte Carlo estimate of the indicator mean over params.samples draws.

    Each draw is a uniform random permutation of A: its first t entries form
    X and the next one is x. All draws are evaluated in one adaptive round;
    draw chunks use independent keyed streams, so the result depends only on
    rng_seed.
    """
    A = sorted(set(A))
    _check_size(A, t)
    B = frozenset(B)
    ledger = ledger if ledger is not None else QueryLedger()

    if t == len(A):
        with ledger.round():
            return 0.0

    key = _key(rng_seed)
    members = np.asarray(A, dtype=np.int64)
    threshold = (1.0 - params.epsilon) * tau_threshold
    n = params.samples

    def work(lo: int, hi: int) -> int:
        rows = hi - lo
        rng = keyed_rng(*key, lo // CHUNK_ROWS)
        order = np.argsort(rng.random((rows, len(A))), axis=1)[:, : t + 1]
        picked = members[order]
        masks = np.zeros((rows, g.size), dtype=bool)
        masks[np.arange(rows)[:, None], picked[:, :t]] = True
        _, before = g.values_over(B, masks)
        masks[np.arange(rows), picked[:, t]] = True
        _, after = g.values_over(B, masks)
        return int(np.count_nonzero((after - before) >= threshold))

    with ledger.round() as current:
        hits = sum(map_chunks(work, n, workers))
        current.add(1 + 2 * n)
    return hits / n


def exact_mean(
    g: TruncatedOracle,
    B: Iterable[int],
    A: Iterable[int],
    t: int,
    tau_threshold: float,
    epsilon: float,
) -> float:
    """Exact indicator mean by enumerating every t-subset X and every x in A \\ X."""
    A = sorted(set(A))
    _check_size(A, t)
    pairs = math.comb(len(A), t) * (len(A) - t)
    if pairs > EXACT_MEAN_BUDGET:
        raise RefusalError(f"exact mean needs {pairs} evaluations, budget is {EXACT_MEAN_BUDGET}")
    if pairs == 0:
        return 0.0

    B = frozenset(B)
    threshold = (1.0 - epsilon) * tau_threshold
    hits = 0
    for X in itertools.combinations(A, t):
        rest = [v for v in A if v not in X]
        base_value, values = g.singleton_values(B.union(X), rest)
        hits += int(np.count_nonzero((values - base_value) >= threshold))
    return hits / pairs


@dataclass
class NisRecord:
    """Nearly-independent check for one NIS call."""

    t: int
    t_prime: int
    size: int
    joint_gain: int
    sum_gains: int
    satisfied: bool


@dataclass
class NisAudit:
    """Instrumentation collected across the NIS calls of one run."""

    epsilon: float
    records: List[NisRecord] = field(default_factory=list)
    shrink_ratios: List[float] = field(default_factory=list)
    unfinished: int = 0

    @property
    def calls(self) -> int:
        return len(self.records)

    @property
    def satisfied(self) -> int:
        return sum(1 for r in self.records if r.satisfied)

    def summary(self) -> Tuple[int, int]:
        return self.calls, self.satisfied

    def record(self, bucket: BucketSpec, size: int, joint_gain: int, sum_gains: int) -> NisRecord:
        satisfied = joint_gain >= (1.0 - self.epsilon) ** 2 * sum_gains - 1e-9
        entry = NisRecord(bucket.t, bucket.t_prime, size, joint_gain, sum_gains, satisfied)
        self.records.append(entry)
        return entry


@dataclass
class NisResult:
    """Selected set J, the grown base B ∪ J, and g of that base when known."""

    selected: FrozenSet[int]
    base: FrozenSet[int]
    base_value: Optional[int]
    iterations: int


def size_guesses(params: SolverParams, available: int) -> List[int]:
    """Distinct sizes min(⌊(1+ε̄)^i⌋, |A_p|) in increasing order of i."""
    sizes: List[int] = []
    for i in range(params.guess_count):
        size = min(int(math.floor((1.0 + params.eps_bar) ** i)), available)
        if not sizes or size != sizes[-1]:
            sizes.append(size)
    if sizes[-1] != available:
        sizes.append(available)
    return sizes


def choose_size(
    g: TruncatedOracle,
    B: FrozenSet[int],
    A: List[int],
    params: SolverParams,
    tau_threshold: float,
    key: Tuple[int, ...],
    ledger: QueryLedger,
    workers: int = 1,
) -> Tuple[int, float]:
    """
    Return the first guessed size whose estimate is at most 1 - 1.5ε̄.

    All guesses belong to one adaptive round. Each guess draws from its own
    stream keyed by the size, so evaluating them in order and stopping at the
    first pass gives the same answer as evaluating every guess. The round is
    charged for every guess, evaluated or not.
    """
    cutoff = 1.0 - 1.5 * params.eps_bar
    sizes = size_guesses(params, len(A))
    with ledger.round() as current:
        for position, size in enumerate(sizes):
            estimate = mean_estimate(
                g, B, A, size, tau_threshold, params, key + (size,), ledger, workers
            )
            if estimate <= cutoff:
                skipped = sum(1 for s in sizes[position + 1:] if s < len(A))
                current.add(skipped * (1 + 2 * params.samples))
                return size, estimate
    raise AssertionError("the full-size guess always estimates 0")


def nis(
    g: TruncatedOracle,
    A: Iterable[int],
    B: Iterable[int],
    params: SolverParams,
    bucket: BucketSpec,
    rng_seed: SeedKey,
    ledger: QueryLedger,
    audit: NisAudit,
    costs: Sequence[float],
    initial_scan: Optional[MarginalScan] = None,
    workers: int = 1,
) -> NisResult:
    """
    Select a nearly independent subset of bucket A with respect to B.

    Each iteration refilters the bucket against current marginals, guesses a
    size in one round, and adds a uniform random subset of that size. The
    loop stops when the bucket empties, when g(B) reaches k, or after r
    iterations. A scan of B over A passed as `initial_scan` replaces the
    first refilter round.
    """
    A = sorted(set(A))
    base = frozenset(B)
    if not A:
        raise ContractError("nis needs a nonempty bucket")

    key = _key(rng_seed)
    selected: set = set()
    start_gains: Dict[int, int] = {}
    scan = initial_scan
    current = A
    previous_size: Optional[int] = None
    base_value: Optional[int] = None
    iterations = 0

    for p in range(1, params.r + 1):
        candidates = [v for v in current if v not in base]
        if not candidates:
            if previous_size is not None:
                audit.shrink_ratios.append(0.0)
            break
        if scan is None:
            scan = scan_marginals(g, base, candidates, ledger, workers)
        base_value = scan.base_value
        if base_value >= g.k:
            break
        if p == 1:
            start_gains = dict(scan.gains)

        current = [v for v in candidates if bucket.contains(scan.gains[v], costs[v])]
        if previous_size is not None:
            audit.shrink_ratios.append(len(current) / previous_size)
        if not current:
            break

        size, estimate = choose_size(
            g, base, current, params, bucket.gain_hi,
            key + (MEAN_STREAM, p), ledger, workers,
        )
        rng = keyed_rng(*key, SELECT_STREAM, p)
        picked = rng.choice(len(current), size=size, replace=False)
        chosen = {current[i] for i in sorted(picked.tolist())}
        logger.debug(
            "nis bucket (%d,%d) p=%d: |A_p|=%d t_p=%d estimate=%.4f",
            bucket.t, bucket.t_prime, p, len(current), size, estimate,
        )

        selected |= chosen
        base = base | chosen
        previous_size = len(current)
        base_value = None
        scan = None
        iterations = p
    else:
        audit.unfinished += 1

    J = frozenset(selected)
    initial = frozenset(B)
    if J:
        joint = g.evaluate(initial | J) - g.evaluate(initial)
    else:
        joint = 0
    audit.record(bucket, len(J), joint, sum(start_gains.get(v, 0) for v in J))
    return NisResult(selected=J, base=base, base_value=base_value, iterations=iterations)
