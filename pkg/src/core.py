"""
Oracle Core

Set-function oracles, the truncated function g(S) = min{f(S), k}, and the
query ledger that counts oracle queries and adaptive rounds.

An adaptive round is one batch of queries whose inputs depend only on
answers from earlier rounds. Every query must be issued inside an open
round; a batch helper opens exactly one round, evaluates its whole batch
(possibly across worker threads) and merges the counts when the round
closes.
"""

import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError, InputError, LedgerMisuseError

logger = logging.getLogger(__name__)

IdSet = FrozenSet[int]

# Rows evaluated per chunk when a batch is split across workers. Fixed so
# that chunking never depends on the worker count.
CHUNK_ROWS = 4096


@dataclass(frozen=True)
class Element:
    """A ground-set element: a dense integer id and a positive cost."""

    id: int
    cost: float

    def __post_init__(self):
        if self.id < 0:
            raise InputError(f"element id must be >= 0, got {self.id}")
        if not self.cost > 0:
            raise InputError(f"element {self.id} has nonpositive cost {self.cost}")


class SetFunctionOracle(ABC):
    """
    A monotone, submodular, integer-valued set function over ids [0, size).

    Implementations must be pure functions of the queried set. The batch
    hooks below have loop-based defaults; vectorized oracles override them.
    """

    @property
    @abstractmethod
    def size(self) -> int:
        """Number of elements in the ground set."""

    @abstractmethod
    def evaluate(self, ids: Iterable[int]) -> int:
        """Return f(S) for the given id set."""

    def gains_many(self, base: IdSet, masks: np.ndarray) -> np.ndarray:
        """
        Return f(base ∪ S_i) - f(base) for every row S_i of a boolean
        membership matrix of shape (n, size).
        """
        base_value = self.evaluate(base)
        out = np.empty(masks.shape[0], dtype=np.int64)
        for row in range(masks.shape[0]):
            ids = base.union(np.flatnonzero(masks[row]).tolist())
            out[row] = self.evaluate(ids) - base_value
        return out

    def singleton_gains(self, base: IdSet, candidates: Sequence[int]) -> np.ndarray:
        """Return f(base ∪ {v}) - f(base) for every candidate v."""
        masks = np.zeros((len(candidates), self.size), dtype=bool)
        masks[np.arange(len(candidates)), list(candidates)] = True
        return self.gains_many(base, masks)


class ResidualOracle(SetFunctionOracle):
    """
    The marginal profit function f_{W}(S) = f(S ∪ W) - f(W) of a fixed set W.

    Marginal profit functions of monotone submodular functions are again
    monotone and submodular.
    """

    def __init__(self, inner: SetFunctionOracle, offset: Iterable[int]):
        self.inner = inner
        self.offset: IdSet = frozenset(offset)
        self._offset_value = inner.evaluate(self.offset)

    @property
    def size(self) -> int:
        return self.inner.size

    def evaluate(self, ids: Iterable[int]) -> int:
        return self.inner.evaluate(self.offset.union(ids)) - self._offset_value

    def gains_many(self, base: IdSet, masks: np.ndarray) -> np.ndarray:
        return self.inner.gains_many(self.offset | base, masks)

    def singleton_gains(self, base: IdSet, candidates: Sequence[int]) -> np.ndarray:
        return self.inner.singleton_gains(self.offset | base, candidates)


class TruncatedOracle:
    """The truncation g(S) = min{f(S), k} of an oracle f at demand k."""

    def __init__(self, inner: SetFunctionOracle, k: int):
        if k < 0:
            raise ContractError(f"demand k must be >= 0, got {k}")
        self.inner = inner
        self.k = int(k)

    @property
    def size(self) -> int:
        return self.inner.size

    def evaluate(self, ids: Iterable[int]) -> int:
        return min(self.inner.evaluate(ids), self.k)

    def values_over(self, base: IdSet, masks: np.ndarray) -> Tuple[int, np.ndarray]:
        """
        Return g(base) and g(base ∪ S_i) for every mask row.

        Both come from a single pass over the inner oracle.
        """
        f_base = self.inner.evaluate(base)
        gains = self.inner.gains_many(base, masks)
        return min(f_base, self.k), np.minimum(f_base + gains, self.k)

    def singleton_values(self, base: IdSet, candidates: Sequence[int]) -> Tuple[int, np.ndarray]:
        """Return g(base) and g(base ∪ {v}) for every candidate v."""
        f_base = self.inner.evaluate(base)
        gains = self.inner.singleton_gains(base, candidates)
        return min(f_base, self.k), np.minimum(f_base + gains, self.k)


@dataclass
class Instance:
    """
    A MinSMC instance: an oracle f, per-element costs and a demand k.

    `ground` restricts the active ground set (all ids when None), which is
    how preprocessing hands a sub-instance to the parallel solver without
    copying the oracle.
    """

    oracle: SetFunctionOracle
    costs: Tuple[float, ...]
    k: int
    ground: Optional[Tuple[int, ...]] = None
    name: str = "instance"

    def __post_init__(self):
        self.costs = tuple(float(c) for c in self.costs)
        if len(self.costs) != self.oracle.size:
            raise InputError(
                f"cost list has {len(self.costs)} entries for {self.oracle.size} elements"
            )
        for v, c in enumerate(self.costs):
            if not c > 0:
                raise InputError(f"element {v} has nonpositive cost {c}")
        if self.k < 0:
            raise ContractError(f"demand k must be >= 0, got {self.k}")
        if self.ground is None:
            self.ground = tuple(range(self.oracle.size))
        else:
            self.ground = tuple(sorted(set(self.ground)))

    @property
    def m(self) -> int:
        return len(self.ground)

    @property
    def elements(self) -> List[Element]:
        return [Element(v, self.costs[v]) for v in self.ground]

    def truncated(self) -> TruncatedOracle:
        return TruncatedOracle(self.oracle, self.k)

    def cost_of(self, ids: Iterable[int]) -> float:
        return cost_of(self.costs, ids)


def cost_of(costs: Sequence[float], ids: Iterable[int]) -> float:
    """Sum costs over ids in ascending id order so the float result is stable."""
    return math.fsum(costs[v] for v in sorted(ids))


def as_instance(source) -> Instance:
    """Accept either a core Instance or anything with a `to_instance()` method."""
    if isinstance(source, Instance):
        return source
    if hasattr(source, "to_instance"):
        return source.to_instance()
    raise ContractError(f"cannot interpret {type(source).__name__} as an instance")


class _Round:
    """Query counter for one open adaptive round."""

    def __init__(self, index: int):
        self.index = index
        self.queries = 0

    def add(self, n: int) -> None:
        self.queries += int(n)


@dataclass
class QueryLedger:
    """
    Counts oracle queries and adaptive rounds.

    Queries are recorded into the currently open round. Entering `round()`
    while a round is already open joins that round, which is how several
    estimator calls share one adaptive round.
    """

    per_round_queries: List[int] = field(default_factory=list)
    _open: Optional[_Round] = field(default=None, repr=False)

    @property
    def rounds(self) -> int:
        return len(self.per_round_queries)

    @property
    def queries(self) -> int:
        return sum(self.per_round_queries)

    @property
    def in_round(self) -> bool:
        return self._open is not None

    @contextmanager
    def round(self) -> Iterator[_Round]:
        if self._open is not None:
            yield self._open
            return
        current = _Round(len(self.per_round_queries))
        self._open = current
        try:
            yield current
        finally:
            self._open = None
            self.per_round_queries.append(current.queries)

    def record(self, n: int = 1) -> None:
        if self._open is None:
            raise LedgerMisuseError("oracle query issued with no open adaptive round")
        self._open.add(n)


def ledger_snapshot(ledger: QueryLedger) -> Tuple[int, int]:
    """Return the current (rounds, queries) counters."""
    return ledger.rounds, ledger.queries


def _check_ids(size: int, ids: Iterable[int]) -> IdSet:
    out = frozenset(int(v) for v in ids)
    for v in out:
        if v < 0 or v >= size:
            raise InputError(f"element id {v} outside [0, {size})")
    return out


def truncated_eval(f: SetFunctionOracle, k: int, S: Iterable[int], ledger: QueryLedger) -> int:
    """Return min(f(S), k), recording one query in the open round."""
    if k < 0:
        raise ContractError(f"demand k must be >= 0, got {k}")
    S = _check_ids(f.size, S)
    ledger.record(1)
    return min(f.evaluate(S), k)


def marginal(g: TruncatedOracle, B: Iterable[int], v: int, ledger: QueryLedger) -> int:
    """Return g(B ∪ {v}) - g(B). Zero, with no query, when v is already in B."""
    B = _check_ids(g.size, B)
    if v in B:
        return 0
    ledger.record(2)
    return g.evaluate(B | {v}) - g.evaluate(B)


def _chunks(n: int, size: int = CHUNK_ROWS) -> List[Tuple[int, int]]:
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def map_chunks(fn, n: int, workers: int = 1, size: int = CHUNK_ROWS) -> list:
    """
    Apply fn(lo, hi) to fixed-size row chunks of [0, n), optionally on a
    thread pool, and return the results in chunk order.
    """
    spans = _chunks(n, size)
    if workers <= 1 or len(spans) <= 1:
        return [fn(lo, hi) for lo, hi in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda span: fn(*span), spans))


@dataclass
class MarginalScan:
    """Result of one batched marginal evaluation: g(B) and g_B(v) per candidate."""

    base: IdSet
    base_value: int
    gains: Dict[int, int]


def scan_marginals(
    g: TruncatedOracle,
    B: Iterable[int],
    C: Iterable[int],
    ledger: QueryLedger,
    workers: int = 1,
) -> MarginalScan:
    """
    Evaluate g_B(v) for every candidate in one adaptive round.

    g(B) is queried once per batch and shared by all candidates; each
    candidate outside B costs one query for g(B ∪ {v}).
    """
    B = _check_ids(g.size, B)
    candidates = sorted(_check_ids(g.size, C))
    if not candidates:
        raise ContractError("batch_marginals needs a nonempty candidate set")

    outside = [v for v in candidates if v not in B]
    with ledger.round() as current:
        f_base = g.inner.evaluate(B)
        base_value = min(f_base, g.k)

        def work(lo: int, hi: int) -> np.ndarray:
            return g.inner.singleton_gains(B, outside[lo:hi])

        parts = map_chunks(work, len(outside), workers) if outside else []
        current.add(1 + len(outside))

    gains = dict.fromkeys(candidates, 0)
    if outside:
        raw = np.concatenate(parts)
        values = np.minimum(f_base + raw, g.k) - base_value
        for v, gain in zip(outside, values.tolist()):
            gains[v] = int(gain)
    return MarginalScan(base=B, base_value=base_value, gains=gains)


def batch_marginals(
    g: TruncatedOracle,
    B: Iterable[int],
    C: Iterable[int],
    ledger: QueryLedger,
    workers: int = 1,
) -> Dict[int, int]:
    """Return {v: g_B(v)} for every v in C using exactly one adaptive round."""
    return scan_marginals(g, B, C, ledger, workers).gains


def batch_values(
    g: TruncatedOracle,
    sets: Sequence[Iterable[int]],
    ledger: QueryLedger,
    workers: int = 1,
) -> List[int]:
    """Return g(S) for every set in one adaptive round, one query per set."""
    if not sets:
        raise ContractError("batch_values needs at least one set")
    rows = [_check_ids(g.size, S) for S in sets]
    masks = np.zeros((len(rows), g.size), dtype=bool)
    for i, S in enumerate(rows):
        if S:
            masks[i, list(S)] = True

    with ledger.round() as current:
        f_empty = g.inner.evaluate(frozenset())

        def work(lo: int, hi: int) -> np.ndarray:
            return g.inner.gains_many(frozenset(), masks[lo:hi])

        raw = np.concatenate(map_chunks(work, len(rows), workers))
        current.add(len(rows))
    return np.minimum(f_empty + raw, g.k).astype(int).tolist()


def keyed_rng(seed: int, *key: int) -> np.random.Generator:
    """
    Return a counter-based generator whose stream is fixed by (seed, *key).

    Streams for different keys are independent, so the draws a computation
    sees never depend on how work was scheduled.
    """
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) & 0xFFFFFFFFFFFFFFFF for k in key]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def harmonic(n: int) -> float:
    """Return H(n) = 1 + 1/2 + ... + 1/n (H(0) = 0)."""
    return math.fsum(1.0 / i for i in range(1, int(n) + 1))
