"""
Coverage Instances

Weighted coverage is the concrete oracle: each element covers a sorted list
of universe items, and f(S) is the total weight of items covered by at least
one element of S. It is integer-valued, monotone and submodular, and cheap
enough to brute-force on small instances.

This module also holds the seeded random generator and the JSON instance
file format.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import IdSet, Instance, SetFunctionOracle, keyed_rng
from .errors import ConfigError, InfeasibleDemandError, InputError, InstanceFormatError

logger = logging.getLogger(__name__)

DOCUMENT_KEYS = ("m", "universe_size", "k", "item_weights", "elements")
ELEMENT_KEYS = ("id", "cost", "covers")


class CoverageOracle(SetFunctionOracle):
    """Vectorized weighted coverage function over a dense cover matrix."""

    def __init__(self, covers: Sequence[Sequence[int]], universe_size: int,
                 item_weights: Optional[Sequence[int]] = None):
        self._size = len(covers)
        self.universe_size = universe_size
        matrix = np.zeros((self._size, universe_size), dtype=np.float32)
        for v, items in enumerate(covers):
            if items:
                matrix[v, list(items)] = 1.0
        self._matrix = matrix
        self._covered = matrix > 0
        if item_weights is None:
            self._weights = np.ones(universe_size, dtype=np.int64)
        else:
            self._weights = np.asarray(item_weights, dtype=np.int64)

    @property
    def size(self) -> int:
        return self._size

    def _union(self, ids: Iterable[int]) -> np.ndarray:
        ids = list(ids)
        if not ids:
            return np.zeros(self.universe_size, dtype=bool)
        return self._covered[ids].any(axis=0)

    def evaluate(self, ids: Iterable[int]) -> int:
        return int(self._weights[self._union(ids)].sum())

    def gains_many(self, base: IdSet, masks: np.ndarray) -> np.ndarray:
        if masks.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        uncovered = ~self._union(base)
        cols = np.flatnonzero(masks.any(axis=0))
        if cols.size == 0:
            return np.zeros(masks.shape[0], dtype=np.int64)
        hits = (masks[:, cols].astype(np.float32) @ self._matrix[cols]) > 0
        return (hits & uncovered).astype(np.int64) @ self._weights

    def singleton_gains(self, base: IdSet, candidates: Sequence[int]) -> np.ndarray:
        if len(candidates) == 0:
            return np.zeros(0, dtype=np.int64)
        uncovered = ~self._union(base)
        fresh = self._covered[list(candidates)] & uncovered
        return fresh.astype(np.int64) @ self._weights


@dataclass(frozen=True)
class CoverageInstance:
    """
    A weighted coverage MinSMC instance.

    Element v costs costs[v] and covers the sorted items covers[v]. Item
    weights default to 1 when item_weights is None.
    """

    m: int
    universe_size: int
    covers: Tuple[Tuple[int, ...], ...]
    costs: Tuple[float, ...]
    k: int
    item_weights: Optional[Tuple[int, ...]] = None
    name: str = field(default="instance", compare=False)

    def __post_init__(self):
        if self.m != len(self.covers) or self.m != len(self.costs):
            raise InputError(
                f"m={self.m} but {len(self.covers)} cover lists and {len(self.costs)} costs"
            )
        if self.universe_size < 0:
            raise InputError(f"universe_size must be >= 0, got {self.universe_size}")
        for v, items in enumerate(self.covers):
            if list(items) != sorted(set(items)):
                raise InputError(f"covers of element {v} must be sorted and unique")
            if items and (items[0] < 0 or items[-1] >= self.universe_size):
                raise InputError(f"element {v} covers an item outside [0, {self.universe_size})")
        for v, c in enumerate(self.costs):
            if not c > 0:
                raise InputError(f"element {v} has nonpositive cost {c}")
        if self.item_weights is not None:
            if len(self.item_weights) != self.universe_size:
                raise InputError("item_weights must have one entry per universe item")
            if any(w < 1 for w in self.item_weights):
                raise InputError("item weights must be positive integers")
        if self.k < 0:
            raise InputError(f"demand k must be >= 0, got {self.k}")

    @cached_property
    def oracle(self) -> CoverageOracle:
        return CoverageOracle(self.covers, self.universe_size, self.item_weights)

    def total_value(self) -> int:
        """f(V): total weight of the items covered by some element."""
        return self.oracle.evaluate(range(self.m))

    def to_instance(self) -> Instance:
        return Instance(oracle=self.oracle, costs=self.costs, k=self.k, name=self.name)


def coverage_eval(inst: CoverageInstance, S: Iterable[int]) -> int:
    """Return the total weight of items covered by the elements of S."""
    ids = [int(v) for v in S]
    for v in ids:
        if v < 0 or v >= inst.m:
            raise InputError(f"element id {v} outside [0, {inst.m})")
    return inst.oracle.evaluate(ids)


@dataclass(frozen=True)
class GeneratorConfig:
    """Settings for random coverage instances; the seed fixes every draw."""

    m: int
    universe_size: int
    density: float
    cost_low: float = 1.0
    cost_high: float = 1.0
    k_fraction: float = 1.0
    seed: int = 0
    weight_high: int = 1

    def validate(self) -> None:
        if self.m <= 0 or self.universe_size <= 0:
            raise ConfigError("generator needs m > 0 and universe_size > 0")
        if not 0 < self.density <= 1:
            raise ConfigError(f"density must be in (0, 1], got {self.density}")
        if not 0 < self.cost_low <= self.cost_high:
            raise ConfigError("costs need 0 < cost_low <= cost_high")
        if not 0 < self.k_fraction <= 1:
            raise ConfigError(f"k_fraction must be in (0, 1], got {self.k_fraction}")
        if self.weight_high < 1:
            raise ConfigError("weight_high must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorConfig":
        """Build and validate a config from a JSON object."""
        if not isinstance(data, dict):
            raise ConfigError("generator config must be a JSON object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown generator fields: {sorted(unknown)}")
        missing = [name for name in ("m", "universe_size", "density") if name not in data]
        if missing:
            raise ConfigError(f"generator config is missing {missing}")
        cfg = cls(**data)
        try:
            cfg.validate()
        except TypeError:
            raise ConfigError(f"generator settings must be numbers, got {data}")
        return cfg


def gen_random_coverage(cfg: GeneratorConfig, name: Optional[str] = None) -> CoverageInstance:
    """
    Generate a random weighted coverage instance.

    Each (element, item) pair is covered with probability `density`; items
    nobody covers are handed to one random element. Costs are log-uniform
    in [cost_low, cost_high] and k = max(1, floor(k_fraction * f(V))).
    """
    cfg.validate()
    rng = keyed_rng(cfg.seed, 0x636F76)

    covered = rng.random((cfg.m, cfg.universe_size)) < cfg.density
    orphans = np.flatnonzero(~covered.any(axis=0))
    if orphans.size:
        owners = rng.integers(0, cfg.m, size=orphans.size)
        covered[owners, orphans] = True

    if cfg.cost_low == cfg.cost_high:
        costs = np.full(cfg.m, float(cfg.cost_low))
    else:
        logs = rng.uniform(math.log(cfg.cost_low), math.log(cfg.cost_high), size=cfg.m)
        costs = np.clip(np.exp(logs), cfg.cost_low, cfg.cost_high)

    weights = None
    if cfg.weight_high > 1:
        weights = tuple(int(w) for w in rng.integers(1, cfg.weight_high + 1, size=cfg.universe_size))

    covers = tuple(tuple(int(i) for i in np.flatnonzero(row)) for row in covered)
    total = sum(weights) if weights is not None else cfg.universe_size
    k = max(1, int(math.floor(cfg.k_fraction * total)))

    return CoverageInstance(
        m=cfg.m,
        universe_size=cfg.universe_size,
        covers=covers,
        costs=tuple(float(c) for c in costs),
        k=k,
        item_weights=weights,
        name=name or f"gen-m{cfg.m}-u{cfg.universe_size}-s{cfg.seed}",
    )


def serialize_instance(inst: CoverageInstance) -> bytes:
    """Encode an instance as UTF-8 JSON with keys in schema order."""
    doc = {"m": inst.m, "universe_size": inst.universe_size, "k": inst.k}
    if inst.item_weights is not None:
        doc["item_weights"] = list(inst.item_weights)
    doc["elements"] = [
        {"id": e.id, "cost": e.cost, "covers": list(inst.covers[e.id])}
        for e in inst.to_instance().elements
    ]
    return (json.dumps(doc) + "\n").encode("utf-8")


def _require_int(value, where: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(f"schema violation: {where} must be an integer")
    if minimum is not None and value < minimum:
        raise InstanceFormatError(f"schema violation: {where} must be >= {minimum}")
    return value


def parse_instance(data: Union[bytes, str], name: str = "instance") -> CoverageInstance:
    """
    Decode an instance document.

    Raises:
        InstanceFormatError: code "schema" for structural problems, code
            "cost" for nonpositive costs
        InfeasibleDemandError: when k exceeds f(V)
    """
    try:
        text = data.decode("utf-8") if isinstance(data, bytes) else data
        doc = json.loads(text)
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InstanceFormatError(f"schema violation: not a UTF-8 JSON document ({e})")

    if not isinstance(doc, dict):
        raise InstanceFormatError("schema violation: document must be a JSON object")
    unknown = set(doc) - set(DOCUMENT_KEYS)
    if unknown:
        raise InstanceFormatError(f"schema violation: unknown fields {sorted(unknown)}")
    for key in ("m", "universe_size", "k", "elements"):
        if key not in doc:
            raise InstanceFormatError(f"schema violation: missing field '{key}'")

    m = _require_int(doc["m"], "m", 0)
    universe = _require_int(doc["universe_size"], "universe_size", 0)
    k = _require_int(doc["k"], "k", 0)

    weights = doc.get("item_weights")
    if weights is not None:
        if not isinstance(weights, list) or len(weights) != universe:
            raise InstanceFormatError("schema violation: item_weights must list one weight per item")
        weights = tuple(_require_int(w, "item weight", 1) for w in weights)

    elements = doc["elements"]
    if not isinstance(elements, list) or len(elements) != m:
        raise InstanceFormatError(f"schema violation: expected {m} elements")

    covers: List[Tuple[int, ...]] = []
    costs: List[float] = []
    for position, element in enumerate(elements):
        if not isinstance(element, dict):
            raise InstanceFormatError("schema violation: elements must be objects")
        extra = set(element) - set(ELEMENT_KEYS)
        if extra:
            raise InstanceFormatError(f"schema violation: unknown element fields {sorted(extra)}")
        if set(element) != set(ELEMENT_KEYS):
            raise InstanceFormatError(f"schema violation: element {position} needs id, cost, covers")
        if _require_int(element["id"], "element id") != position:
            raise InstanceFormatError("schema violation: elements must be sorted by dense id")
        cost = element["cost"]
        if isinstance(cost, bool) or not isinstance(cost, (int, float)):
            raise InstanceFormatError(f"schema violation: cost of element {position} must be a number")
        if not cost > 0:
            raise InstanceFormatError(f"nonpositive cost {cost} for element {position}", code="cost")
        items = element["covers"]
        if not isinstance(items, list):
            raise InstanceFormatError(f"schema violation: covers of element {position} must be a list")
        items = [_require_int(i, "covered item", 0) for i in items]
        if items != sorted(set(items)) or (items and items[-1] >= universe):
            raise InstanceFormatError(
                f"schema violation: covers of element {position} must be sorted, unique and < {universe}"
            )
        covers.append(tuple(items))
        costs.append(float(cost))

    inst = CoverageInstance(
        m=m, universe_size=universe, covers=tuple(covers), costs=tuple(costs),
        k=k, item_weights=weights, name=name,
    )
    available = inst.total_value()
    if k > available:
        raise InfeasibleDemandError(k, available)
    return inst


def load_instance(path: Union[str, Path]) -> CoverageInstance:
    """Read an instance file; OSError propagates for the CLI to report."""
    path = Path(path)
    return parse_instance(path.read_bytes(), name=path.stem)


def save_instance(inst: CoverageInstance, path: Union[str, Path]) -> None:
    Path(path).write_bytes(serialize_instance(inst))
