"""Shared fixtures: the three-element reference instance and small random instances."""

import numpy as np
import pytest

from src.config import SolverConfig
from src.instances import CoverageInstance, GeneratorConfig, gen_random_coverage


def make_ex_i1(k: int = 3) -> CoverageInstance:
    """e0 covers {1,2}, e1 covers {2,3}, e2 covers {1,2,3}; costs 1, 1, 2.5."""
    return CoverageInstance(
        m=3,
        universe_size=4,
        covers=((1, 2), (2, 3), (1, 2, 3)),
        costs=(1.0, 1.0, 2.5),
        k=k,
        name="ex-i1",
    )


def make_random(seed: int, m: int = 10, universe_size: int = 20, density: float = 0.3,
                cost_high: float = 10.0, k_fraction: float = 0.8) -> CoverageInstance:
    return gen_random_coverage(GeneratorConfig(
        m=m,
        universe_size=universe_size,
        density=density,
        cost_low=1.0,
        cost_high=cost_high,
        k_fraction=k_fraction,
        seed=seed,
    ))


def all_subsets(m: int) -> np.ndarray:
    """Membership matrix of every subset of m elements; row i is the bitmask i."""
    codes = np.arange(1 << m, dtype=np.int64)
    return (codes[:, None] >> np.arange(m, dtype=np.int64)) & 1 == 1


@pytest.fixture
def ex_i1() -> CoverageInstance:
    return make_ex_i1()


@pytest.fixture
def random_instances():
    return [make_random(seed) for seed in range(8)]


@pytest.fixture
def fast_config() -> SolverConfig:
    """Small sample cap so parallel solves stay quick."""
    return SolverConfig(sample_cap=512)
