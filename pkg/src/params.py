"""
Solver Parameters

Derives every constant the parallel algorithm needs from an instance and ε:
the ratio and gain ceilings β and τ, the loop bounds T and ℓ, the NIS
constants ε̄, r, δ and the Mean sample count m′, plus the bucket windows
indexed by (t, t').
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Tuple

from .config import DEFAULT_SAMPLE_CAP
from .core import Instance, QueryLedger, scan_marginals
from .errors import ConfigError, ContractError

logger = logging.getLogger(__name__)

EPSILON_MAX = 0.2

# Slack when ceiling a logarithm, so exact powers do not round up by one ulp.
_CEIL_SLACK = 1e-12


def _ceil(x: float) -> int:
    return math.ceil(x - _CEIL_SLACK)


def _log(x: float, base: float) -> float:
    return math.log(x) / math.log(base)


def check_epsilon(epsilon: float) -> None:
    if not 0 < epsilon < EPSILON_MAX:
        raise ConfigError(f"epsilon must lie in (0, {EPSILON_MAX}), got {epsilon}")


@dataclass(frozen=True)
class SolverParams:
    """All derived constants of one parallel solve."""

    epsilon: float
    m: int
    k: int
    c_max: float
    c_min: float
    beta: float
    tau: int
    T: int
    ell: int
    eps_bar: float
    r: int
    delta: float
    m_prime: int
    samples: int

    @property
    def m_prime_capped(self) -> bool:
        return self.samples < self.m_prime

    @property
    def guess_count(self) -> int:
        """Number of size guesses i = 0..⌈log_{1+ε̄} m⌉."""
        return max(0, _ceil(_log(self.m, 1.0 + self.eps_bar))) + 1

    def round_bound(self, preprocessing_rounds: int = 2) -> int:
        """Upper bound 2 + T_pre + T·ℓ·(r + 2) on the rounds of one solve."""
        return 2 + preprocessing_rounds + self.T * self.ell * (self.r + 2)

    def bucket(self, t: int, t_prime: int) -> "BucketSpec":
        return BucketSpec.build(self, t, t_prime)


@dataclass(frozen=True)
class BucketSpec:
    """
    Geometric windows for bucket (t, t'): ratios in [ratio_lo, ratio_hi) and
    gains in [gain_lo, gain_hi). The top of a window is closed for t = 1
    (respectively t' = 1), so every element sits in exactly one bucket.
    """

    t: int
    t_prime: int
    ratio_lo: float
    ratio_hi: float
    gain_lo: float
    gain_hi: float

    @classmethod
    def build(cls, params: SolverParams, t: int, t_prime: int) -> "BucketSpec":
        keep = 1.0 - params.epsilon
        return cls(
            t=t,
            t_prime=t_prime,
            ratio_lo=keep ** t * params.beta,
            ratio_hi=keep ** (t - 1) * params.beta,
            gain_lo=keep ** t_prime * params.tau,
            gain_hi=keep ** (t_prime - 1) * params.tau,
        )

    def contains(self, gain: int, cost: float) -> bool:
        if gain <= 0:
            return False
        ratio = gain / cost
        if ratio < self.ratio_lo or ratio > self.ratio_hi:
            return False
        if ratio == self.ratio_hi and self.t > 1:
            return False
        if gain < self.gain_lo or gain > self.gain_hi:
            return False
        if gain == self.gain_hi and self.t_prime > 1:
            return False
        return True


def param_formulas(
    m: int,
    k: int,
    c_max: float,
    c_min: float,
    epsilon: float,
    beta: float = 1.0,
    tau: int = 1,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
) -> SolverParams:
    """
    Evaluate the parameter formulas without validating ε against the solver
    range; `derive_params` is the checked entry point.
    """
    if not 0 < epsilon < 1:
        raise ConfigError(f"epsilon must lie in (0, 1), got {epsilon}")
    if k < 1 or m < 1:
        raise ContractError(f"parameters need k >= 1 and m >= 1, got k={k}, m={m}")

    shrink = 1.0 / (1.0 - epsilon)
    T = max(1, _ceil(_log(k * c_max / c_min, shrink)))
    ell = max(1, _ceil(_log(k, shrink)))
    eps_bar = (1.0 - 1.0 / (2 * T * ell)) * epsilon / 3.0
    r = max(1, _ceil(_log(2 * m * T * ell, 1.0 / (1.0 - eps_bar)) / epsilon))
    delta = epsilon / (2 * r * k * T * T * ell)
    # natural log: the sample bound comes from a Chernoff argument in base e
    m_prime = 8 * _ceil(math.log(2.0 / delta) / eps_bar ** 2)
    samples = min(m_prime, sample_cap)

    logger.debug(
        "params: T=log_{1/(1-eps)}(k*cmax/cmin)=%d, ell=log_{1/(1-eps)}(k)=%d, "
        "r=log_{1/(1-eps_bar)}(2mT*ell)/eps=%d, m'=8*ceil(ln(2/delta)/eps_bar^2)=%d",
        T, ell, r, m_prime,
    )
    if samples < m_prime:
        logger.warning("m' = %d capped at %d samples per estimate", m_prime, samples)

    return SolverParams(
        epsilon=epsilon, m=m, k=k, c_max=c_max, c_min=c_min, beta=beta, tau=int(tau),
        T=T, ell=ell, eps_bar=eps_bar, r=r, delta=delta, m_prime=m_prime, samples=samples,
    )


def singleton_scan(inst: Instance, ledger: QueryLedger, workers: int = 1) -> Tuple[int, Dict[int, int]]:
    """Evaluate g(∅) and every g_∅(v) over the active ground set in one round."""
    scan = scan_marginals(inst.truncated(), frozenset(), inst.ground, ledger, workers)
    return scan.base_value, scan.gains


def params_from_singletons(
    inst: Instance, gains: Dict[int, int], epsilon: float, sample_cap: int = DEFAULT_SAMPLE_CAP
) -> SolverParams:
    check_epsilon(epsilon)
    if inst.k < 1:
        raise ContractError(f"parallel solve needs k >= 1, got {inst.k}")
    costs = [inst.costs[v] for v in inst.ground]
    beta = max(gains[v] / inst.costs[v] for v in inst.ground)
    tau = max(gains.values())
    return param_formulas(
        m=inst.m, k=inst.k, c_max=max(costs), c_min=min(costs), epsilon=epsilon,
        beta=beta, tau=tau, sample_cap=sample_cap,
    )


def derive_params(
    inst: Instance,
    epsilon: float,
    ledger: QueryLedger,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
    workers: int = 1,
) -> SolverParams:
    """
    Derive SolverParams for an instance, spending one adaptive round on the
    singleton values that fix β and τ.
    """
    check_epsilon(epsilon)
    if inst.k < 1:
        raise ContractError(f"parallel solve needs k >= 1, got {inst.k}")
    _, gains = singleton_scan(inst, ledger, workers)
    return params_from_singletons(inst, gains, epsilon, sample_cap)


def _level(x: float, top: float, keep: float, limit: int) -> int:
    """
    Smallest n in [1, limit] with x in [keep^n·top, keep^(n-1)·top), top closed
    for n = 1; 0 when x lies in no such window.
    """
    if x <= 0 or x > top:
        return 0
    guess = int(math.log(top / x) / -math.log(keep)) + 1
    for n in range(max(1, guess - 1), min(limit, guess + 1) + 1):
        lo = keep ** n * top
        hi = keep ** (n - 1) * top
        if lo <= x < hi or (n == 1 and x == hi):
            return n
    return 0


def bucket_index(params: SolverParams, gain: int, cost: float) -> Tuple[int, int]:
    """
    The (t, t') bucket an element with this gain and cost belongs to, or
    (0, 0) when it falls outside every window. Agrees with BucketSpec.contains.
    """
    keep = 1.0 - params.epsilon
    t = _level(gain / cost, params.beta, keep, params.T) if gain > 0 else 0
    t_prime = _level(float(gain), float(params.tau), keep, params.ell) if t else 0
    if not t or not t_prime:
        return 0, 0
    return t, t_prime
