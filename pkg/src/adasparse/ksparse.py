"""Full adaptive k-sparse recovery via repeated subsampling.

Each level subsamples the residual coordinates at rate ~1/k so single-spike
recovery applies, keeps the k largest direct observations, and recurses on
the remainder with a super-exponentially shrinking sparsity budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import DEFAULTS, Constants, split_seed
from .core import (
    MeasurementOracle,
    Metering,
    QueryBatch,
    RecoveryResult,
)
from .onesparse import OneSparseRun, drive_runs


@dataclass(frozen=True)
class LevelParams:
    index: int
    eps: float
    delta: float
    shrink_fraction: float  # f_i
    sparsity: float  # k_i (may be fractional below 1 at the last level)


@dataclass(frozen=True)
class RoundSchedule:
    """Per-level parameters for the k-sparse recursion.

    The schedule length r is the first level whose previous shrink fraction
    drops below 1/k; this also forces k_r < 1, so the recursion has nothing
    left to recover after r levels.
    """

    k: int
    eps: float
    delta: float
    levels: tuple[LevelParams, ...]

    @property
    def r(self) -> int:
        return len(self.levels)


def _shrink_fraction_exponents(k: int) -> list[int]:
    """Exact exponents e_i with f_i = 2^-e_i, generated until f_{i-1} < 1/k."""
    exponents = [5]  # f_0 = 1/32
    i = 0
    while 2 ** exponents[-1] <= k:
        exponents.append(2 ** (exponents[-1] - 2 * (i + 1)))
        i += 1
    return exponents


def round_schedule(k: int, eps: float, delta: float) -> RoundSchedule:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 < eps <= 1 or not 0 < delta < 1:
        raise ValueError("need eps in (0, 1] and delta in (0, 1)")
    exponents = _shrink_fraction_exponents(k)
    levels = []
    sparsity = float(k)
    for i, e in enumerate(exponents):
        f = math.ldexp(1.0, -e) if e < 1074 else 0.0
        levels.append(
            LevelParams(
                index=i,
                eps=eps / (math.e * 2**i),
                delta=delta / 2 ** (i + 1),
                shrink_fraction=f,
                sparsity=sparsity,
            )
        )
        sparsity *= f
    return RoundSchedule(k, eps, delta, tuple(levels))


def subsample_rate(k: float, constants: Constants = DEFAULTS) -> float:
    """Inclusion probability 1/(4*C^2*k) for isolating one heavy coordinate."""
    return min(1.0, 1.0 / (4.0 * constants.sample_c**2 * max(k, 1.0)))


def _bernoulli_subset(
    active: np.ndarray, p: float, rng: np.random.Generator
) -> np.ndarray:
    """Sample each element of `active` independently with probability p.

    Realized as a binomial draw followed by uniform index picks with a
    collision top-up; equivalent in distribution for our use and O(np) time.
    """
    n = active.size
    if p >= 1.0:
        return active.copy()
    size = rng.binomial(n, p)
    if size == 0:
        return active[:0]
    picks = np.unique(rng.integers(0, n, size=size))
    while picks.size < size:
        extra = rng.integers(0, n, size=size - picks.size)
        picks = np.unique(np.concatenate([picks, extra]))
    return active[picks]


def sample_heavy(
    oracle: MeasurementOracle,
    active: np.ndarray,
    k: int,
    seed: int = 0,
    constants: Constants = DEFAULTS,
) -> int:
    """Subsample `active` at rate ~1/k and recover one spike from the sample.

    Returns the recovered index; verification is the caller's job (a direct
    observation discards junk).  Raises RecoveryFailure on a miss.
    """
    from .core import RecoveryFailure

    active = np.asarray(active, dtype=np.int64)
    rng = np.random.default_rng(split_seed(seed, "subsample"))
    sample = _bernoulli_subset(active, subsample_rate(k, constants), rng)
    if sample.size == 0:
        raise RecoveryFailure("empty subsample")
    run = OneSparseRun(sample, split_seed(seed, "recover"), constants)
    drive_runs([run], lambda qs: oracle.measure(QueryBatch(tuple(qs))))
    if run.result is None:
        raise RecoveryFailure("subsampled recovery failed")
    return run.result


def partial_sample_count(
    k: float, eps: float, f: float, delta: float, constants: Constants = DEFAULTS
) -> int:
    """Number of parallel subsampled recoveries per level."""
    return max(
        1,
        math.ceil(
            constants.partial_m_scale * (k / eps) * math.log(1.0 / (f * delta))
        ),
    )


def recover_partial(
    oracle: MeasurementOracle,
    active: np.ndarray,
    k: int,
    eps: float,
    f: float,
    delta: float,
    seed: int = 0,
    constants: Constants = DEFAULTS,
) -> tuple[np.ndarray, dict[int, float]]:
    """One recursion level: subsampled recoveries, then keep the top k.

    Runs the subsampled single-spike recoveries in parallel, sharing one
    query batch per adaptive round, then observes all candidates directly and
    returns the k with largest observed magnitude together with their values.
    """
    if not 0 < f < 1 or eps <= 0 or not 0 < delta < 1:
        raise ValueError("need f in (0,1), eps > 0, delta in (0,1)")
    active = np.asarray(active, dtype=np.int64)
    if active.size == 0 or k < 1:
        return active[:0], {}
    m = partial_sample_count(k, eps, f, delta, constants)
    sparsity = max(1, math.ceil(k / eps))
    rate = subsample_rate(sparsity, constants)
    runs = []
    for t in range(m):
        rng = np.random.default_rng(split_seed(seed, "subsample", t))
        sample = _bernoulli_subset(active, rate, rng)
        if sample.size == 0:
            continue
        runs.append(OneSparseRun(sample, split_seed(seed, "recover", t), constants))
    drive_runs(runs, lambda qs: oracle.measure(QueryBatch(tuple(qs))))
    candidates = sorted({run.result for run in runs if run.result is not None})
    if not candidates:
        return active[:0], {}
    observed = oracle.observe_direct(candidates)
    ranked = sorted(observed, key=lambda i: (-abs(observed[i]), i))
    chosen = np.array(sorted(ranked[:k]), dtype=np.int64)
    return chosen, {int(i): observed[int(i)] for i in chosen}


def recover_k_sparse(
    oracle: MeasurementOracle,
    k: int,
    eps: float,
    delta: float,
    seed: int = 0,
    constants: Constants = DEFAULTS,
) -> RecoveryResult:
    """Adaptive k-sparse recovery: union of per-level supports, then observe.

    The output support has size at most 2k and the estimate is the direct
    observation of the signal on it.
    """
    n = oracle.n
    if not 1 <= k <= n:
        raise ValueError("k must lie in [1, n]")
    schedule = round_schedule(k, eps, delta)
    residual = np.arange(n, dtype=np.int64)
    support: list[int] = []
    for level in schedule.levels:
        if level.sparsity < 1 or residual.size == 0:
            break
        k_level = int(level.sparsity)
        chosen, _ = recover_partial(
            oracle,
            residual,
            k_level,
            level.eps,
            level.shrink_fraction,
            level.delta,
            seed=split_seed(seed, "level", level.index),
            constants=constants,
        )
        support.extend(int(i) for i in chosen)
        if chosen.size:
            residual = np.setdiff1d(residual, chosen, assume_unique=True)
    estimate = oracle.observe_direct(support) if support else {}
    return RecoveryResult(
        support=frozenset(estimate),
        estimate=estimate,
        metering=oracle.metering(),
    )
