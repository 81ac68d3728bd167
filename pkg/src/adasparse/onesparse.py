"""Adaptive recovery of a single dominant coordinate.

Two signed measurements locate a spike among n' candidates when it dwarfs the
rest; bucketing the candidates first turns the same pair of measurements into
a shrinking step that boosts the spike's signal-to-noise ratio.  Iterating
with a doubly-exponential bucket schedule isolates the spike in O(log log n)
rounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import hashing
from .constants import DEFAULTS, Constants, split_seed
from .core import (
    LinearQuery,
    MeasurementOracle,
    NoSignalError,
    OutOfRangeError,
    QueryBatch,
    RecoveryFailure,
)

# Relative threshold below which the denominator measurement counts as zero.
_A_GUARD = 1e-12

# Never use more buckets than needed to make collisions unlikely, and keep
# bucket labels well inside exact float64 integer range.
_MAX_BUCKETS = 2**30


@dataclass(frozen=True)
class ShrinkParams:
    """One shrink step: noise-reduction factor B, failure budget delta."""

    noise_factor: float  # B
    fail_prob: float  # delta
    buckets: int  # D

    def __post_init__(self):
        if self.buckets < 2:
            raise ValueError("bucket count must be >= 2")


def shrink_params(
    noise_factor: float, fail_prob: float, constants: Constants = DEFAULTS
) -> ShrinkParams:
    if noise_factor < 2 or not 0 < fail_prob < 1:
        raise ValueError("need B >= 2 and delta in (0, 1)")
    buckets = max(
        2,
        math.ceil(constants.shrink_scale * 4 * noise_factor**2 / fail_prob),
    )
    return ShrinkParams(noise_factor, fail_prob, min(buckets, _MAX_BUCKETS))


def one_sparse_schedule(
    n: int, constants: Constants = DEFAULTS
) -> list[ShrinkParams]:
    """Shrink schedule B_0=2, B_{i+1}=B_i^{3/2}, delta_i=2^-i/4, up to B >= n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    params = []
    b, delta = 2.0, 0.25
    while True:
        params.append(shrink_params(b, delta, constants))
        if b >= n:
            return params
        b, delta = b**1.5, delta / 2


def schedule_length_bound(n: int) -> int:
    """Explicit cap on schedule length: ceil(log_{3/2} log2 n) + 2."""
    if n <= 2:
        return 2
    return math.ceil(math.log(math.log2(n)) / math.log(1.5)) + 2


def _sign_pair_queries(
    indices: np.ndarray,
    weights: np.ndarray | None,
    buckets: int,
    seed: int,
) -> tuple[LinearQuery, LinearQuery, np.ndarray, int]:
    """Build the (a, b) measurement pair for one shrink step.

    Signs are drawn per candidate position and per bucket; the b query tags
    each coordinate with (D + bucket) so b/a decodes the spike's bucket.
    The bucket count is capped at 4*m^2: beyond that collisions are already
    unlikely and larger tags only cost float precision.
    """
    m = indices.size
    d = min(buckets, max(2, 4 * m * m))
    h = hashing.new_kwise(2, m, d, split_seed(seed, "bucket"))
    s1 = hashing.new_sign(2, m, split_seed(seed, "sign1"))
    s2 = hashing.new_sign(2, d, split_seed(seed, "sign2"))
    pos = np.arange(m)
    bucket_of = h.eval_many(pos)
    coef = (s1.eval_many(pos) * s2.eval_many(bucket_of)).astype(np.float64)
    if weights is not None:
        coef = coef * weights
    q_a = LinearQuery(indices, coef)
    q_b = LinearQuery(indices, coef * (d + bucket_of))
    return q_a, q_b, bucket_of, d


def _decode_bucket(a: float, b: float, coef_norm: float, buckets: int) -> int:
    if abs(a) <= _A_GUARD * max(coef_norm, 1e-300):
        raise NoSignalError("denominator measurement is numerically zero")
    p_star = round(b / a) - buckets
    if not 0 <= p_star < buckets:
        raise OutOfRangeError(f"decoded bucket {p_star} outside [0, {buckets})")
    return p_star


def locate_pair(
    oracle: MeasurementOracle,
    active: Sequence[int],
    delta: float,
    sign_seed: int,
) -> int:
    """Locate a dominant coordinate within `active` using two measurements.

    Candidates are relabeled to positions 0..n'-1 so the decoded offset is
    independent of the ambient dimension.  delta is the caller's failure
    budget; it does not change the measurements, only documents the contract.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    indices = np.asarray(sorted(active), dtype=np.int64)
    m = indices.size
    if m == 0:
        raise ValueError("active set must be nonempty")
    s = hashing.new_sign(2, m, split_seed(sign_seed, "locate"))
    pos = np.arange(m)
    coef = s.eval_many(pos).astype(np.float64)
    q_a = LinearQuery(indices, coef)
    q_b = LinearQuery(indices, coef * (m + pos))
    a, b = oracle.measure(QueryBatch((q_a, q_b)))
    if abs(a) <= _A_GUARD * math.sqrt(m):
        raise NoSignalError("denominator measurement is numerically zero")
    p_star = round(b / a) - m
    if not 0 <= p_star < m:
        raise OutOfRangeError(f"decoded position {p_star} outside [0, {m})")
    return int(indices[p_star])


def shrink(
    oracle: MeasurementOracle,
    active: Sequence[int],
    params: ShrinkParams,
    seed: int,
) -> np.ndarray:
    """One non-adaptive shrink step: 2 measurements, returns the survivor set."""
    indices = np.asarray(sorted(active), dtype=np.int64)
    if indices.size == 0:
        raise ValueError("active set must be nonempty")
    q_a, q_b, bucket_of, d = _sign_pair_queries(indices, None, params.buckets, seed)
    a, b = oracle.measure(QueryBatch((q_a, q_b)))
    p_star = _decode_bucket(
        float(a), float(b), float(np.linalg.norm(q_a.coefficients)), d
    )
    return indices[bucket_of == p_star]


class OneSparseRun:
    """Stepwise adaptive isolation of one dominant coordinate.

    The run is driven round by round: step_queries() yields the queries for
    the next round (empty once finished) and step_consume() folds the answers
    back in.  Several runs can share rounds by merging their queries into one
    batch; see drive_runs().  Optional per-index weights scale every query
    coefficient, so the run operates on the reweighted signal.
    """

    def __init__(
        self,
        active: Sequence[int],
        seed: int,
        constants: Constants = DEFAULTS,
        weights: np.ndarray | None = None,
    ):
        order = np.argsort(np.asarray(active, dtype=np.int64), kind="stable")
        self.active = np.asarray(active, dtype=np.int64)[order]
        self.weights = None if weights is None else np.asarray(weights, float)[order]
        self.seed = seed
        self.constants = constants
        self.schedule = one_sparse_schedule(max(int(self.active.size), 1), constants)
        self.max_steps = min(
            len(self.schedule), schedule_length_bound(max(self.active.size, 2)) + 2
        )
        self.step = 0
        self.rounds = 0
        self.result: int | None = None
        self.failed = False
        self.finished = False
        self._pending: tuple | None = None

    def _finish(self, result: int | None):
        self.result = result
        self.failed = result is None
        self.finished = True

    def step_queries(self) -> list[LinearQuery]:
        if self.finished:
            return []
        m = self.active.size
        if m == 0:
            self._finish(None)
            return []
        if m == 1:
            self._finish(int(self.active[0]))
            return []
        if m == 2:
            # Cheaper and exact: observe both candidates with singleton queries.
            w = self.weights if self.weights is not None else np.ones(2)
            queries = [
                LinearQuery(self.active[i : i + 1], w[i : i + 1]) for i in range(2)
            ]
            self._pending = ("finish",)
            return queries
        if self.step >= self.max_steps:
            self._finish(None)
            return []
        params = self.schedule[self.step]
        q_a, q_b, bucket_of, d = _sign_pair_queries(
            self.active,
            self.weights,
            params.buckets,
            split_seed(self.seed, "step", self.step),
        )
        self._pending = ("shrink", bucket_of, d, np.linalg.norm(q_a.coefficients))
        return [q_a, q_b]

    def step_consume(self, answers: Sequence[float]) -> None:
        if self._pending is None:
            raise RuntimeError("no queries outstanding")
        kind = self._pending[0]
        self.rounds += 1
        if kind == "finish":
            v0, v1 = answers
            if abs(v0) == 0.0 and abs(v1) == 0.0:
                self._finish(None)
            else:
                self._finish(int(self.active[0 if abs(v0) >= abs(v1) else 1]))
        else:
            _, bucket_of, d, coef_norm = self._pending
            a, b = answers
            try:
                p_star = _decode_bucket(float(a), float(b), float(coef_norm), d)
            except (NoSignalError, OutOfRangeError):
                self._finish(None)
                self._pending = None
                return
            keep = bucket_of == p_star
            self.active = self.active[keep]
            if self.weights is not None:
                self.weights = self.weights[keep]
            self.step += 1
            if self.active.size == 0:
                self._finish(None)
        self._pending = None


MeasureFn = Callable[[Sequence[LinearQuery]], np.ndarray]


def drive_runs(runs: Sequence[OneSparseRun], measure: MeasureFn) -> int:
    """Advance runs in lockstep, one merged batch per adaptive round.

    Returns the number of rounds driven.  measure() receives the concatenated
    query list for the round and must return answers in the same order.
    """
    rounds = 0
    while True:
        live: list[tuple[OneSparseRun, int]] = []
        queries: list[LinearQuery] = []
        for run in runs:
            if run.finished:
                continue
            qs = run.step_queries()
            if qs:
                live.append((run, len(qs)))
                queries.extend(qs)
        if not queries:
            return rounds
        answers = measure(queries)
        rounds += 1
        offset = 0
        for run, count in live:
            run.step_consume(answers[offset : offset + count])
            offset += count


def recover_one_sparse(
    oracle: MeasurementOracle,
    active: Sequence[int],
    seed: int = 0,
    constants: Constants = DEFAULTS,
) -> int:
    """Recover the dominant coordinate within `active` adaptively.

    Raises RecoveryFailure when any iteration fails or the schedule runs out;
    callers treat that as a failed trial.
    """
    run = OneSparseRun(np.asarray(list(active)), seed, constants)
    drive_runs([run], lambda qs: oracle.measure(QueryBatch(tuple(qs))))
    if run.failed or run.result is None:
        raise RecoveryFailure("one-sparse recovery did not isolate a coordinate")
    return run.result
