"""Signals, linear queries, and the metered measurement oracle.

The oracle is the only object that holds the hidden signal; recovery code
sees it exclusively through measure() and observe_direct(), both of which
update the metering counters.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class NoSignalError(RuntimeError):
    """The locating ratio b/a is undefined because a is (numerically) zero."""


class OutOfRangeError(RuntimeError):
    """A decoded position or bucket landed outside the valid range."""


class RecoveryFailure(RuntimeError):
    """An adaptive recovery run failed; callers treat this as a failed trial."""


@dataclass(frozen=True)
class Signal:
    """A fixed real vector of dimension n >= 1."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("signal must be a nonempty 1-d vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("signal entries must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class LinearQuery:
    """A sparse coefficient vector; measuring it yields <coefficients, x>."""

    indices: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        coef = np.asarray(self.coefficients, dtype=np.float64)
        if idx.shape != coef.shape or idx.ndim != 1:
            raise ValueError("indices and coefficients must be aligned 1-d arrays")
        if idx.size and np.unique(idx).size != idx.size:
            raise ValueError("query indices must be unique")
        if not np.all(np.isfinite(coef)):
            raise ValueError("query coefficients must be finite")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coefficients", coef)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[int, float]]) -> "LinearQuery":
        pairs = list(terms)
        idx = np.array([i for i, _ in pairs], dtype=np.int64)
        coef = np.array([c for _, c in pairs], dtype=np.float64)
        return cls(idx, coef)

    def __len__(self) -> int:
        return self.indices.size


@dataclass(frozen=True)
class QueryBatch:
    """All queries submitted in one adaptive round."""

    queries: tuple[LinearQuery, ...]

    def __post_init__(self):
        queries = tuple(self.queries)
        if not queries:
            raise ValueError("a batch must contain at least one query")
        object.__setattr__(self, "queries", queries)

    def __len__(self) -> int:
        return len(self.queries)


@dataclass(frozen=True)
class Metering:
    measurements: int
    rounds: int
    direct_observations: int


class MeasurementOracle:
    """Answers query batches against a hidden signal and meters the cost.

    Counters are monotone and reset only by constructing a new oracle: one
    oracle corresponds to one recovery episode.  There is deliberately no
    accessor for the underlying signal.
    """

    def __init__(self, signal: Signal, record_batches: bool = False):
        self._values = signal.values.copy()
        self.measurements_used = 0
        self.rounds_used = 0
        self.direct_observations = 0
        self.batch_log: list[QueryBatch] | None = [] if record_batches else None

    @property
    def n(self) -> int:
        return self._values.size

    def metering(self) -> Metering:
        return Metering(
            self.measurements_used, self.rounds_used, self.direct_observations
        )

    def measure(self, batch: QueryBatch) -> np.ndarray:
        """Answer one round of queries; counters untouched on a bad batch."""
        n = self.n
        for q in batch.queries:
            if q.indices.size and (q.indices.min() < 0 or q.indices.max() >= n):
                raise ValueError("query index out of range; batch rejected")
        answers = np.array(
            [self._values[q.indices] @ q.coefficients for q in batch.queries]
        )
        self.measurements_used += len(batch)
        self.rounds_used += 1
        if self.batch_log is not None:
            self.batch_log.append(batch)
        return answers

    def observe_direct(self, indices: Iterable[int]) -> dict[int, float]:
        """Read the exact signal values at the given indices (one round)."""
        idx = sorted(set(int(i) for i in indices))
        if any(i < 0 or i >= self.n for i in idx):
            raise ValueError("observation index out of range; request rejected")
        if not idx:
            return {}
        self.direct_observations += len(idx)
        self.measurements_used += len(idx)
        self.rounds_used += 1
        return {i: float(self._values[i]) for i in idx}


@dataclass(frozen=True)
class RecoveryResult:
    """Recovered support, the sparse estimate on it, and the metering."""

    support: frozenset
    estimate: dict
    metering: Metering

    def __post_init__(self):
        if frozenset(self.estimate) != self.support:
            raise ValueError("estimate support must equal the support set")

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for i, v in self.estimate.items():
            out[i] = v
        return out


def top_k_support(x: Signal, k: int) -> set[int]:
    """Indices of the k largest-magnitude entries; ties go to lower indices."""
    if not 0 <= k <= x.n:
        raise ValueError("k must lie in [0, n]")
    order = np.argsort(-np.abs(x.values), kind="stable")
    return set(int(i) for i in order[:k])


def heavy_hitters(x: Signal, k: int, eps: float) -> set[int]:
    """Top-k entries whose square is at least eps times the tail mass."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    top = top_k_support(x, k)
    tail = tail_error(x, k, p=2)
    return {j for j in top if x.values[j] ** 2 >= eps * tail}


def tail_error(x: Signal, k: int, p: int = 2) -> float:
    """p-th power norm of x outside its top-k entries (squared l2 for p=2)."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if not 0 <= k <= x.n:
        raise ValueError("k must lie in [0, n]")
    mags = np.sort(np.abs(x.values))[: x.n - k]
    return float(np.sum(mags**p))
