"""Multi-pass duplicate finding over a replayable stream.

A stream of n items from {1, ..., n-1} must repeat some item; the implied
frequency vector x_i = count(i) - 1 sums to 1, so some coordinate is
positive.  Random inverse-uniform scalings make one positive coordinate
dominate with constant probability, after which single-spike recovery over a
pairwise-independent partition locates it.  Every adaptive round costs one
pass; a final pass verifies candidates, so the output is never wrong.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import hashing
from .constants import DEFAULTS, Constants, split_seed
from .core import LinearQuery
from .onesparse import OneSparseRun, drive_runs


class MultiPassStream:
    """Replayable item sequence with pass metering.

    Items lie in [1, n-1]; the implied frequency vector is count(i) - 1.
    Measurements are linear, so they are accumulated in a single pass and the
    replayed sequence always yields identical answers.
    """

    def __init__(self, items: Sequence[int], n: int):
        items = np.asarray(items, dtype=np.int64)
        if items.size != n:
            raise ValueError("stream must contain exactly n items")
        if items.size and (items.min() < 1 or items.max() >= n):
            raise ValueError("stream items must lie in [1, n-1]")
        self.items = items
        self.n = n
        self.passes_used = 0
        counts = np.bincount(items, minlength=n)
        self._freq = counts[1:n].astype(np.float64) - 1.0  # x_i for i in [1, n-1]

    def measure(self, queries: Sequence[LinearQuery]) -> np.ndarray:
        """Accumulate all given linear functionals in one pass."""
        for q in queries:
            if q.indices.size and (q.indices.min() < 1 or q.indices.max() >= self.n):
                raise ValueError("query index outside [1, n-1]")
        self.passes_used += 1
        return np.array(
            [self._freq[q.indices - 1] @ q.coefficients for q in queries]
        )


def stream_measure(stream: MultiPassStream, queries: Sequence[LinearQuery]) -> np.ndarray:
    """Functional form of MultiPassStream.measure (one pass per call)."""
    return stream.measure(queries)


@dataclass(frozen=True)
class DuplicateRun:
    """Outcome and metering of one find_duplicate invocation."""

    result: int | None
    passes: int
    max_state_words: int
    candidates: tuple[int, ...]

    @property
    def succeeded(self) -> bool:
        return self.result is not None


def meter_passes(run: DuplicateRun) -> tuple[int, int]:
    """(passes, peak working-state word count) of a completed run."""
    return run.passes, run.max_state_words


def find_duplicate(
    stream: MultiPassStream,
    delta: float,
    seed: int = 0,
    constants: Constants = DEFAULTS,
) -> DuplicateRun:
    """Find a repeated item with probability >= 1 - delta; never wrong.

    All repetitions and partition parts advance through shared passes: each
    adaptive round of every single-spike recovery contributes its two
    accumulators to the same pass.  A final verification pass recounts the
    candidates, so any non-None result is a genuine duplicate.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    n = stream.n
    domain = n - 1  # coordinates 1..n-1
    if domain < 1:
        raise ValueError("stream domain is empty")
    passes_before = stream.passes_used
    m = max(1, math.ceil(math.log2(1.0 / constants.dup_eps)))
    parts = 4 * m
    reps = constants.dup_reps * max(1, math.ceil(math.log2(1.0 / delta)))

    runs: list[OneSparseRun] = []
    coords = np.arange(1, n, dtype=np.int64)
    for rep in range(reps):
        rep_seed = split_seed(seed, "rep", rep)
        scale = hashing.new_uniform(
            constants.uniform_degree, n, split_seed(rep_seed, "uniform")
        )
        part_hash = hashing.new_kwise(2, n, parts, split_seed(rep_seed, "partition"))
        part_of = part_hash.eval_many(coords)
        weights = 1.0 / scale.eval_many(coords)
        for part in range(parts):
            members = coords[part_of == part]
            if members.size == 0:
                continue
            runs.append(
                OneSparseRun(
                    members,
                    split_seed(rep_seed, "part", part),
                    constants,
                    weights=weights[part_of == part],
                )
            )

    max_words = 0
    candidates: set[int] = set()

    def measure(queries):
        nonlocal max_words
        max_words = max(max_words, len(queries) + len(candidates))
        return stream.measure(queries)

    drive_runs(runs, measure)
    candidates.update(run.result for run in runs if run.result is not None)
    result = None
    if candidates:
        ordered = sorted(candidates)
        verify = [
            LinearQuery(np.array([i], dtype=np.int64), np.array([1.0]))
            for i in ordered
        ]
        max_words = max(max_words, len(verify) + len(ordered))
        values = stream.measure(verify)
        for i, v in zip(ordered, values):
            if v > 0:
                result = int(i)
                break
    return DuplicateRun(
        result=result,
        passes=stream.passes_used - passes_before,
        max_state_words=max_words,
        candidates=tuple(sorted(candidates)),
    )
