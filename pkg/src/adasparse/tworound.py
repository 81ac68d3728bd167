"""Two-round recovery: hash down to a small dimension, sketch there, then
identify each heavy bucket's dominant preimage coordinate.

Also houses the nonadaptive CountSketch used both as the round-one black box
and as the nonadaptive baseline for the benchmark CLI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hashing
from .constants import DEFAULTS, Constants, split_seed
from .core import (
    LinearQuery,
    MeasurementOracle,
    Metering,
    OutOfRangeError,
    QueryBatch,
    RecoveryResult,
)


@dataclass(frozen=True)
class CountSketchScheme:
    """Geometry and seeds of one nonadaptive CountSketch instance.

    The full measurement set is fixed by (width, depth, seed) before any
    outcome is seen; recovery keeps the s_out largest estimates.
    """

    width: int
    depth: int
    s_out: int
    seed: int

    def measurement_count(self) -> int:
        return self.width * self.depth


def countsketch_scheme(
    k: int,
    eps: float,
    delta: float,
    domain: int,
    seed: int,
    constants: Constants = DEFAULTS,
    s_out: int | None = None,
) -> CountSketchScheme:
    width = max(2, math.ceil(constants.cs_width_scale * k / eps))
    depth = max(1, math.ceil(constants.cs_depth_scale * math.log(domain / delta)))
    depth |= 1  # odd depth keeps the median a single row value
    return CountSketchScheme(width, depth, 2 * k if s_out is None else s_out, seed)


def _row_hashes(scheme: CountSketchScheme, row: int, domain: int):
    bucket = hashing.new_kwise(
        2, domain, scheme.width, split_seed(scheme.seed, "row-bucket", row)
    )
    sign = hashing.new_sign(2, domain, split_seed(scheme.seed, "row-sign", row))
    return bucket, sign


def _grouped_queries(
    indices: np.ndarray, bucket_of: np.ndarray, coef: np.ndarray, width: int
) -> list[LinearQuery]:
    """One query per bucket (empty buckets included, to keep row ordering)."""
    order = np.argsort(bucket_of, kind="stable")
    sorted_buckets = bucket_of[order]
    bounds = np.searchsorted(sorted_buckets, np.arange(width + 1))
    idx_sorted = indices[order]
    coef_sorted = coef[order]
    return [
        LinearQuery(idx_sorted[bounds[b] : bounds[b + 1]], coef_sorted[bounds[b] : bounds[b + 1]])
        for b in range(width)
    ]


def countsketch_queries(
    scheme: CountSketchScheme, indices: np.ndarray, domain: int
) -> tuple[list[LinearQuery], list[tuple[np.ndarray, np.ndarray]]]:
    """Build all width*depth bucket queries restricted to `indices`.

    Returns the flat query list (row-major) plus per-row (bucket, sign)
    arrays aligned with `indices`, needed to decode estimates.
    """
    queries: list[LinearQuery] = []
    row_maps = []
    for row in range(scheme.depth):
        bucket_hash, sign_hash = _row_hashes(scheme, row, domain)
        bucket_of = bucket_hash.eval_many(indices)
        signs = sign_hash.eval_many(indices).astype(np.float64)
        queries.extend(_grouped_queries(indices, bucket_of, signs, scheme.width))
        row_maps.append((bucket_of, signs))
    return queries, row_maps


def countsketch_estimates(
    scheme: CountSketchScheme,
    answers: np.ndarray,
    row_maps: list[tuple[np.ndarray, np.ndarray]],
) -> np.ndarray:
    """Per-coordinate estimate: median over rows of sign * bucket value."""
    sketch = np.asarray(answers, dtype=np.float64).reshape(scheme.depth, scheme.width)
    size = row_maps[0][0].size
    out = np.empty(size)
    chunk = max(1, (1 << 22) // max(scheme.depth, 1))
    for lo in range(0, size, chunk):
        hi = min(lo + chunk, size)
        per_row = np.stack(
            [
                signs[lo:hi] * sketch[row][bucket_of[lo:hi]]
                for row, (bucket_of, signs) in enumerate(row_maps)
            ]
        )
        out[lo:hi] = np.median(per_row, axis=0)
    return out


def countsketch_recover(
    target,
    k: int,
    eps: float,
    delta: float,
    seed: int = 0,
    constants: Constants = DEFAULTS,
    s_out: int | None = None,
) -> RecoveryResult:
    """Nonadaptive sketch-and-decode on any measurable target.

    `target` needs .n and .measure(QueryBatch); it can be a raw oracle or a
    reduced view of one.  One batch, one round.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = target.n
    scheme = countsketch_scheme(k, eps, delta, n, seed, constants, s_out=s_out)
    indices = np.arange(n, dtype=np.int64)
    queries, row_maps = countsketch_queries(scheme, indices, n)
    answers = target.measure(QueryBatch(tuple(queries)))
    est = countsketch_estimates(scheme, answers, row_maps)
    keep = min(scheme.s_out, n)
    ranked = np.lexsort((indices, -np.abs(est)))[:keep]
    support = [int(i) for i in ranked if est[i] != 0.0]
    metering = target.metering() if hasattr(target, "metering") else Metering(len(queries), 1, 0)
    return RecoveryResult(
        support=frozenset(support),
        estimate={i: float(est[i]) for i in support},
        metering=metering,
    )


@dataclass(frozen=True)
class HashReduction:
    """Dimensionality reduction x -> y with y_i = sum_{h(j)=i} sigma(j) x_j."""

    n: int
    reduced_dim: int
    bucket: hashing.KWiseHash
    sign: hashing.SignHash
    bucket_vals: np.ndarray  # h(j) for all j in [n]
    sign_vals: np.ndarray  # sigma(j) for all j in [n]


def make_reduction(
    n: int, k: int, eps: float, seed: int, constants: Constants = DEFAULTS
) -> HashReduction:
    """Draw the reduction hashes; the reduced dimension is poly(k/eps)."""
    target = (constants.reduction_dim_scale * max(2, k) / eps) ** 4
    reduced_dim = 2 ** max(6, math.ceil(math.log2(max(target, 2))))
    reduced_dim = min(reduced_dim, 2**22)
    t = max(2, math.ceil(constants.reduction_degree_scale * math.log2(reduced_dim)))
    bucket = hashing.new_kwise(t, n, reduced_dim, split_seed(seed, "red-bucket"))
    sign = hashing.new_sign(t, n, split_seed(seed, "red-sign"))
    idx = np.arange(n, dtype=np.int64)
    return HashReduction(
        n, reduced_dim, bucket, sign, bucket.eval_many(idx), sign.eval_many(idx)
    )


def reduce_query(red: HashReduction, query_on_y: LinearQuery) -> LinearQuery:
    """Pull a query on the reduced vector back to an exact query on x."""
    if query_on_y.indices.size and query_on_y.indices.max() >= red.reduced_dim:
        raise ValueError("query index outside the reduced dimension")
    dense = np.zeros(red.reduced_dim)
    dense[query_on_y.indices] = query_on_y.coefficients
    coef = red.sign_vals * dense[red.bucket_vals]
    support = np.flatnonzero(dense[red.bucket_vals])
    return LinearQuery(support.astype(np.int64), coef[support])


class ReducedOracleView:
    """Presents the reduced vector y as a measurable target.

    Every batch is pulled back coordinate-exactly and submitted as a single
    batch on the underlying oracle, so the round accounting is unchanged.
    """

    def __init__(self, oracle: MeasurementOracle, red: HashReduction):
        self._oracle = oracle
        self._red = red

    @property
    def n(self) -> int:
        return self._red.reduced_dim

    def metering(self) -> Metering:
        return self._oracle.metering()

    def measure(self, batch: QueryBatch) -> np.ndarray:
        pulled = tuple(reduce_query(self._red, q) for q in batch.queries)
        return self._oracle.measure(QueryBatch(pulled))


def _reduced_row_queries(
    red: HashReduction, scheme: CountSketchScheme
) -> tuple[list[LinearQuery], list[tuple[np.ndarray, np.ndarray]]]:
    """Round-one queries on x obtained by composing the sketch hashes with
    the reduction; identical to pulling back each bucket query on y."""
    idx = np.arange(red.n, dtype=np.int64)
    queries: list[LinearQuery] = []
    row_maps = []
    for row in range(scheme.depth):
        bucket_hash, sign_hash = _row_hashes(scheme, row, red.reduced_dim)
        y_bucket = bucket_hash.eval_many(red.bucket_vals)
        coef = (sign_hash.eval_many(red.bucket_vals) * red.sign_vals).astype(np.float64)
        queries.extend(_grouped_queries(idx, y_bucket, coef, scheme.width))
        # Decoding happens in y-space, over all reduced coordinates.
        y_idx = np.arange(red.reduced_dim, dtype=np.int64)
        row_maps.append(
            (bucket_hash.eval_many(y_idx), sign_hash.eval_many(y_idx).astype(np.float64))
        )
    return queries, row_maps


@dataclass(frozen=True)
class BucketView:
    """One reduced coordinate and the x-coordinates hashing into it."""

    bucket_index: int
    preimage: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "preimage", np.asarray(self.preimage, dtype=np.int64)
        )


def bucket_views(red: HashReduction, buckets) -> list[BucketView]:
    order = np.argsort(red.bucket_vals, kind="stable")
    sorted_vals = red.bucket_vals[order]
    views = []
    for j in buckets:
        lo = np.searchsorted(sorted_vals, j)
        hi = np.searchsorted(sorted_vals, j + 1)
        views.append(BucketView(int(j), order[lo:hi]))
    return views


def _bucket_scheme(
    preimage_size: int, ambient: int, fail_prob: float, seed: int, constants: Constants
) -> CountSketchScheme:
    width = max(3, constants.bucket_width)
    depth = max(
        1, math.ceil(constants.cs_depth_scale * math.log(max(ambient, 2) / fail_prob))
    )
    return CountSketchScheme(width, depth | 1, 1, seed)


def bucket_identify(
    oracle: MeasurementOracle,
    bucket: BucketView,
    fail_prob: float,
    seed: int = 0,
    constants: Constants = DEFAULTS,
) -> int:
    """Nonadaptive identification of a bucket's dominant coordinate."""
    if bucket.preimage.size == 0:
        raise OutOfRangeError("bucket preimage is empty")
    scheme = _bucket_scheme(bucket.preimage.size, oracle.n, fail_prob, seed, constants)
    queries, row_maps = countsketch_queries(scheme, bucket.preimage, oracle.n)
    answers = oracle.measure(QueryBatch(tuple(queries)))
    est = countsketch_estimates(scheme, answers, row_maps)
    if not np.any(est):
        raise OutOfRangeError("bucket sketch decoded to zero")
    best = np.lexsort((bucket.preimage, -np.abs(est)))[0]
    return int(bucket.preimage[best])


def two_round_recover(
    oracle: MeasurementOracle,
    k: int,
    eps: float,
    seed: int = 0,
    constants: Constants = DEFAULTS,
) -> RecoveryResult:
    """Two adaptive rounds: sketch the reduced vector, then open its heavy
    buckets and place the round-one estimates at the identified coordinates."""
    if k < 1 or not 0 < eps <= 1:
        raise ValueError("need k >= 1 and eps in (0, 1]")
    n = oracle.n
    red = make_reduction(n, k, eps, split_seed(seed, "reduction"), constants)
    scheme = countsketch_scheme(
        k, eps / 5, 1 / 100, red.reduced_dim, split_seed(seed, "round1"), constants
    )
    queries, row_maps = _reduced_row_queries(red, scheme)
    answers = oracle.measure(QueryBatch(tuple(queries)))
    y_est = countsketch_estimates(scheme, answers, row_maps)
    y_idx = np.arange(red.reduced_dim, dtype=np.int64)
    ranked = np.lexsort((y_idx, -np.abs(y_est)))[: min(2 * k, red.reduced_dim)]
    heavy_buckets = [int(j) for j in ranked if y_est[j] != 0.0]

    views = [v for v in bucket_views(red, heavy_buckets) if v.preimage.size]
    fail_prob = 1.0 / max(2 * k, 2)
    batch: list[LinearQuery] = []
    decoders = []
    for v in views:
        scheme_b = _bucket_scheme(
            v.preimage.size, n, fail_prob, split_seed(seed, "bucket", v.bucket_index), constants
        )
        qs, maps = countsketch_queries(scheme_b, v.preimage, n)
        decoders.append((v, scheme_b, maps, len(qs)))
        batch.extend(qs)
    estimate: dict[int, float] = {}
    if not batch:
        # Keep the two-round shape even when round one found nothing.
        batch = [LinearQuery(np.array([], dtype=np.int64), np.array([]))]
        decoders = []
    answers2 = oracle.measure(QueryBatch(tuple(batch)))
    offset = 0
    for v, scheme_b, maps, count in decoders:
        est = countsketch_estimates(scheme_b, answers2[offset : offset + count], maps)
        offset += count
        if not np.any(est):
            continue  # identifier failed; this bucket contributes nothing
        best = int(v.preimage[np.lexsort((v.preimage, -np.abs(est)))[0]])
        estimate[best] = float(red.sign_vals[best] * y_est[v.bucket_index])
    return RecoveryResult(
        support=frozenset(estimate),
        estimate=estimate,
        metering=oracle.metering(),
    )


def check_bittest_property(w: np.ndarray, w_hat: np.ndarray, p: int) -> bool:
    """Dominance-preservation predicate for approximate 1-sparse outputs.

    For w sorted descending by magnitude: if |w_0|^p exceeds 0.9 of the total
    p-mass and w_hat is within twice the off-top mass of w, then w_hat's
    largest-magnitude entry must sit at position 0 and carry more than 3/5 of
    w's p-mass.  Returns whether that implication held (vacuously true when
    the hypotheses fail).
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    w = np.asarray(w, dtype=np.float64)
    w_hat = np.asarray(w_hat, dtype=np.float64)
    total = float(np.sum(np.abs(w) ** p))
    off_top = float(np.sum(np.abs(w[1:]) ** p))
    hyp = abs(w[0]) ** p > 0.9 * total and float(
        np.sum(np.abs(w - w_hat) ** p)
    ) <= 2 * off_top
    if not hyp:
        return True
    mags = np.abs(w_hat) ** p
    return bool(np.argmax(mags) == 0 and mags[0] > 0.6 * total)
