"""Seeded t-wise independent hash families over prime fields.

A degree-(t-1) polynomial with uniform coefficients over GF(p) gives a t-wise
independent map; reducing mod the range size introduces a small, bounded bias.
All objects are immutable after construction and safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import isqrt

import numpy as np

from .constants import split_seed

# Largest modulus for which Horner steps (acc*x + c) stay inside int64.
_INT64_SAFE_MODULUS = 3_037_000_000


def _is_prime(m: int) -> bool:
    if m < 2:
        return False
    if m % 2 == 0:
        return m == 2
    for d in range(3, isqrt(m) + 1, 2):
        if m % d == 0:
            return False
    return True


@lru_cache(maxsize=None)
def next_prime(m: int) -> int:
    """Smallest prime >= m."""
    candidate = max(m, 2)
    while not _is_prime(candidate):
        candidate += 1
    return candidate


def _choose_modulus(domain: int, range_size: int) -> int:
    # Doubling the field relative to the range keeps the mod-range bias
    # below 2x; skip the doubling when it would leave int64 arithmetic.
    base = max(domain, range_size)
    if range_size > domain and 2 * range_size <= _INT64_SAFE_MODULUS:
        base = 2 * range_size
    p = next_prime(base)
    if p > _INT64_SAFE_MODULUS:
        raise ValueError(f"modulus {p} exceeds the int64-safe evaluation limit")
    return p


@dataclass(frozen=True)
class KWiseHash:
    """t-wise independent map [0, domain) -> [0, range_size)."""

    degree: int
    domain: int
    range_size: int
    modulus: int
    coefficients: tuple[int, ...]  # highest-order first

    def eval(self, i: int) -> int:
        if not 0 <= i < self.domain:
            raise ValueError(f"input {i} outside domain [0, {self.domain})")
        acc = 0
        for c in self.coefficients:
            acc = (acc * i + c) % self.modulus
        return acc % self.range_size

    def eval_many(self, idx: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; validates the whole array up front."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.domain):
            raise ValueError("input outside hash domain")
        acc = np.zeros(idx.shape, dtype=np.int64)
        p = self.modulus
        for c in self.coefficients:
            acc = (acc * idx + c) % p
        return acc % self.range_size

    def field_eval_many(self, idx: np.ndarray) -> np.ndarray:
        """Polynomial value mod p, before range reduction (for bias tests)."""
        idx = np.asarray(idx, dtype=np.int64)
        acc = np.zeros(idx.shape, dtype=np.int64)
        for c in self.coefficients:
            acc = (acc * idx + c) % self.modulus
        return acc


def new_kwise(t: int, domain: int, range_size: int, seed: int) -> KWiseHash:
    """Draw a t-wise independent hash with uniformly seeded coefficients."""
    if t < 1 or domain < 1 or range_size < 1:
        raise ValueError("t, domain and range must all be >= 1")
    p = _choose_modulus(domain, range_size)
    rng = np.random.default_rng(split_seed(seed, "kwise", t, domain, range_size))
    coeffs = tuple(int(c) for c in rng.integers(0, p, size=t))
    return KWiseHash(t, domain, range_size, p, coeffs)


def from_coefficients(
    coefficients: tuple[int, ...], domain: int, range_size: int, modulus: int
) -> KWiseHash:
    """Build a hash with explicit coefficients (used by enumeration tests)."""
    return KWiseHash(len(coefficients), domain, range_size, modulus, coefficients)


@dataclass(frozen=True)
class SignHash:
    """t-wise independent map [0, domain) -> {-1, +1}."""

    bits: KWiseHash

    @property
    def domain(self) -> int:
        return self.bits.domain

    def eval(self, i: int) -> int:
        return 1 - 2 * self.bits.eval(i)

    def eval_many(self, idx: np.ndarray) -> np.ndarray:
        return 1 - 2 * self.bits.eval_many(idx)


def new_sign(t: int, domain: int, seed: int) -> SignHash:
    return SignHash(new_kwise(t, domain, 2, seed))


_UNIFORM_RANGE = 2**31


@dataclass(frozen=True)
class UniformHash:
    """t-wise independent uniforms in (0, 1], derived from a wide-range hash."""

    raw: KWiseHash

    def eval(self, i: int) -> float:
        return (self.raw.eval(i) + 1) / _UNIFORM_RANGE

    def eval_many(self, idx: np.ndarray) -> np.ndarray:
        return (self.raw.eval_many(idx) + 1.0) / _UNIFORM_RANGE


def new_uniform(t: int, domain: int, seed: int) -> UniformHash:
    return UniformHash(new_kwise(t, domain, _UNIFORM_RANGE, seed))


def uniform_unit(t: int, domain: int, seed: int, i: int) -> float:
    """One t-wise independent uniform draw in (0, 1] for index i."""
    return new_uniform(t, domain, seed).eval(i)
