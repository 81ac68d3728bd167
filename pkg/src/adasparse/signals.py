"""Synthetic signal and stream generators, plus text fixtures.

Signals serialize as one float per line; streams as one integer per line.
The generators span easy and hard regimes for spike identification: a flat
sign tail, a gaussian tail, and spikeless power-law decay.
"""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

SIGNAL_MODELS = ("k-spike+flat-tail", "k-spike+gaussian-tail", "power-law")
STREAM_PATTERNS = ("one-duplicate", "all-same", "shuffled")

_POWER_LAW_RE = re.compile(r"^power-law(?:\(([0-9.]+)\))?$")


def make_signal(
    model: str,
    n: int,
    k: int,
    spike_ratio: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Generate a signal; returns (values, spike_positions).

    Spiked models place k spikes of magnitude spike_ratio/sqrt(k) times the
    tail l2 norm (normalized to 1) at random positions with random signs.
    power-law(alpha) has no designated spikes; alpha defaults to 1.0.
    """
    if n < 1 or not 0 <= k <= n:
        raise ValueError("need n >= 1 and 0 <= k <= n")
    match = _POWER_LAW_RE.match(model)
    if match:
        alpha = float(match.group(1) or 1.0)
        mags = (np.arange(1, n + 1, dtype=np.float64)) ** (-alpha)
        signs = rng.choice([-1.0, 1.0], size=n)
        values = mags * signs
        rng.shuffle(values)
        return values, np.sort(np.argsort(-np.abs(values))[:k])
    if model not in ("k-spike+flat-tail", "k-spike+gaussian-tail"):
        raise ValueError(f"unknown signal model {model!r}")
    values = np.zeros(n)
    positions = rng.choice(n, size=k, replace=False) if k else np.array([], dtype=int)
    tail_mask = np.ones(n, dtype=bool)
    tail_mask[positions] = False
    tail_size = n - k
    if tail_size > 0:
        if model == "k-spike+flat-tail":
            tail = rng.choice([-1.0, 1.0], size=tail_size)
        else:
            tail = rng.standard_normal(tail_size)
        norm = np.linalg.norm(tail)
        if norm > 0:
            tail = tail / norm
        values[tail_mask] = tail
    if k:
        magnitude = spike_ratio / np.sqrt(k)
        values[positions] = magnitude * rng.choice([-1.0, 1.0], size=k)
    return values, np.sort(positions)


def make_stream(
    pattern: str, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, int]:
    """Generate a stream of n items over [1, n-1]; returns (items, duplicate).

    one-duplicate: 1..n-1 in order plus one repeated item.
    shuffled: the same multiset in a seeded random order.
    all-same: n copies of a single item.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if pattern == "all-same":
        d = int(rng.integers(1, n))
        return np.full(n, d, dtype=np.int64), d
    if pattern in ("one-duplicate", "shuffled"):
        d = int(rng.integers(1, n))
        items = np.concatenate(
            [np.arange(1, n, dtype=np.int64), np.array([d], dtype=np.int64)]
        )
        if pattern == "shuffled":
            rng.shuffle(items)
        return items, d
    raise ValueError(f"unknown stream pattern {pattern!r}")


def save_signal(values: np.ndarray, path: str | Path) -> None:
    Path(path).write_text(
        "".join(f"{float(v)!r}\n" for v in np.asarray(values, float))
    )


def load_signal(path: str | Path) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    return np.array([float(ln) for ln in lines])


def save_stream(items: np.ndarray, path: str | Path) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in items))


def load_stream(path: str | Path) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    return np.array([int(ln) for ln in lines], dtype=np.int64)
