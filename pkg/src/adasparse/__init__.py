"""Adaptive sparse-recovery toolkit.

Linear sketching schemes whose measurement count drops when queries may
depend on earlier answers: single-spike location in O(log log n) adaptive
measurements, k-sparse recovery via recursive sub-sampling, a two-round
scheme, a non-adaptive CountSketch baseline, and a multi-pass streaming
duplicate finder built on the same machinery.
"""
from .constants import DEFAULTS, Constants, load_constants, split_seed
from .core import (
    LinearQuery,
    MeasurementOracle,
    Metering,
    NoSignalError,
    OutOfRangeError,
    QueryBatch,
    RecoveryFailure,
    RecoveryResult,
    Signal,
    heavy_hitters,
    tail_error,
    top_k_support,
)
from .duplicates import MultiPassStream, find_duplicate
from .ksparse import recover_k_sparse, round_schedule
from .onesparse import recover_one_sparse
from .tworound import countsketch_recover, two_round_recover

__all__ = [
    "DEFAULTS",
    "Constants",
    "LinearQuery",
    "MeasurementOracle",
    "Metering",
    "MultiPassStream",
    "NoSignalError",
    "OutOfRangeError",
    "QueryBatch",
    "RecoveryFailure",
    "RecoveryResult",
    "Signal",
    "countsketch_recover",
    "find_duplicate",
    "heavy_hitters",
    "load_constants",
    "recover_k_sparse",
    "recover_one_sparse",
    "round_schedule",
    "split_seed",
    "tail_error",
    "top_k_support",
    "two_round_recover",
]
