import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adasparse import Metering, QueryBatch, RecoveryFailure
from adasparse.constants import DEFAULTS
from adasparse import onesparse
from conftest import oracle_for


def one_spike(n, pos, value=5.0):
    x = np.zeros(n)
    x[pos] = value
    return oracle_for(x)


# --- parameters and schedule ----------------------------------------------


def test_shrink_params_golden():
    # buckets = ceil(shrink_scale * 4 * B^2 / delta) with the default scale 4.
    p = onesparse.shrink_params(2.0, 0.25)
    assert p.buckets == 256
    assert p.noise_factor == 2.0 and p.fail_prob == 0.25
    with pytest.raises(ValueError):
        onesparse.shrink_params(1.0, 0.25)
    with pytest.raises(ValueError):
        onesparse.shrink_params(2.0, 0.0)


def test_schedule_shape():
    sched = onesparse.one_sparse_schedule(4096)
    bs = [p.noise_factor for p in sched]
    deltas = [p.fail_prob for p in sched]
    assert bs[0] == 2.0
    for prev, nxt in zip(bs, bs[1:]):
        assert nxt == pytest.approx(prev**1.5)
    for i, d in enumerate(deltas):
        assert d == pytest.approx(0.25 / 2**i)
    assert bs[-1] >= 4096 and (len(bs) < 2 or bs[-2] < 4096)
    # total failure budget is a convergent geometric sum below 1/2
    assert sum(deltas) < 0.5


@pytest.mark.parametrize("n", [2, 3, 10, 4096, 1 << 20])
def test_schedule_length_within_loglog_bound(n):
    assert len(onesparse.one_sparse_schedule(n)) <= onesparse.schedule_length_bound(n)


# --- two-measurement location ---------------------------------------------


@given(
    n=st.integers(2, 500),
    pos=st.integers(0, 10**6),
    value=st.floats(0.5, 1e6),
    sign=st.sampled_from([-1.0, 1.0]),
    seed=st.integers(0, 2**32),
)
@settings(max_examples=80, deadline=None)
def test_locate_pair_exact_one_sparse(n, pos, value, sign, seed):
    pos = pos % n
    oracle = one_spike(n, pos, sign * value)
    found = onesparse.locate_pair(oracle, range(n), delta=0.25, sign_seed=seed)
    assert found == pos
    assert oracle.metering().measurements == 2
    assert oracle.metering().rounds == 1


def test_locate_pair_on_subset_of_coordinates():
    oracle = one_spike(100, 37)
    active = [5, 20, 37, 80]
    assert onesparse.locate_pair(oracle, active, 0.25, sign_seed=1) == 37


def test_locate_pair_zero_signal_raises():
    oracle = oracle_for(np.zeros(16))
    with pytest.raises(onesparse.NoSignalError):
        onesparse.locate_pair(oracle, range(16), 0.25, sign_seed=0)


# --- shrink ---------------------------------------------------------------


def test_shrink_keeps_the_spike():
    params = onesparse.shrink_params(2.0, 0.25)
    kept_spike = 0
    for seed in range(20):
        oracle = one_spike(512, 123)
        survivors = onesparse.shrink(oracle, range(512), params, seed=seed)
        assert oracle.metering().measurements == 2
        assert set(survivors) <= set(range(512))
        kept_spike += 123 in survivors
    assert kept_spike == 20  # exact decode: no noise, no failures


def test_shrink_reduces_candidates():
    params = onesparse.shrink_params(2.0, 0.25)
    oracle = one_spike(4096, 77)
    survivors = onesparse.shrink(oracle, range(4096), params, seed=3)
    assert survivors.size < 4096 / 10


# --- full adaptive recovery -----------------------------------------------


@given(
    n=st.integers(1, 3000),
    pos=st.integers(0, 10**6),
    value=st.floats(0.5, 1e6),
    sign=st.sampled_from([-1.0, 1.0]),
    seed=st.integers(0, 2**32),
)
@settings(max_examples=60, deadline=None)
def test_recover_exact_one_sparse_always_succeeds(n, pos, value, sign, seed):
    pos = pos % n
    oracle = one_spike(n, pos, sign * value)
    found = onesparse.recover_one_sparse(oracle, np.arange(n), seed=seed)
    assert found == pos
    met = oracle.metering()
    # 2 measurements per round, O(log log n) rounds, plus the 2-candidate
    # finishing round.
    assert met.measurements <= 2 * (onesparse.schedule_length_bound(max(n, 2)) + 3)
    assert met.rounds <= onesparse.schedule_length_bound(max(n, 2)) + 3


def test_recover_zero_signal_fails_cleanly():
    oracle = oracle_for(np.zeros(64))
    with pytest.raises(RecoveryFailure):
        onesparse.recover_one_sparse(oracle, np.arange(64), seed=0)


def test_recover_with_noise_needs_heavy_spike():
    rng = np.random.default_rng(5)
    n = 2048
    ok = 0
    for t in range(30):
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        x[999] = DEFAULTS.heavy_c
        oracle = oracle_for(x)
        try:
            ok += onesparse.recover_one_sparse(oracle, np.arange(n), seed=t) == 999
        except RecoveryFailure:
            pass
    assert ok >= 25


# --- stepwise runs and lockstep driving -----------------------------------


def test_one_sparse_run_weights_rescale_the_signal():
    # A large weight on a small coordinate makes it the dominant one.
    x = np.zeros(32)
    x[3] = 1.0
    x[20] = 5.0
    oracle = oracle_for(x)
    weights = np.ones(32)
    weights[3] = 1e7
    run = onesparse.OneSparseRun(np.arange(32), seed=2, weights=weights)
    onesparse.drive_runs([run], lambda qs: oracle.measure(QueryBatch(tuple(qs))))
    assert run.result == 3


def test_drive_runs_shares_rounds():
    oracle = oracle_for(np.eye(1, 256, 40)[0] + np.eye(1, 256, 200)[0] * 2)
    runs = [
        onesparse.OneSparseRun(np.arange(0, 128), seed=1),
        onesparse.OneSparseRun(np.arange(128, 256), seed=2),
    ]
    rounds = onesparse.drive_runs(
        runs, lambda qs: oracle.measure(QueryBatch(tuple(qs)))
    )
    assert runs[0].result == 40
    assert runs[1].result == 200
    # Lockstep: the oracle saw one batch per round, not one per run.
    assert oracle.metering().rounds == rounds
    assert rounds <= onesparse.schedule_length_bound(128) + 3


def test_run_with_two_candidates_uses_singleton_queries():
    x = np.zeros(8)
    x[6] = -3.0
    oracle = oracle_for(x)
    run = onesparse.OneSparseRun(np.array([2, 6]), seed=0)
    onesparse.drive_runs([run], lambda qs: oracle.measure(QueryBatch(tuple(qs))))
    assert run.result == 6
    assert oracle.metering() == Metering(2, 1, 0)


def test_run_finishes_immediately_on_singleton():
    run = onesparse.OneSparseRun(np.array([9]), seed=0)
    assert run.step_queries() == []
    assert run.result == 9 and run.finished


def test_run_fails_on_empty_active_set():
    run = onesparse.OneSparseRun(np.array([], dtype=np.int64), seed=0)
    assert run.step_queries() == []
    assert run.failed
