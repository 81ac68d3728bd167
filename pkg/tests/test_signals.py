import numpy as np
import pytest

from adasparse import signals


def test_spiked_models_geometry(rng):
    for model in ("k-spike+flat-tail", "k-spike+gaussian-tail"):
        values, spikes = signals.make_signal(model, 1000, 5, 20.0, rng)
        assert values.shape == (1000,)
        assert spikes.shape == (5,) and (np.diff(spikes) > 0).all()
        tail = np.delete(values, spikes)
        assert np.linalg.norm(tail) == pytest.approx(1.0)
        assert np.abs(values[spikes]) == pytest.approx(20.0 / np.sqrt(5))


def test_flat_tail_entries_have_equal_magnitude(rng):
    values, spikes = signals.make_signal("k-spike+flat-tail", 100, 2, 9.0, rng)
    tail = np.delete(values, spikes)
    assert np.unique(np.abs(tail)).size == 1


def test_power_law_model(rng):
    values, top = signals.make_signal("power-law(2.0)", 64, 3, 0.0, rng)
    mags = np.sort(np.abs(values))[::-1]
    expect = np.arange(1, 65, dtype=float) ** -2.0
    assert mags == pytest.approx(expect)
    assert top.shape == (3,)
    # bare name defaults to alpha = 1
    values, _ = signals.make_signal("power-law", 64, 0, 0.0, rng)
    assert np.max(np.abs(values)) == pytest.approx(1.0)


def test_make_signal_validation(rng):
    with pytest.raises(ValueError):
        signals.make_signal("nope", 10, 1, 1.0, rng)
    with pytest.raises(ValueError):
        signals.make_signal("power-law", 10, 11, 1.0, rng)


def test_zero_spike_signal_is_pure_tail(rng):
    values, spikes = signals.make_signal("k-spike+gaussian-tail", 50, 0, 5.0, rng)
    assert spikes.size == 0
    assert np.linalg.norm(values) == pytest.approx(1.0)


def test_stream_patterns(rng):
    items, dup = signals.make_stream("one-duplicate", 100, rng)
    assert items.shape == (100,)
    counts = np.bincount(items, minlength=100)
    assert counts[dup] == 2
    assert (items[:-1] == np.arange(1, 100)).all()  # in-order prefix

    shuffled, dup2 = signals.make_stream("shuffled", 100, rng)
    assert np.bincount(shuffled, minlength=100)[dup2] == 2
    assert sorted(shuffled) == sorted(np.concatenate([np.arange(1, 100), [dup2]]))

    same, dup3 = signals.make_stream("all-same", 10, rng)
    assert (same == dup3).all()

    with pytest.raises(ValueError):
        signals.make_stream("nope", 10, rng)
    with pytest.raises(ValueError):
        signals.make_stream("one-duplicate", 1, rng)


def test_signal_fixture_roundtrip(tmp_path, rng):
    values, _ = signals.make_signal("k-spike+gaussian-tail", 64, 3, 7.0, rng)
    path = tmp_path / "sig.txt"
    signals.save_signal(values, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 64  # one float per line
    loaded = signals.load_signal(path)
    assert (loaded == values).all()  # repr round-trips float64 exactly


def test_stream_fixture_roundtrip(tmp_path, rng):
    items, _ = signals.make_stream("shuffled", 32, rng)
    path = tmp_path / "stream.txt"
    signals.save_stream(items, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 32  # one integer per line
    assert all(ln.lstrip("-").isdigit() for ln in lines)
    loaded = signals.load_stream(path)
    assert (loaded == items).all()
