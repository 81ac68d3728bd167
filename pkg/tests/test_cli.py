import numpy as np
import pytest

from adasparse import cli, signals
from adasparse.constants import DEFAULTS, load_constants


def spec(**kw):
    base = dict(scheme="one-sparse", n=256, trials=3, seed=5)
    base.update(kw)
    return cli.ExperimentSpec(**base)


# --- spec validation ------------------------------------------------------


def test_spec_validation():
    spec().validate()
    with pytest.raises(ValueError):
        spec(scheme="nope").validate()
    with pytest.raises(ValueError):
        spec(trials=0).validate()
    with pytest.raises(ValueError):
        spec(k=300).validate()
    with pytest.raises(ValueError):
        spec(eps=0.0).validate()
    with pytest.raises(ValueError):
        spec(scheme="duplicate", model="k-spike+flat-tail").validate()
    with pytest.raises(ValueError):
        spec(model="one-duplicate").validate()
    spec(scheme="duplicate", model="one-duplicate").validate()
    spec(model="power-law(1.5)").validate()


# --- experiment running ---------------------------------------------------


def test_run_experiment_is_deterministic():
    s = spec(spike_ratio=DEFAULTS.heavy_c)
    row1 = cli.run_experiment(s)
    row2 = cli.run_experiment(s)
    assert row1 == row2
    assert 0.0 <= row1.success_rate <= 1.0
    assert row1.mean_measurements > 0


def test_run_experiment_workers_match_serial():
    s = spec(trials=4, spike_ratio=DEFAULTS.heavy_c)
    assert cli.run_experiment(s, workers=1) == cli.run_experiment(s, workers=2)


def test_duplicate_scheme_rows():
    s = spec(scheme="duplicate", n=128, model="one-duplicate", trials=3)
    row = cli.run_experiment(s)
    assert row.success_rate == 1.0
    assert row.mean_rounds >= 2  # passes are reported in the rounds column


def test_k_adaptive_scheme_row():
    s = spec(scheme="k-adaptive", n=512, k=2, eps=0.5, delta=0.2,
             trials=2, spike_ratio=DEFAULTS.heavy_c)
    row = cli.run_experiment(s)
    assert row.success_rate == 1.0
    assert row.mean_direct_observations >= 1


# --- CSV emission ---------------------------------------------------------


def test_emit_csv_layout(tmp_path):
    row = cli.run_experiment(spec(trials=2, spike_ratio=DEFAULTS.heavy_c))
    out = tmp_path / "rows.csv"
    cli.emit_csv([row], out)
    header, line = out.read_text().strip().splitlines()
    assert header == ",".join(cli.CSV_COLUMNS)
    cells = line.split(",")
    assert len(cells) == len(cli.CSV_COLUMNS)
    assert cells[0] == "one-sparse"
    assert cells[1] == "256"


def test_emit_csv_requires_rows(tmp_path):
    with pytest.raises(ValueError):
        cli.emit_csv([], tmp_path / "x.csv")


# --- command line ---------------------------------------------------------


def test_main_run_writes_csv(tmp_path):
    out = tmp_path / "r.csv"
    code = cli.main([
        "run", "--scheme", "one-sparse", "--n", "256", "--trials", "2",
        "--seed", "3", "--spike-ratio", str(DEFAULTS.heavy_c),
        "--out", str(out),
    ])
    assert code == 0
    assert out.read_text().startswith(",".join(cli.CSV_COLUMNS))


def test_main_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--scheme", "bogus", "--n", "16"])
    assert exc.value.code == 2
    assert cli.main(["run", "--scheme", "one-sparse", "--n", "1"]) == 2
    assert cli.main(["run", "--scheme", "one-sparse", "--n", "16",
                     "--model", "junk"]) == 2


def test_main_constants_file(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("C = 123.0\nc_w = 3.0\n# comment\n")
    loaded = load_constants(cfg)
    assert loaded.heavy_c == 123.0 and loaded.cs_width_scale == 3.0
    out = tmp_path / "r.csv"
    code = cli.main([
        "run", "--scheme", "one-sparse", "--n", "64", "--trials", "1",
        "--constants", str(cfg), "--out", str(out),
    ])
    assert code == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("mystery = 1\n")
    assert cli.main([
        "run", "--scheme", "one-sparse", "--n", "64", "--constants", str(bad),
    ]) == 2


def test_main_gen_stream(tmp_path):
    out = tmp_path / "stream.txt"
    assert cli.main([
        "gen-stream", "--pattern", "one-duplicate", "--n", "64",
        "--seed", "4", "--out", str(out),
    ]) == 0
    items = signals.load_stream(out)
    assert items.size == 64
    assert np.bincount(items, minlength=64).max() == 2


def test_main_gen_signal(tmp_path):
    out = tmp_path / "sig.txt"
    assert cli.main([
        "gen-signal", "--model", "k-spike+gaussian-tail", "--n", "128",
        "--k", "3", "--spike-ratio", "9", "--seed", "4", "--out", str(out),
    ]) == 0
    values = signals.load_signal(out)
    assert values.size == 128
