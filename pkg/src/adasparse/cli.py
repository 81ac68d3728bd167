"""Benchmark harness: Monte Carlo trials per scheme, CSV scaling tables.

The harness is the only place with ground-truth signal access; every scheme
touches the signal solely through a fresh per-trial oracle.  A (spec, seed)
pair fully determines each output byte.
"""
from __future__ import annotations

import argparse
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import duplicates, ksparse, signals, tworound
from .constants import DEFAULTS, Constants, load_constants, split_seed
from .core import MeasurementOracle, RecoveryFailure, Signal, tail_error
from .onesparse import recover_one_sparse

SCHEMES = ("one-sparse", "k-adaptive", "two-round", "countsketch", "duplicate")

CSV_COLUMNS = (
    "scheme",
    "n",
    "k",
    "eps",
    "delta",
    "trials",
    "seed",
    "model",
    "spike_ratio",
    "success_rate",
    "mean_measurements",
    "median_measurements",
    "mean_rounds",
    "median_rounds",
    "mean_direct_observations",
    "mean_error_ratio",
)


@dataclass(frozen=True)
class ExperimentSpec:
    scheme: str
    n: int
    k: int = 1
    eps: float = 0.5
    delta: float = 0.25
    trials: int = 1
    seed: int = 0
    model: str = "k-spike+gaussian-tail"
    spike_ratio: float = 10.0

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n < 2 or not 1 <= self.k <= self.n:
            raise ValueError("need n >= 2 and 1 <= k <= n")
        if not 0 < self.eps <= 1 or not 0 < self.delta < 1:
            raise ValueError("need eps in (0, 1] and delta in (0, 1)")
        if self.scheme == "duplicate":
            if self.model not in signals.STREAM_PATTERNS:
                raise ValueError(
                    f"duplicate scheme expects a stream pattern, got {self.model!r}"
                )
        elif not signals._POWER_LAW_RE.match(self.model) and self.model not in (
            "k-spike+flat-tail",
            "k-spike+gaussian-tail",
        ):
            raise ValueError(f"unknown signal model {self.model!r}")


@dataclass(frozen=True)
class ResultRow:
    spec: ExperimentSpec
    success_rate: float
    mean_measurements: float
    median_measurements: float
    mean_rounds: float
    median_rounds: float
    mean_direct_observations: float
    mean_error_ratio: float

    def csv_values(self) -> list[str]:
        s = self.spec
        values = [
            s.scheme,
            s.n,
            s.k,
            s.eps,
            s.delta,
            s.trials,
            s.seed,
            s.model,
            s.spike_ratio,
            self.success_rate,
            self.mean_measurements,
            self.median_measurements,
            self.mean_rounds,
            self.median_rounds,
            self.mean_direct_observations,
            self.mean_error_ratio,
        ]
        return [_fmt(v) for v in values]


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    measurements: int
    rounds: int
    direct_observations: int
    error_ratio: float


def _signal_trial(spec: ExperimentSpec, constants: Constants, t: int) -> TrialOutcome:
    rng = np.random.default_rng(split_seed(spec.seed, "signal", t))
    values, spikes = signals.make_signal(
        spec.model, spec.n, spec.k if spec.scheme != "one-sparse" else 1,
        spec.spike_ratio, rng,
    )
    x = Signal(values)
    oracle = MeasurementOracle(x)
    run_seed = split_seed(spec.seed, "run", t)
    estimate: dict[int, float] = {}
    if spec.scheme == "one-sparse":
        try:
            found = recover_one_sparse(
                oracle, np.arange(spec.n), seed=run_seed, constants=constants
            )
            success = spikes.size > 0 and found == int(spikes[0])
            if success:
                estimate = {found: float(values[found])}
        except RecoveryFailure:
            success = False
        k_err = 1
    else:
        if spec.scheme == "k-adaptive":
            result = ksparse.recover_k_sparse(
                oracle, spec.k, spec.eps, spec.delta, seed=run_seed, constants=constants
            )
        elif spec.scheme == "countsketch":
            result = tworound.countsketch_recover(
                oracle, spec.k, spec.eps, spec.delta, seed=run_seed, constants=constants
            )
        else:
            result = tworound.two_round_recover(
                oracle, spec.k, spec.eps, seed=run_seed, constants=constants
            )
        estimate = result.estimate
        k_err = spec.k
        success = None  # decided below from the error contract
    x_hat = np.zeros(spec.n)
    for i, v in estimate.items():
        x_hat[i] = v
    err = tail_error(x, k_err, p=2)
    resid = float(np.linalg.norm(values - x_hat))
    if err > 0:
        ratio = resid / np.sqrt(err)
    else:
        ratio = 0.0 if resid == 0 else float("inf")
    if spec.scheme != "one-sparse":
        success = resid <= (1 + spec.eps) * np.sqrt(err) + 1e-12
    met = oracle.metering()
    return TrialOutcome(
        bool(success), met.measurements, met.rounds, met.direct_observations, ratio
    )


def _duplicate_trial(spec: ExperimentSpec, constants: Constants, t: int) -> TrialOutcome:
    rng = np.random.default_rng(split_seed(spec.seed, "stream", t))
    items, _ = signals.make_stream(spec.model, spec.n, rng)
    stream = duplicates.MultiPassStream(items, spec.n)
    run = duplicates.find_duplicate(
        stream, spec.delta, seed=split_seed(spec.seed, "run", t), constants=constants
    )
    counts = np.bincount(items, minlength=spec.n)
    sound = run.result is None or counts[run.result] >= 2
    if not sound:
        raise AssertionError("duplicate finder returned a non-duplicate")
    return TrialOutcome(
        run.succeeded, run.max_state_words, run.passes, 0, 0.0
    )


def run_trial(spec: ExperimentSpec, constants: Constants, t: int) -> TrialOutcome:
    if spec.scheme == "duplicate":
        return _duplicate_trial(spec, constants, t)
    return _signal_trial(spec, constants, t)


def run_experiment(
    spec: ExperimentSpec,
    constants: Constants = DEFAULTS,
    workers: int = 1,
) -> ResultRow:
    spec.validate()
    indices = range(spec.trials)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(
                pool.map(_trial_star, [(spec, constants, t) for t in indices])
            )
    else:
        outcomes = [run_trial(spec, constants, t) for t in indices]
    meas = [o.measurements for o in outcomes]
    rounds = [o.rounds for o in outcomes]
    finite_ratios = [o.error_ratio for o in outcomes if np.isfinite(o.error_ratio)]
    return ResultRow(
        spec=spec,
        success_rate=sum(o.success for o in outcomes) / spec.trials,
        mean_measurements=statistics.fmean(meas),
        median_measurements=float(statistics.median(meas)),
        mean_rounds=statistics.fmean(rounds),
        median_rounds=float(statistics.median(rounds)),
        mean_direct_observations=statistics.fmean(
            o.direct_observations for o in outcomes
        ),
        mean_error_ratio=statistics.fmean(finite_ratios) if finite_ratios else 0.0,
    )


def _trial_star(args) -> TrialOutcome:
    return run_trial(*args)


def emit_csv(rows, path: str | Path) -> None:
    if not rows:
        raise ValueError("need at least one result row")
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(",".join(row.csv_values()) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adasparse", description="sparse-recovery benchmark harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run Monte Carlo trials for one scheme")
    run.add_argument("--scheme", required=True, choices=SCHEMES)
    run.add_argument("--n", type=int, required=True)
    run.add_argument("--k", type=int, default=1)
    run.add_argument("--eps", type=float, default=0.5)
    run.add_argument("--delta", type=float, default=0.25)
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--model", default="k-spike+gaussian-tail")
    run.add_argument("--spike-ratio", type=float, default=10.0)
    run.add_argument("--out", type=Path, default=None)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--constants", type=Path, default=None)

    gen = sub.add_parser("gen-stream", help="write a stream fixture")
    gen.add_argument("--pattern", required=True, choices=signals.STREAM_PATTERNS)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, required=True)

    gsig = sub.add_parser("gen-signal", help="write a signal fixture")
    gsig.add_argument("--model", required=True)
    gsig.add_argument("--n", type=int, required=True)
    gsig.add_argument("--k", type=int, default=1)
    gsig.add_argument("--spike-ratio", type=float, default=10.0)
    gsig.add_argument("--seed", type=int, default=0)
    gsig.add_argument("--out", type=Path, required=True)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen-stream":
            rng = np.random.default_rng(split_seed(args.seed, "gen-stream"))
            items, _ = signals.make_stream(args.pattern, args.n, rng)
            signals.save_stream(items, args.out)
            return 0
        if args.command == "gen-signal":
            rng = np.random.default_rng(split_seed(args.seed, "gen-signal"))
            values, _ = signals.make_signal(
                args.model, args.n, args.k, args.spike_ratio, rng
            )
            signals.save_signal(values, args.out)
            return 0
        constants = (
            load_constants(args.constants) if args.constants else DEFAULTS
        )
        spec = ExperimentSpec(
            scheme=args.scheme,
            n=args.n,
            k=args.k,
            eps=args.eps,
            delta=args.delta,
            trials=args.trials,
            seed=args.seed,
            model=args.model,
            spike_ratio=args.spike_ratio,
        )
        spec.validate()
        row = run_experiment(spec, constants, workers=args.workers)
        if args.out is not None:
            emit_csv([row], args.out)
        else:
            print(",".join(CSV_COLUMNS))
            print(",".join(row.csv_values()))
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
