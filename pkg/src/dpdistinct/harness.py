"""Error evaluation, multi-trial statistics, bound calculators, an empirical
privacy probe, and a throughput benchmark.

The probe is a statistical witness in the auditing sense: it estimates the
largest log-likelihood ratio observable between the output histograms of two
neighboring streams.  Passing it is necessary, not sufficient, for the claimed
privacy guarantee.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

from .mechanisms import PrivacyParams, RunResult
from .noise import RandomSource, child_seed
from .stream import Stream, distinct_counts

RunFn = Callable[[RandomSource, Stream], RunResult]


@dataclass
class TrialReport:
    per_step_error: list[float]
    max_error: float
    abort_step: int | None = None
    instance_count: int = 1
    wall_time: float = 0.0


def evaluate(result: RunResult, stream: Stream, wall_time: float = 0.0) -> TrialReport:
    """Per-step absolute error of a run against the exact oracle."""
    truth = distinct_counts(stream)
    errors = [abs(o - q) for o, q in zip(result.outputs, truth)]
    return TrialReport(
        per_step_error=errors,
        max_error=max(errors) if errors else 0.0,
        abort_step=result.abort_step,
        instance_count=result.instances,
        wall_time=wall_time,
    )


@dataclass
class TrialsSummary:
    n_trials: int
    max_errors: list[float]
    quantiles: dict[float, float]
    pass_fraction: float | None
    bound: float | None


def run_trials(
    run_fn: RunFn,
    stream: Stream,
    n_trials: int,
    base_seed: int,
    mode: str = "live",
    bound: float | None = None,
) -> TrialsSummary:
    """Repeat a run with derived child seeds; summarize max errors.

    The per-trial seed depends only on (base_seed, trial index), so results
    are identical regardless of execution order or parallelism.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    truth = distinct_counts(stream)
    max_errors = []
    for k in range(n_trials):
        src = RandomSource(child_seed(base_seed, k), mode)
        result = run_fn(src, stream)
        max_errors.append(
            max(
                (abs(o - q) for o, q in zip(result.outputs, truth)),
                default=0.0,
            )
        )
    ordered = sorted(max_errors)
    quantiles = {
        q: ordered[min(int(q * n_trials), n_trials - 1)] for q in (0.5, 0.9, 0.99)
    }
    pass_fraction = None
    if bound is not None:
        pass_fraction = sum(1 for e in max_errors if e <= bound) / n_trials
    return TrialsSummary(
        n_trials=n_trials,
        max_errors=max_errors,
        quantiles=quantiles,
        pass_fraction=pass_fraction,
        bound=bound,
    )


@dataclass
class BoundSpec:
    branches: dict[str, float]
    minimum: float


def theoretical_bound(
    pp: PrivacyParams,
    beta: float,
    T: int,
    K: int,
    d: int,
    regime: str = "known",
) -> BoundSpec:
    """All branches of the additive-error minimum, and their minimum.

    ``regime="unknown"`` applies the extra ln K factor on the flippancy
    branch plus the additive ln^2 K term paid by the doubling wrapper.
    """
    log_term = math.log(2 * T / beta)
    if K == 0:
        return BoundSpec(branches={"zero": 0.0}, minimum=0.0)
    lnK = max(math.log(K), 1.0)
    if pp.delta == 0:
        flip = math.sqrt(K * log_term / pp.eps)
        err_T = T * log_term / pp.eps
    else:
        flip = (K * math.log(1 / pp.delta) * log_term**2 / pp.eps**2) ** (1 / 3)
        err_T = math.sqrt(T * math.log(1 / pp.delta) * log_term) / pp.eps
    branches = {"d": float(d), "K": float(K), "flippancy": flip, "err_T": err_T}
    additive = 0.0
    if regime == "unknown":
        branches["flippancy"] = lnK * flip
        additive = lnK**2 * math.log(max(lnK, math.e) / beta) / pp.eps
    elif regime != "known":
        raise ValueError(f"unknown regime {regime!r}")
    return BoundSpec(branches=branches, minimum=min(branches.values()) + additive)


@dataclass
class ProbeResult:
    eps_hat: float | None
    status: str  # "ok" | "inconclusive"
    n_samples: int
    n_bins: int
    eligible_bins: int
    projection_step: int = field(default=0)


def default_projection_step(x: Stream, y: Stream) -> int:
    """Index of the step where the true counts of x and y differ the most."""
    qx, qy = distinct_counts(x), distinct_counts(y)
    diffs = [abs(a - b) for a, b in zip(qx, qy)]
    return max(range(len(diffs)), key=diffs.__getitem__) if diffs else 0


def privacy_probe(
    run_fn: RunFn,
    x: Stream,
    y: Stream,
    projection: Callable[[list[float]], float] | None = None,
    bin_width: float = 1.0,
    n_samples: int = 10**6,
    base_seed: int = 0,
    delta: float = 0.0,
    floor: float = 1e-4,
) -> ProbeResult:
    """Histogram-based lower-bound witness for the privacy loss.

    Projected outputs under x and y are binned; counts are Laplace-smoothed
    by +1 and bins whose smaller smoothed mass is below ``floor`` are
    skipped, preventing ratio blowups.  The reported value is the largest
    absolute log-ratio after subtracting the delta allowance.
    """
    step = None
    if projection is None:
        step = default_projection_step(x, y)
        idx = step
        projection = lambda outs: outs[idx]
    hist_x: Counter = Counter()
    hist_y: Counter = Counter()
    src_x = RandomSource(child_seed(base_seed, 0))
    src_y = RandomSource(child_seed(base_seed, 1))
    for _ in range(n_samples):
        hist_x[math.floor(projection(run_fn(src_x, x).outputs) / bin_width)] += 1
    for _ in range(n_samples):
        hist_y[math.floor(projection(run_fn(src_y, y).outputs) / bin_width)] += 1
    bins = set(hist_x) | set(hist_y)
    denom = n_samples + len(bins)
    eps_hat = None
    eligible = 0
    for b in bins:
        px = (hist_x[b] + 1) / denom
        py = (hist_y[b] + 1) / denom
        if min(px, py) < floor:
            continue
        eligible += 1
        candidates = []
        if px - delta > 0:
            candidates.append(math.log((px - delta) / py))
        if py - delta > 0:
            candidates.append(math.log((py - delta) / px))
        local = max([c for c in candidates if c > 0], default=0.0)
        eps_hat = local if eps_hat is None else max(eps_hat, local)
    return ProbeResult(
        eps_hat=eps_hat,
        status="ok" if eligible else "inconclusive",
        n_samples=n_samples,
        n_bins=len(bins),
        eligible_bins=eligible,
        projection_step=step if step is not None else -1,
    )


@dataclass
class BenchReport:
    updates: int
    steps: int
    seconds: float
    updates_per_second: float
    laplace_draws: int
    laplace_calls: int


def throughput_bench(run_fn: RunFn, stream: Stream, seed: int = 0, mode: str = "live") -> BenchReport:
    """Wall-clock one run and report the update rate and noise-draw counts."""
    src = RandomSource(seed, mode)
    n_updates = sum(len(b) for b in stream.batches)
    start = time.perf_counter()
    run_fn(src, stream)
    elapsed = time.perf_counter() - start
    return BenchReport(
        updates=n_updates,
        steps=stream.length,
        seconds=elapsed,
        updates_per_second=n_updates / elapsed if elapsed > 0 else float("inf"),
        laplace_draws=src.laplace_draws,
        laplace_calls=src.laplace_calls,
    )
