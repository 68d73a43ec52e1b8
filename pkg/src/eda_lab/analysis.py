"""Closed-form tail/drift bounds and the Monte-Carlo experiments that test them.

The calculators are plain float evaluations of the bounds the library is
built to check empirically:

* ``genetic_drift_bound`` - probability that a neutral position's frequency
  ever strays 1/(2r) from its start within T iterations.
* ``weak_preference_bound`` - same closed form, applied to the one-sided
  event of the 0-frequency dropping 1/(2r) below its start at a position
  where value 0 is never worse than any alternative.
* ``drift_lower_bound`` - per-iteration expected upward move of the
  0-frequency at the critical position.
* ``occupation_bound`` - probability that a drifting process sits at
  distance >= b from its target state.
* ``recommended_K`` - update strength making genetic drift unlikely for the
  whole run, ceil(c * n * r^2 * ln^2 n * ln r); natural logs, the constant
  c absorbs the base choice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import engine
from . import fitness as fitness_mod
from ._kernels import neutral_deviation_kernel
from .model import lower_border, new_frequency_matrix, upper_border
from .seeding import derive_seed

E4 = math.exp(4.0)


def genetic_drift_bound(K: float, T: int, r: int) -> float:
    """2 exp(-K^2 / (8 T r^2)); values above 1 are returned as computed."""
    if K <= 0 or T <= 0 or r < 2:
        raise ValueError(f"need K > 0, T > 0, r >= 2; got K={K}, T={T}, r={r}")
    return 2.0 * math.exp(-(K * K) / (8.0 * T * r * r))


def weak_preference_bound(K: float, T: int, r: int) -> float:
    """Same closed form as genetic_drift_bound, for the one-sided dip event."""
    return genetic_drift_bound(K, T, r)


def drift_lower_bound(p: float, K: float) -> float:
    """p(1-p) / (2 e^4 K): least expected gain of the critical 0-frequency."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if K <= 0:
        raise ValueError(f"K must be positive, got {K}")
    return p * (1.0 - p) / (2.0 * E4 * K)


def occupation_bound(d: float, c: float, p0: float, b: float) -> float:
    """2 exp((2d / (3c(1-p0))) (1 - b/c)) for drift d, step c, self-loop p0."""
    if d <= 0 or c <= 0 or b < 0 or not 0.0 <= p0 < 1.0:
        raise ValueError(f"need d > 0, c > 0, b >= 0, p0 in [0,1); got {d}, {c}, {p0}, {b}")
    return 2.0 * math.exp((2.0 * d / (3.0 * c * (1.0 - p0))) * (1.0 - b / c))


def recommended_K(n: int, r: int, c: float = 1.0) -> int:
    """ceil(c * n * r^2 * ln(n)^2 * ln(r))."""
    if n < 2 or r < 2 or c <= 0:
        raise ValueError(f"need n >= 2, r >= 2, c > 0; got n={n}, r={r}, c={c}")
    return math.ceil(c * n * r * r * math.log(n) ** 2 * math.log(r))


@dataclass
class ConcentrationReport:
    """Outcome of repeated neutral-fitness runs versus the drift tail bound."""

    n: int
    r: int
    K: float
    horizon: int
    trials: int
    violation_count: int
    bound: float
    seed: int
    max_deviation: float

    @property
    def empirical_rate(self) -> float:
        return self.violation_count / self.trials if self.trials else 0.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "K": self.K,
            "horizon": self.horizon,
            "trials": self.trials,
            "violation_count": self.violation_count,
            "empirical_rate": self.empirical_rate,
            "bound": self.bound,
            "seed": self.seed,
            "max_deviation": self.max_deviation,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def run_neutral_concentration_experiment(n: int, r: int, K: float, T: int,
                                         trials: int, seed: int = 0) -> ConcentrationReport:
    """Count runs where any frequency strays >= 1/(2r) from 1/r within T steps.

    Uses the constant fitness, so every position is neutral and every
    comparison ties (the first sample always wins). Reported next to
    genetic_drift_bound(K, T, r) for the same parameters.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    threshold = 1.0 / (2.0 * r)
    violations = 0
    worst = 0.0
    for trial in range(trials):
        fm = new_frequency_matrix(n, r)
        rng = np.random.default_rng(derive_seed(seed, "concentration", trial))
        if T > 0:
            violated, max_dev, _ = neutral_deviation_kernel(
                fm.p, 1.0 / K, int(T), threshold, fm.lower, fm.upper, rng)
        else:
            violated, max_dev = False, 0.0
        violations += int(violated)
        worst = max(worst, float(max_dev))
    return ConcentrationReport(
        n=n, r=r, K=float(K), horizon=int(T), trials=trials,
        violation_count=violations,
        bound=genetic_drift_bound(K, T, r) if T >= 1 else 0.0,
        seed=seed, max_deviation=worst,
    )


@dataclass
class DriftEstimate:
    """Conditional mean of the 0-frequency move at one position, one p-bin."""

    position: int
    bin_low: float
    bin_high: float
    sample_count: int
    mean_delta: Optional[float]
    standard_error: Optional[float]
    lower_bound: float

    @property
    def has_data(self) -> bool:
        return self.sample_count > 0

    def to_dict(self) -> dict:
        return {
            "position": self.position,
            "bin_low": self.bin_low,
            "bin_high": self.bin_high,
            "sample_count": self.sample_count,
            "mean_delta": self.mean_delta,
            "standard_error": self.standard_error,
            "lower_bound": self.lower_bound,
        }


def lemma_drift_predicate(n: int, K: float, position: int) -> Callable[[engine.StepRecord], bool]:
    """Conditioning for the drift bound: the prefix is parked near the top
    border and the position itself still has room to move up."""
    prefix_floor = 1.0 - 2.0 / n
    ceiling = 1.0 - 1.0 / n - 1.0 / K

    def predicate(record: engine.StepRecord) -> bool:
        i = position - 1
        if record.p0_before[i] > ceiling:
            return False
        return bool(np.all(record.p0_before[:i] >= prefix_floor))

    return predicate


def estimate_conditional_drift(records: Sequence[engine.StepRecord], position: int,
                               K: float, n: int,
                               p_range: tuple[float, float] = (0.0, 1.0),
                               bin_width: float = 0.05,
                               predicate: Optional[Callable] = None) -> list[DriftEstimate]:
    """Bin the observed moves of p[position, 0] by its pre-step value.

    Only iterations passing `predicate` (default: the critical-position
    conditioning above) contribute. Each bin's theoretical lower bound is
    evaluated at the bin endpoint minimizing p(1-p), the conservative
    direction. Bins without samples are reported with a None mean rather
    than a zero.
    """
    if predicate is None:
        predicate = lemma_drift_predicate(n, K, position)
    i = position - 1
    lo_range, hi_range = p_range
    nbins = max(1, round((hi_range - lo_range) / bin_width))
    edges = [lo_range + k * bin_width for k in range(nbins)] + [hi_range]
    samples: list[list[float]] = [[] for _ in range(nbins)]
    for record in records:
        if not predicate(record):
            continue
        p = record.p0_before[i]
        if not lo_range <= p < hi_range:
            continue
        k = min(int((p - lo_range) / bin_width), nbins - 1)
        samples[k].append(record.delta0[i])
    out = []
    for k in range(nbins):
        lo_edge, hi_edge = edges[k], edges[k + 1]
        # p(1-p) is concave: its minimum over the bin sits at an endpoint
        p_star = lo_edge if abs(lo_edge - 0.5) >= abs(hi_edge - 0.5) else hi_edge
        p_star = min(max(p_star, 1e-12), 1.0 - 1e-12)
        bound = drift_lower_bound(p_star, K)
        vals = samples[k]
        if vals:
            arr = np.asarray(vals)
            mean = float(arr.mean())
            se = float(arr.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else float("inf")
            out.append(DriftEstimate(position, lo_edge, hi_edge, len(vals), mean, se, bound))
        else:
            out.append(DriftEstimate(position, lo_edge, hi_edge, 0, None, None, bound))
    return out


def collect_drift_records(n: int, r: int, K: float, position: int, seed: int,
                          min_samples: int = 10_000,
                          p_range: tuple[float, float] = (0.3, 0.7),
                          max_runs: int = 200,
                          fitness: str = "leadingones") -> list[engine.StepRecord]:
    """Gather per-step records around one position until `min_samples`
    iterations satisfy the drift conditioning with p0 inside `p_range`.

    Each run is stopped once the position's 0-frequency climbs past the
    range (it will not come back down under a fitness preferring 0), so the
    traced runs stay short.
    """
    predicate = lemma_drift_predicate(n, K, position)
    i = position - 1
    stop_at = p_range[1] + 0.05
    fitness_fn = fitness_mod.from_descriptor(fitness, n, r)
    collected: list[engine.StepRecord] = []
    hits = 0
    for run_index in range(max_runs):
        fm = new_frequency_matrix(n, r)
        tracker = engine.CriticalPositionTracker(fm.n, fm.upper)
        tracker.update(fm.p[:, 0])
        rng = np.random.default_rng(derive_seed(seed, "drift", run_index))
        for t in range(1, 20_000):
            record = engine.step(fm, fitness_fn, K, rng, tracker)
            record.iteration = t
            collected.append(record)
            if predicate(record) and p_range[0] <= record.p0_before[i] < p_range[1]:
                hits += 1
            if fm.p[i, 0] > stop_at:
                break
        if hits >= min_samples:
            break
    return collected
