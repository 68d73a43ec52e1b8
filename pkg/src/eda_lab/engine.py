"""Main optimizer loop, per-step classification, and critical-position tracking.

Each iteration samples two individuals from the frequency matrix, compares
their fitness (swapping so the first is the winner on a strict loss), and
shifts every disagreeing row by 1/K toward the winner before re-applying
the borders. A position's step is *biased* when every position left of it
was sampled 0 in both individuals (there the comparison systematically
favors value 0), *random-walk* when the individuals disagree there but the
prefix condition fails, and *inactive* when they agree.

Runs execute on a jitted kernel unless per-iteration records are requested
(`trace_level="full"`), in which case an equivalent pure-python loop is
used. Both paths consume the RNG identically, so a given (config, seed)
produces the same result either way.

Positions are 1-based in step kinds, critical positions, and histories;
the critical-position sentinel n+1 means every row has reached the upper
border at least once.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fitness as fitness_mod
from ._kernels import restrict_row_inplace, run_kernel
from .model import (
    BORDER_TOL,
    FrequencyMatrix,
    apply_update,
    new_frequency_matrix,
    sample_individual,
)

TRACE_LEVELS = ("none", "summary", "full")


class StepKind(enum.IntEnum):
    INACTIVE = 0
    BIASED = 1
    RANDOM_WALK = 2


@dataclass
class RunConfig:
    n: int
    r: int
    K: float
    seed: int = 0
    fitness: str = "leadingones"
    max_iterations: int = 1_000_000
    trace_level: str = "none"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.r < 2:
            raise ValueError(f"r must be >= 2, got {self.r}")
        if self.K <= 0:
            raise ValueError(f"K must be positive, got {self.K}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.trace_level not in TRACE_LEVELS:
            raise ValueError(f"trace_level must be one of {TRACE_LEVELS}")
        self.K = float(self.K)
        self.seed = int(self.seed)

    def fitness_function(self) -> fitness_mod.FitnessFunction:
        return fitness_mod.from_descriptor(self.fitness, self.n, self.r)


@dataclass
class StepRecord:
    """Everything one iteration did: samples, winner, kinds, frequency moves."""

    iteration: int
    x: np.ndarray
    y: np.ndarray
    fitness_x: int
    fitness_y: int
    swapped: bool
    kinds: np.ndarray            # StepKind value per position
    p0_before: np.ndarray        # p[:, 0] before the update
    delta0_raw: np.ndarray       # indicator-difference move of p[:, 0], pre-borders
    delta0: np.ndarray           # realized move of p[:, 0] after the borders
    critical_position: int       # m_t after this step


@dataclass
class RunResult:
    config: RunConfig
    iterations: int
    found: bool
    min_frequency_watermark: float
    min_p0_per_position: np.ndarray
    critical_position_history: list
    final_frequencies: np.ndarray
    step_kind_counts: Optional[dict] = None
    records: Optional[list] = None

    @property
    def fitness_evaluations(self) -> int:
        return 2 * self.iterations

    @property
    def iterations_to_optimum(self) -> Optional[int]:
        return self.iterations if self.found else None

    @property
    def termination(self) -> str:
        return "optimum" if self.found else "horizon"

    def to_dict(self) -> dict:
        out = {
            "n": self.config.n,
            "r": self.config.r,
            "K": self.config.K,
            "seed": self.config.seed,
            "fitness": self.config.fitness,
            "max_iterations": self.config.max_iterations,
            "iterations": self.iterations,
            "iterations_to_optimum": self.iterations_to_optimum,
            "fitness_evaluations": self.fitness_evaluations,
            "termination": self.termination,
            "min_frequency_watermark": self.min_frequency_watermark,
            "critical_position_history": [list(tm) for tm in self.critical_position_history],
            "final_frequencies": self.final_frequencies.tolist(),
        }
        if self.step_kind_counts is not None:
            out["step_kind_counts"] = dict(self.step_kind_counts)
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


class CriticalPositionTracker:
    """Remembers which rows have ever reached the upper border for value 0.

    The critical position is the first (1-based) position whose 0-frequency
    has not yet reached the upper border; once all have, it is the sentinel
    n+1. Flags are never cleared, so the position is non-decreasing.
    """

    def __init__(self, n: int, upper: float, tol: float = BORDER_TOL):
        self.n = n
        self.threshold = upper - tol
        self.flags = np.zeros(n, dtype=bool)

    def update(self, p0: np.ndarray) -> None:
        self.flags |= p0 >= self.threshold

    def position(self) -> int:
        unset = np.flatnonzero(~self.flags)
        return int(unset[0]) + 1 if unset.size else self.n + 1


def critical_position(flags: np.ndarray, fm: FrequencyMatrix) -> int:
    """First 1-based position not yet at the upper border, given past flags."""
    effective = np.asarray(flags, dtype=bool) | (fm.p[:, 0] >= fm.upper - BORDER_TOL)
    unset = np.flatnonzero(~effective)
    return int(unset[0]) + 1 if unset.size else fm.n + 1


def classify_step(x: np.ndarray, y: np.ndarray, i: int) -> StepKind:
    """Kind of step position i (1-based) takes for the sampled pair (x, y)."""
    if not 1 <= i <= len(x):
        raise ValueError(f"position {i} out of range 1..{len(x)}")
    if x[i - 1] == y[i - 1]:
        return StepKind.INACTIVE
    if np.any(x[: i - 1] != 0) or np.any(y[: i - 1] != 0):
        return StepKind.RANDOM_WALK
    return StepKind.BIASED


def _classify_all(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = len(x)
    kinds = np.full(n, StepKind.INACTIVE, dtype=np.int8)
    active = x != y
    kinds[active] = StepKind.RANDOM_WALK
    lead = 0
    while lead < n and x[lead] == 0 and y[lead] == 0:
        lead += 1
    if lead < n and active[lead]:
        kinds[lead] = StepKind.BIASED
    return kinds


def step(fm: FrequencyMatrix, fitness: fitness_mod.FitnessFunction, K: float,
         rng: np.random.Generator,
         tracker: Optional[CriticalPositionTracker] = None) -> StepRecord:
    """Execute one full iteration on `fm` in place and record what happened.

    Without a tracker the critical position is derived from the current
    matrix alone (no border history).
    """
    if tracker is None:
        tracker = CriticalPositionTracker(fm.n, fm.upper)
        tracker.update(fm.p[:, 0])
    x = sample_individual(fm, rng)
    y = sample_individual(fm, rng)
    fx = fitness.evaluate(x)
    fy = fitness.evaluate(y)
    swapped = fx < fy
    winner, loser = (y, x) if swapped else (x, y)
    kinds = _classify_all(x, y)
    p0_before = fm.p[:, 0].copy()
    delta = apply_update(fm, winner, loser, K)
    for i, move in enumerate(delta.moves):
        if move is not None:
            restrict_row_inplace(fm.p[i], fm.lower, fm.upper)
    delta0_raw = ((winner == 0).astype(float) - (loser == 0).astype(float)) * delta.step
    tracker.update(fm.p[:, 0])
    return StepRecord(
        iteration=0,
        x=x,
        y=y,
        fitness_x=fx,
        fitness_y=fy,
        swapped=bool(swapped),
        kinds=kinds,
        p0_before=p0_before,
        delta0_raw=delta0_raw,
        delta0=fm.p[:, 0] - p0_before,
        critical_position=tracker.position(),
    )


def _counts_dict(counts: np.ndarray) -> dict:
    return {
        "inactive": int(counts[0]),
        "biased": int(counts[1]),
        "random_walk": int(counts[2]),
        "rw_one_zero_up": int(counts[3]),
        "rw_one_zero_down": int(counts[4]),
        "biased_one_zero": int(counts[5]),
    }


def run(config: RunConfig) -> RunResult:
    """Run the optimizer to the optimum or the iteration cap."""
    fitness = config.fitness_function()
    rng = np.random.default_rng(config.seed)
    fm = new_frequency_matrix(config.n, config.r)
    if config.trace_level == "full":
        return _run_traced(config, fitness, fm, rng)

    n = config.n
    flags = fm.p[:, 0] >= fm.upper - BORDER_TOL
    min_p0 = fm.p[:, 0].copy()
    hist_t = np.zeros(n + 2, dtype=np.int64)
    hist_m = np.zeros(n + 2, dtype=np.int64)
    unset = np.flatnonzero(~flags)
    hist_m[0] = int(unset[0]) + 1 if unset.size else n + 1
    counts = np.zeros(6, dtype=np.int64)
    kind, a, sigma, optimum = fitness.kernel_args()
    iters, found, hist_len = run_kernel(
        fm.p, 1.0 / config.K, config.max_iterations, kind, a, sigma, optimum,
        fm.lower, fm.upper, BORDER_TOL, rng, flags, min_p0, hist_t, hist_m, counts,
    )
    history = [(int(hist_t[k]), int(hist_m[k])) for k in range(hist_len)]
    return RunResult(
        config=config,
        iterations=int(iters),
        found=bool(found),
        min_frequency_watermark=float(min_p0.min()),
        min_p0_per_position=min_p0,
        critical_position_history=history,
        final_frequencies=fm.p,
        step_kind_counts=_counts_dict(counts) if config.trace_level != "none" else None,
    )


def _run_traced(config: RunConfig, fitness: fitness_mod.FitnessFunction,
                fm: FrequencyMatrix, rng: np.random.Generator) -> RunResult:
    tracker = CriticalPositionTracker(fm.n, fm.upper)
    tracker.update(fm.p[:, 0])
    min_p0 = fm.p[:, 0].copy()
    history = [(0, tracker.position())]
    counts = np.zeros(6, dtype=np.int64)
    records: list[StepRecord] = []
    optimum = fitness.optimum_fitness
    iterations = 0
    found = False
    for t in range(1, config.max_iterations + 1):
        iterations = t
        x = sample_individual(fm, rng)
        y = sample_individual(fm, rng)
        fx = fitness.evaluate(x)
        fy = fitness.evaluate(y)
        if optimum is not None and (fx == optimum or fy == optimum):
            found = True
            break
        swapped = fx < fy
        winner, loser = (y, x) if swapped else (x, y)
        kinds = _classify_all(x, y)
        one_zero = (x == 0) != (y == 0)
        counts[0] += int((kinds == StepKind.INACTIVE).sum())
        counts[1] += int((kinds == StepKind.BIASED).sum())
        counts[2] += int((kinds == StepKind.RANDOM_WALK).sum())
        rw_zero = (kinds == StepKind.RANDOM_WALK) & one_zero
        counts[3] += int((rw_zero & (winner == 0)).sum())
        counts[4] += int((rw_zero & (winner != 0)).sum())
        counts[5] += int(((kinds == StepKind.BIASED) & one_zero).sum())
        p0_before = fm.p[:, 0].copy()
        delta = apply_update(fm, winner, loser, config.K)
        for i, move in enumerate(delta.moves):
            if move is not None:
                restrict_row_inplace(fm.p[i], fm.lower, fm.upper)
        np.minimum(min_p0, fm.p[:, 0], out=min_p0)
        tracker.update(fm.p[:, 0])
        m_after = tracker.position()
        if m_after != history[-1][1]:
            history.append((t, m_after))
        records.append(StepRecord(
            iteration=t,
            x=x,
            y=y,
            fitness_x=fx,
            fitness_y=fy,
            swapped=bool(swapped),
            kinds=kinds,
            p0_before=p0_before,
            delta0_raw=((winner == 0).astype(float) - (loser == 0).astype(float)) * delta.step,
            delta0=fm.p[:, 0] - p0_before,
            critical_position=m_after,
        ))
    return RunResult(
        config=config,
        iterations=iterations,
        found=found,
        min_frequency_watermark=float(min_p0.min()),
        min_p0_per_position=min_p0,
        critical_position_history=history,
        final_frequencies=fm.p,
        step_kind_counts=_counts_dict(counts),
        records=records,
    )
