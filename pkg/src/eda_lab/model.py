"""Frequency-matrix model: categorical sampling, the ±1/K shift, borders.

The entire state of the optimizer is an n x r row-stochastic matrix whose
entry (i, j) is the probability of sampling value j at position i. Rows are
kept inside [1/((r-1)n), 1 - 1/n] so no value ever becomes unsamplable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import restrict_row_inplace

#: tolerance used whenever a row sum or a border is asserted
SUM_TOL = 1e-12
BORDER_TOL = 1e-12


def lower_border(n: int, r: int) -> float:
    return 1.0 / ((r - 1) * n)


def upper_border(n: int) -> float:
    return 1.0 - 1.0 / n


@dataclass
class FrequencyMatrix:
    """Row-stochastic n x r matrix of sampling frequencies."""

    n: int
    r: int
    p: np.ndarray

    @property
    def lower(self) -> float:
        return lower_border(self.n, self.r)

    @property
    def upper(self) -> float:
        return upper_border(self.n)

    def copy(self) -> "FrequencyMatrix":
        return FrequencyMatrix(self.n, self.r, self.p.copy())


@dataclass(frozen=True)
class UpdateDelta:
    """Per-row record of one ±1/K shift: (gained value, lost value) or None."""

    step: float
    moves: tuple


def new_frequency_matrix(n: int, r: int) -> FrequencyMatrix:
    """Create the uniform starting matrix with every entry 1/r.

    n must be at least 2: for n = 1 the borders [1/(r-1), 0] are an empty
    interval, so no feasible row exists.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ValueError(f"n must be an integer, got {n!r}")
    if not isinstance(r, (int, np.integer)) or isinstance(r, bool):
        raise ValueError(f"r must be an integer, got {r!r}")
    if r < 2:
        raise ValueError(f"alphabet size r must be >= 2, got {r}")
    if n < 2:
        raise ValueError(f"position count n must be >= 2, got {n}")
    return FrequencyMatrix(int(n), int(r), np.full((n, r), 1.0 / r))


def validate_individual(x: np.ndarray, n: int, r: int) -> None:
    if x.shape != (n,):
        raise ValueError(f"individual has length {x.shape}, expected ({n},)")
    if x.min() < 0 or x.max() >= r:
        raise ValueError(f"individual entries must lie in [0, {r - 1}]")


def sample_individual(fm: FrequencyMatrix, rng: np.random.Generator) -> np.ndarray:
    """Draw one individual, consuming exactly one uniform per position."""
    u = rng.random(fm.n)
    cum = np.cumsum(fm.p, axis=1)
    idx = (u[:, None] >= cum).sum(axis=1)
    return np.minimum(idx, fm.r - 1).astype(np.int64)


def apply_update(fm: FrequencyMatrix, winner: np.ndarray, loser: np.ndarray,
                 K: float) -> UpdateDelta:
    """Shift each row by 1/K toward the winner's value, away from the loser's.

    Rows where the two individuals agree are untouched. Borders are NOT
    applied here; call restrict_row on every changed row afterwards.
    """
    if K <= 0:
        raise ValueError(f"K must be positive, got {K}")
    validate_individual(winner, fm.n, fm.r)
    validate_individual(loser, fm.n, fm.r)
    step = 1.0 / K
    moves = []
    for i in range(fm.n):
        w = int(winner[i])
        l = int(loser[i])
        if w == l:
            moves.append(None)
            continue
        fm.p[i, w] += step
        fm.p[i, l] -= step
        moves.append((w, l))
    return UpdateDelta(step=step, moves=tuple(moves))


def restrict_row(row: np.ndarray, n: int, r: int) -> np.ndarray:
    """Return `row` clamped into the borders with its sum restored to 1.

    Violating entries are clamped to the violated border and the imbalance
    is spread proportionally over the entries strictly inside the borders,
    repeating until feasible. When 1/K does not exceed the lower border
    (true whenever K >= (r-1)n, which covers every recommended setting),
    a single ±1/K perturbation moves each non-clamped entry by at most
    1/((n-1)(r-1)).
    """
    row = np.asarray(row, dtype=float)
    if row.shape != (r,):
        raise ValueError(f"row has shape {row.shape}, expected ({r},)")
    if abs(row.sum() - 1.0) > 1e-9:
        raise ValueError(f"row sum {row.sum()!r} is too far from 1")
    out = row.copy()
    restrict_row_inplace(out, lower_border(n, r), upper_border(n))
    return out


def check_matrix_invariants(fm: FrequencyMatrix) -> None:
    """Raise if any row is outside the borders or does not sum to 1."""
    lo, hi = fm.lower, fm.upper
    if fm.p.min() < lo - BORDER_TOL or fm.p.max() > hi + BORDER_TOL:
        raise AssertionError("frequency outside borders")
    err = np.abs(fm.p.sum(axis=1) - 1.0).max()
    if err > SUM_TOL:
        raise AssertionError(f"row sum off by {err}")
