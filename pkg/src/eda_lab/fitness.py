"""Fitness functions over {0, ..., r-1}^n.

`leadingones` counts the length of the all-zero prefix, its generalized
form counts the aligned prefix against an arbitrary target string under a
position permutation, and `constant` makes every position neutral (useful
for pure genetic-drift experiments). All values are exact integers in
[0, n]; comparisons never need a tolerance.

Positions handed to :func:`prefix_fitness` are 1-based, matching the
critical-position convention used by the engine.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from ._kernels import FIT_CONSTANT, FIT_LEADING, FIT_LEADING_GENERAL


def r_leading_ones(x: np.ndarray) -> int:
    """Length of the maximal all-zero prefix of x."""
    x = np.asarray(x)
    nz = np.flatnonzero(x)
    return int(x.shape[0] if nz.size == 0 else nz[0])


@dataclass(frozen=True)
class GeneralizedTarget:
    """An optimum string `a` and a position permutation `sigma` (0-based)."""

    a: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.int64)
        sigma = np.asarray(self.sigma, dtype=np.int64)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "sigma", sigma)
        if a.ndim != 1 or sigma.shape != a.shape:
            raise ValueError("target string and permutation must be 1-d and equal-length")
        n = a.shape[0]
        if not np.array_equal(np.sort(sigma), np.arange(n)):
            raise ValueError("sigma is not a permutation of 0..n-1")


def r_leading_ones_general(x: np.ndarray, target: GeneralizedTarget) -> int:
    """Length of the prefix, in sigma order, on which x matches target.a."""
    x = np.asarray(x)
    if x.shape != target.a.shape:
        raise ValueError(f"individual has shape {x.shape}, target expects {target.a.shape}")
    f = 0
    n = x.shape[0]
    while f < n and x[target.sigma[f]] == target.a[target.sigma[f]]:
        f += 1
    return f


def prefix_fitness(x: np.ndarray, i: int) -> int:
    """All-zero prefix length of x counted only up to position i (1-based)."""
    x = np.asarray(x)
    if not 1 <= i <= x.shape[0]:
        raise ValueError(f"position {i} out of range 1..{x.shape[0]}")
    return min(r_leading_ones(x), i)


def constant_fitness(x: np.ndarray) -> int:
    """Zero for every input; every position is neutral."""
    return 0


@dataclass(frozen=True)
class FitnessFunction:
    """A named fitness with its optimum value and serializable descriptor.

    `optimum_fitness` is None when no sampled individual can terminate a
    run (the constant function), so runs end only at the iteration cap.
    """

    name: str
    n: int
    kind_code: int
    optimum_fitness: int | None
    target: GeneralizedTarget | None = field(default=None)

    def evaluate(self, x: np.ndarray) -> int:
        if self.kind_code == FIT_LEADING:
            return r_leading_ones(x)
        if self.kind_code == FIT_LEADING_GENERAL:
            return r_leading_ones_general(x, self.target)
        return constant_fitness(x)

    __call__ = evaluate

    def descriptor(self) -> str:
        if self.kind_code == FIT_LEADING_GENERAL:
            a = ",".join(str(v) for v in self.target.a)
            sigma = ",".join(str(v + 1) for v in self.target.sigma)
            return f"leadingones-general(a={a},sigma={sigma})"
        return self.name

    def kernel_args(self) -> tuple[int, np.ndarray, np.ndarray, int]:
        """(kind code, target string, permutation, optimum) for the jit loop."""
        empty = np.empty(0, dtype=np.int64)
        opt = -1 if self.optimum_fitness is None else int(self.optimum_fitness)
        if self.kind_code == FIT_LEADING_GENERAL:
            return self.kind_code, self.target.a, self.target.sigma, opt
        return self.kind_code, empty, empty, opt


def leading_ones(n: int) -> FitnessFunction:
    return FitnessFunction("leadingones", n, FIT_LEADING, n)


def leading_ones_general(target: GeneralizedTarget) -> FitnessFunction:
    n = int(target.a.shape[0])
    return FitnessFunction("leadingones-general", n, FIT_LEADING_GENERAL, n, target)


def constant(n: int) -> FitnessFunction:
    return FitnessFunction("constant", n, FIT_CONSTANT, None)


_GENERAL_RE = re.compile(r"^leadingones-general\(a=([0-9,]+),sigma=([0-9,]+)\)$")


def from_descriptor(descriptor: str, n: int, r: int) -> FitnessFunction:
    """Parse a fitness descriptor as accepted by the CLI `--fitness` flag.

    Forms: `leadingones`, `constant`, and
    `leadingones-general(a=<csv values>,sigma=<csv of 1-based positions>)`.
    """
    descriptor = descriptor.strip()
    if descriptor == "leadingones":
        return leading_ones(n)
    if descriptor == "constant":
        return constant(n)
    match = _GENERAL_RE.match(descriptor)
    if match:
        a = np.array([int(v) for v in match.group(1).split(",")], dtype=np.int64)
        sigma = np.array([int(v) - 1 for v in match.group(2).split(",")], dtype=np.int64)
        if a.shape[0] != n:
            raise ValueError(f"target length {a.shape[0]} does not match n={n}")
        if a.size and (a.min() < 0 or a.max() >= r):
            raise ValueError(f"target values must lie in [0, {r - 1}]")
        return leading_ones_general(GeneralizedTarget(a, sigma))
    raise ValueError(f"unknown fitness descriptor {descriptor!r}")
