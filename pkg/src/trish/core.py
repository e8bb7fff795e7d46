"""Shared numeric primitives: finite-sum problems, batch sampling, gradient estimates.

Vectors are plain 1-D ``numpy.float64`` arrays throughout.  Component indices
are 0-based.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


class NumericError(RuntimeError):
    """A computed quantity came out NaN/Inf where a finite value is required."""

    def __init__(self, message: str, component: int | None = None):
        super().__init__(message)
        self.component = component


def as_vector(x) -> np.ndarray:
    """Coerce to a 1-D float64 array without copying when already one."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    return v


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Split one seed into `count` independent deterministic generators.

    Sub-streams keep consumers isolated: drawing extra numbers from one
    stream (e.g. for initialization) cannot perturb another (batch draws).
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(s) for s in children]


class FiniteSumProblem(ABC):
    """Objective F(x) = (1/N) sum_i F_i(x) with per-component losses and gradients.

    Implementations are immutable after construction and safe to share
    across concurrent runs.
    """

    n: int  # parameter dimension
    N: int  # number of components

    @abstractmethod
    def component_loss(self, i: int, x: np.ndarray) -> float:
        """Loss of component i at x."""

    @abstractmethod
    def component_gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        """Gradient of component i at x."""

    def component_gradients(self, indices, x: np.ndarray) -> np.ndarray:
        """Stacked per-component gradients, one row per index.

        Subclasses override with vectorized evaluations; the base version
        loops.  Row order follows `indices`.
        """
        return np.stack([self.component_gradient(int(i), x) for i in indices])

    def component_losses(self, indices, x: np.ndarray) -> np.ndarray:
        return np.array([self.component_loss(int(i), x) for i in indices])

    def loss(self, x: np.ndarray) -> float:
        """Full objective F(x)."""
        return float(np.mean(self.component_losses(np.arange(self.N), x)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Full gradient, the mean of all component gradients."""
        return self.component_gradients(np.arange(self.N), x).mean(axis=0)


@dataclass(frozen=True)
class SampleBatch:
    """A without-replacement sample of component indices."""

    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("batch must hold at least one index")
        if np.unique(idx).size != idx.size:
            raise ValueError("batch indices must be distinct")

    @property
    def size(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True)
class GradientEstimate:
    """Mini-batch gradient with the per-component gradients retained.

    `aggregate` is the row mean of `per_component`; the rows are kept because
    the adaptive-sampling variance tests need them.
    """

    aggregate: np.ndarray
    per_component: np.ndarray
    batch: SampleBatch


def draw_batch(N: int, size: int, rng: np.random.Generator) -> SampleBatch:
    """Uniform without-replacement sample of `size` indices from {0..N-1}.

    Every size-subset is equally probable.  Indices are returned sorted so
    downstream reductions run in a fixed deterministic order.
    """
    if not 1 <= size <= N:
        raise ValueError(f"batch size {size} out of range [1, {N}]")
    indices = np.sort(rng.choice(N, size=size, replace=False))
    return SampleBatch(indices=indices)


def sampled_gradient(problem: FiniteSumProblem, x: np.ndarray,
                     batch: SampleBatch) -> GradientEstimate:
    """Mini-batch gradient estimate: mean of the batch's component gradients."""
    x = as_vector(x)
    if x.size != problem.n:
        raise ValueError(f"x has length {x.size}, problem dimension is {problem.n}")
    if batch.indices.max() >= problem.N:
        raise ValueError("batch index out of range for this problem")
    per = problem.component_gradients(batch.indices, x)
    finite_rows = np.isfinite(per).all(axis=1)
    if not finite_rows.all():
        bad = int(batch.indices[np.flatnonzero(~finite_rows)[0]])
        raise NumericError(f"non-finite gradient for component {bad}", component=bad)
    # Row mean in index order; numpy's pairwise summation is deterministic.
    aggregate = per.mean(axis=0)
    return GradientEstimate(aggregate=aggregate, per_component=per, batch=batch)
