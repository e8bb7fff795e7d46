"""Convergence constants, parameter bounds, and empirical verification oracles.

The oracles work on small synthetic quadratics whose Lipschitz and
gradient-dominance constants are known in closed form, so conditional
expectations over mini-batches can be computed exactly by enumerating all
batches of a given size.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import FiniteSumProblem, as_vector
from .optimizer import HyperParams, run_trish, trish_step


@dataclass(frozen=True)
class TheoryConstants:
    """Problem constants the convergence statements are phrased in.

    L: Lipschitz constant of the full gradient.  mu: gradient-dominance
    (PL) constant, with L >= mu > 0 when it holds.  M_g: uniform bound on
    the gradient-estimate variance.  M2: second-moment coefficient in
    E||g||^2 <= M1 + M2 ||grad F||^2.  F_star: infimum of the objective.
    """

    L: float
    mu: float | None = None
    M_g: float | None = None
    M2: float | None = None
    F_star: float = 0.0

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("L must be positive")
        if self.mu is not None and not 0 < self.mu <= self.L:
            raise ValueError("need 0 < mu <= L")
        if self.M_g is not None and self.M_g < 0:
            raise ValueError("M_g must be nonnegative")
        if self.M2 is not None and self.M2 < 1:
            raise ValueError("M2 must be >= 1")


def second_moment_coefficient(theta: float, nu: float) -> float:
    """M2 implied by passing both variance tests with constants theta, nu."""
    return 1.0 + theta**2 + nu**2


def beta_const(alpha: float, gamma1: float, gamma2: float, L: float) -> float:
    """The positive constant governing the asymptotic optimality gap."""
    if not 0 < gamma2 < gamma1:
        raise ValueError("need 0 < gamma2 < gamma1")
    if alpha <= 0 or L <= 0:
        raise ValueError("alpha and L must be positive")
    return (gamma1**2 - gamma2**2) / (2.0 * gamma2) + 0.5 * alpha * gamma1**2 * L


@dataclass(frozen=True)
class StepsizeBounds:
    """Named steplength bounds and the gamma-ratio admissibility flag.

    base: the bound gamma2 / (2 gamma1^2 L) required for the plateau results.
    pl: base tightened by 1/(mu gamma2) under gradient dominance.
    zero_noise: 1 / (4 gamma2 L M2) for the vanishing-gap regime (M1 = 0).
    zero_noise_pl: zero_noise tightened by 2 gamma2 / (mu gamma1^2).
    ratio_ok: whether (gamma2/gamma1)^2 > 1 - 1/(4 M2).
    """

    base: float
    pl: float | None = None
    zero_noise: float | None = None
    zero_noise_pl: float | None = None
    ratio_ok: bool | None = None


def stepsize_bounds(gamma1: float, gamma2: float, L: float,
                    mu: float | None = None,
                    M2: float | None = None) -> StepsizeBounds:
    """Evaluate every steplength bound available from the given constants."""
    if not 0 < gamma2 < gamma1:
        raise ValueError("need 0 < gamma2 < gamma1")
    if L <= 0:
        raise ValueError("L must be positive")
    base = gamma2 / (2.0 * gamma1**2 * L)
    pl = min(base, 1.0 / (mu * gamma2)) if mu else None
    zero_noise = 1.0 / (4.0 * gamma2 * L * M2) if M2 else None
    zero_noise_pl = (min(zero_noise, 2.0 * gamma2 / (mu * gamma1**2))
                     if (mu and M2) else None)
    ratio_ok = ((gamma2 / gamma1) ** 2 > 1.0 - 1.0 / (4.0 * M2)) if M2 else None
    return StepsizeBounds(base=base, pl=pl, zero_noise=zero_noise,
                          zero_noise_pl=zero_noise_pl, ratio_ok=ratio_ok)


def asymptotic_gaps(beta: float, M_g: float, mu: float,
                    gamma2: float) -> tuple[float, float]:
    """Limit values of the optimality gap (PL case) and of the averaged
    squared gradient norm (nonconvex case)."""
    if beta <= 0 or mu <= 0 or gamma2 <= 0 or M_g < 0:
        raise ValueError("constants must be positive (M_g nonnegative)")
    return 2.0 * beta * M_g / (mu * gamma2), 4.0 * beta * M_g / gamma2


class SyntheticQuadratic(FiniteSumProblem):
    """Finite-sum diagonal quadratic with controlled gradient noise.

    Component i is 0.5 * c_i * x.Dx + b_i.x where the scales c_i average to
    one and the offsets b_i sum to zero, so the full objective is exactly
    0.5 * x.Dx with gradient Dx, minimizer 0, L = max D and mu = min D.
    Offsets give additive (position-independent) noise; scales give
    multiplicative noise that vanishes at the minimizer.
    """

    def __init__(self, diag, offsets=None, scales=None):
        diag = as_vector(diag)
        if np.any(diag <= 0):
            raise ValueError("diagonal entries must be positive")
        if offsets is None and scales is None:
            raise ValueError("provide offsets and/or scales to fix N")
        ref = offsets if offsets is not None else scales
        N = np.asarray(ref).shape[0]

        if offsets is None:
            offsets = np.zeros((N, diag.size))
        offsets = np.array(offsets, dtype=np.float64)
        if offsets.shape != (N, diag.size):
            raise ValueError("offsets must be N rows of dimension n")
        offsets -= offsets.mean(axis=0)
        offsets[-1] = -offsets[:-1].sum(axis=0)  # force the sum to zero

        if scales is None:
            scales = np.ones(N)
        scales = np.array(scales, dtype=np.float64)
        if np.any(scales <= 0):
            raise ValueError("scales must be positive")
        scales += 1.0 - scales.mean()
        scales[-1] = N - scales[:-1].sum()  # force the mean to one

        self.diag = diag
        self.offsets = offsets
        self.scales = scales
        self.N = int(N)
        self.n = int(diag.size)

    @property
    def lipschitz(self) -> float:
        return float(self.diag.max())

    @property
    def pl_constant(self) -> float:
        return float(self.diag.min())

    @property
    def minimizer(self) -> np.ndarray:
        return np.zeros(self.n)

    F_star = 0.0

    def component_loss(self, i: int, x: np.ndarray) -> float:
        x = as_vector(x)
        return float(0.5 * self.scales[i] * x @ (self.diag * x)
                     + self.offsets[i] @ x)

    def component_gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.scales[i] * (self.diag * x) + self.offsets[i]

    def component_gradients(self, indices, x: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.intp)
        return self.scales[idx, None] * (self.diag * x)[None, :] + self.offsets[idx]

    def component_losses(self, indices, x: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.intp)
        quad = 0.5 * float(x @ (self.diag * x))
        return self.scales[idx] * quad + self.offsets[idx] @ x

    def loss(self, x: np.ndarray) -> float:
        x = as_vector(x)
        return float(0.5 * x @ (self.diag * x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.diag * as_vector(x)

    def constants(self, M_g: float | None = None,
                  M2: float | None = None) -> TheoryConstants:
        return TheoryConstants(L=self.lipschitz, mu=self.pl_constant,
                               M_g=M_g, M2=M2, F_star=0.0)


def enumerate_batches(N: int, size: int):
    """All without-replacement batches of `size` from {0..N-1}, index order."""
    return itertools.combinations(range(N), size)


@dataclass(frozen=True)
class GradientMoments:
    """Exact conditional moments of the batch gradient at a point."""

    grad: np.ndarray          # full gradient
    e_g_sq: float             # E ||g||^2
    e_err_sq: float           # E ||g - grad||^2
    inner_moment: float       # E [(g.grad - ||grad||^2)^2]
    orth_moment: float        # E ||g - (g.grad/||grad||^2) grad||^2


def gradient_moments(problem: FiniteSumProblem, x, batch_size: int) -> GradientMoments:
    """Moments of the uniform without-replacement batch gradient, enumerated.

    Feasible for small N only (C(N, batch_size) batches).  The projection
    moments require a nonzero full gradient.
    """
    x = as_vector(x)
    grad = problem.gradient(x)
    grad_sq = float(grad @ grad)
    per = problem.component_gradients(np.arange(problem.N), x)
    e_g_sq = e_err_sq = inner = orth = 0.0
    count = 0
    for combo in enumerate_batches(problem.N, batch_size):
        g = per[list(combo)].mean(axis=0)
        e_g_sq += float(g @ g)
        diff = g - grad
        e_err_sq += float(diff @ diff)
        if grad_sq > 0:
            dot = float(g @ grad)
            inner += (dot - grad_sq) ** 2
            residual = g - (dot / grad_sq) * grad
            orth += float(residual @ residual)
        count += 1
    return GradientMoments(grad=grad,
                           e_g_sq=e_g_sq / count,
                           e_err_sq=e_err_sq / count,
                           inner_moment=inner / count if grad_sq > 0 else float("nan"),
                           orth_moment=orth / count if grad_sq > 0 else float("nan"))


@dataclass(frozen=True)
class ExpectedDecreaseReport:
    """One-step expected-decrease check at a point.

    Two upper bounds on E[F(x + p)] are evaluated with exact expectations:
    one in terms of E||g||^2 (second-moment form), one in terms of
    E||g - grad||^2 (variance form).
    """

    f_x: float
    expected_next: float
    grad_sq: float
    e_g_sq: float
    e_err_sq: float
    rhs_second_moment: float
    rhs_variance: float
    holds_second_moment: bool
    holds_variance: bool

    @property
    def holds(self) -> bool:
        return self.holds_second_moment and self.holds_variance


def verify_lemma1(problem: FiniteSumProblem, x, params: HyperParams,
                  batch_size: int, L: float, mc_samples: int | None = None,
                  rng: np.random.Generator | None = None,
                  rtol: float = 1e-12) -> ExpectedDecreaseReport:
    """Check both expected-decrease inequalities at x.

    Expectations are exact batch enumerations by default; pass `mc_samples`
    (with an rng) for a Monte-Carlo estimate on larger problems.  The
    inequalities hold for every admissible parameter tuple, so violations
    beyond floating-point slack indicate a defect.
    """
    x = as_vector(x)
    f_x = problem.loss(x)
    grad = problem.gradient(x)
    grad_sq = float(grad @ grad)
    per = problem.component_gradients(np.arange(problem.N), x)

    if mc_samples is None:
        combos = [list(c) for c in enumerate_batches(problem.N, batch_size)]
    else:
        if rng is None:
            raise ValueError("Monte-Carlo mode needs an rng")
        combos = [rng.choice(problem.N, size=batch_size, replace=False).tolist()
                  for _ in range(mc_samples)]

    e_next = e_g_sq = e_err_sq = 0.0
    for combo in combos:
        g = per[combo].mean(axis=0)
        e_g_sq += float(g @ g)
        diff = g - grad
        e_err_sq += float(diff @ diff)
        e_next += problem.loss(x + trish_step(g, params))
    m = len(combos)
    e_next /= m
    e_g_sq /= m
    e_err_sq /= m

    alpha, g1, g2 = params.alpha, params.gamma1, params.gamma2
    beta = beta_const(alpha, g1, g2, L)
    rhs_sm = f_x - alpha * g1**2 / (2.0 * g2) * grad_sq + alpha * beta * e_g_sq
    rhs_var = (f_x - 0.5 * alpha * (g2 - alpha * g1**2 * L) * grad_sq
               + alpha * beta * e_err_sq)
    slack = rtol * max(1.0, abs(f_x))
    return ExpectedDecreaseReport(
        f_x=f_x, expected_next=e_next, grad_sq=grad_sq,
        e_g_sq=e_g_sq, e_err_sq=e_err_sq,
        rhs_second_moment=rhs_sm, rhs_variance=rhs_var,
        holds_second_moment=bool(e_next <= rhs_sm + slack),
        holds_variance=bool(e_next <= rhs_var + slack))


@dataclass(frozen=True)
class PlateauReport:
    """Averaged final optimality gap against its theoretical ceiling."""

    mean_gap: float
    std_error: float
    bound: float
    beta: float
    noise_bound: float
    reps: int

    @property
    def satisfied(self) -> bool:
        return self.mean_gap <= self.bound + 3.0 * self.std_error


def verify_theorem_gap(problem: SyntheticQuadratic, params: HyperParams,
                       batch_size: int, horizon_iters: int, reps: int,
                       rng: np.random.Generator, x0=None) -> PlateauReport:
    """Empirical plateau of the optimality gap under gradient dominance.

    Runs `reps` independent fixed-batch trajectories for `horizon_iters`
    steps and compares the averaged final gap with its asymptotic ceiling
    2 * beta * M_g / (mu * gamma2).  M_g is the exact enumerated
    gradient-estimate variance at the start point; for additive-noise
    quadratics it is position-independent, hence a uniform bound.
    """
    x0 = problem.minimizer + 1.0 if x0 is None else as_vector(x0)
    L, mu = problem.lipschitz, problem.pl_constant
    beta = beta_const(params.alpha, params.gamma1, params.gamma2, L)
    m_g = gradient_moments(problem, x0, batch_size).e_err_sq
    bound = 2.0 * beta * m_g / (mu * params.gamma2)

    budget = horizon_iters * batch_size / problem.N
    gaps = np.empty(reps)
    for rep, child in enumerate(rng.spawn(reps)):
        x_final, _ = run_trish(problem, x0, params, batch_size, budget, child)
        gaps[rep] = problem.loss(x_final) - problem.F_star
    mean_gap = float(gaps.mean())
    se = float(gaps.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return PlateauReport(mean_gap=mean_gap, std_error=se, bound=bound,
                         beta=beta, noise_bound=m_g, reps=reps)
