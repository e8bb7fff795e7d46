"""Adaptive sample-size machinery.

Two sample-variance tests decide whether the current mini-batch is large
enough: one bounds the variance of the inner products grad_i . ref, the other
the variance of the components of grad_i orthogonal to ref.  On failure a
larger batch size is proposed from the measured variances.  A separate
control handles the noisy regime near stationarity by re-running the tests
against an average of recent gradients.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import GradientEstimate, NumericError, as_vector


class DegenerateBatchError(ValueError):
    """Batch too small for a sample variance (needs at least 2 components)."""


class ZeroReferenceError(ValueError):
    """Reference vector has zero norm; the tests are undefined."""


@dataclass(frozen=True)
class VarianceReport:
    """Sample variances of the inner-product and orthogonality statistics.

    inner_ok:  var_inner / |S| <= theta^2 ||ref||^4
    orth_ok:   var_orth        <= nu^2    ||ref||^2
    """

    var_inner: float
    var_orth: float
    inner_ok: bool
    orth_ok: bool

    @property
    def ok(self) -> bool:
        return self.inner_ok and self.orth_ok


def variance_report(est: GradientEstimate, ref_vec: np.ndarray,
                    theta: float, nu: float) -> VarianceReport:
    """Run both batch-variance tests against a reference direction.

    `ref_vec` is normally the batch gradient itself; in the noisy regime it
    is the averaged gradient.  The inner-product statistic is centered at the
    batch mean of grad_i . ref (which equals ||ref||^2 when ref is the batch
    gradient), so it stays a true sample variance for either reference.
    """
    per = est.per_component
    m = per.shape[0]
    if m < 2:
        raise DegenerateBatchError(f"batch of size {m} has no sample variance")
    ref = as_vector(ref_vec)
    ref_sq = float(ref @ ref)
    if ref_sq == 0.0:
        raise ZeroReferenceError("reference vector is zero")

    dots = per @ ref
    center = float(est.aggregate @ ref)  # batch mean of dots
    var_inner = float(np.sum((dots - center) ** 2) / (m - 1))

    # Orthogonal components are materialized explicitly; tests cross-check
    # them against the Pythagorean identity.
    orth = per - np.outer(dots / ref_sq, ref)
    var_orth = float(np.einsum("ij,ij->", orth, orth) / (m - 1))

    inner_ok = var_inner / m <= theta**2 * ref_sq**2
    orth_ok = var_orth <= nu**2 * ref_sq
    return VarianceReport(var_inner=var_inner, var_orth=var_orth,
                          inner_ok=bool(inner_ok), orth_ok=bool(orth_ok))


def proposed_sample_size(report: VarianceReport, ref_vec: np.ndarray,
                         theta: float, nu: float, N: int) -> int:
    """Batch size suggested by the measured variances, capped at N.

    Each variance is divided by its test threshold; the ceilings of the two
    quotients are combined with max.  Quotients already above N short-circuit
    to N before the ceiling so no overflow can occur.
    """
    ref = as_vector(ref_vec)
    ref_sq = float(ref @ ref)
    if ref_sq == 0.0:
        raise ZeroReferenceError("reference vector is zero")
    denom_inner = theta**2 * ref_sq**2
    denom_orth = nu**2 * ref_sq
    if denom_inner == 0.0 or denom_orth == 0.0:
        raise NumericError("variance-test threshold underflowed to zero")
    q_inner = report.var_inner / denom_inner
    q_orth = report.var_orth / denom_orth
    if not (math.isfinite(q_inner) and math.isfinite(q_orth)):
        raise NumericError("sample-size quotient is not finite")
    sizes = [N if q > N else math.ceil(q) for q in (q_inner, q_orth)]
    return min(max(sizes), N)


class GradientHistory:
    """Ring buffer of the last `window` batch-gradient aggregates.

    Tracks how many consecutive iterations the batch size has stayed
    unchanged; the buffer is cleared whenever the size changes, so the stored
    aggregates always belong to the current constant-size streak.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self._aggregates: deque[np.ndarray] = deque(maxlen=window)
        self._size: int | None = None
        self._streak = 0

    def push(self, size: int, aggregate: np.ndarray) -> None:
        if size == self._size:
            self._streak += 1
        else:
            self._size = size
            self._streak = 1
            self._aggregates.clear()
        self._aggregates.append(np.asarray(aggregate, dtype=np.float64))

    def replace_last(self, size: int, aggregate: np.ndarray) -> None:
        """Overwrite the most recent entry (a redraw replaced its gradient)."""
        if not self._aggregates:
            raise ValueError("history is empty")
        if size == self._size:
            self._aggregates[-1] = np.asarray(aggregate, dtype=np.float64)
        else:
            self._size = size
            self._streak = 1
            self._aggregates.clear()
            self._aggregates.append(np.asarray(aggregate, dtype=np.float64))

    def __len__(self) -> int:
        return len(self._aggregates)

    @property
    def steady(self) -> bool:
        """True when the size was unchanged for window+1 consecutive iterations."""
        return self._streak > self.window and len(self._aggregates) == self.window

    def average(self) -> np.ndarray:
        """Mean of the stored aggregates (the averaged gradient of the streak)."""
        if not self._aggregates:
            raise ValueError("history is empty")
        return np.mean(np.stack(self._aggregates), axis=0)


def noisy_regime_step(history: GradientHistory, current: GradientEstimate,
                      theta: float, nu: float, avg_threshold: float,
                      N: int) -> int | None:
    """Averaged-gradient control for the noisy regime.

    Engages only when the batch size has been constant long enough for the
    history to be steady (`current` must already be pushed).  If the averaged
    gradient is small relative to the current one, the variance tests are
    re-run with the average as reference over the current batch; on failure
    the corresponding proposed size is returned, otherwise None.
    """
    if not history.steady:
        return None
    g_avg = history.average()
    current_norm = float(np.linalg.norm(current.aggregate))
    if not float(np.linalg.norm(g_avg)) < avg_threshold * current_norm:
        return None
    report = variance_report(current, g_avg, theta, nu)
    if report.ok:
        return None
    return proposed_sample_size(report, g_avg, theta, nu, N)
