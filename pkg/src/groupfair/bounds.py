"""Closed-form probability bounds used to gate the Monte Carlo estimates.

Every bound is evaluated in log space and exponentiated once at the end.
``hypothesis_met`` reports whether the parameters satisfy the side
conditions under which the bound is proved; it is never enforced, so bounds
can be tabulated on both sides of a threshold. Where the side condition is
only "sufficiently large" with no stated constant, it is reported as met.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# constant of the greedy failure bound, taken as is (it is very loose)
GREEDY_EXPONENT_CONSTANT = 120000.0
# leading constant of the random-assignment sample-size condition
APPROX_EF_SAMPLE_CONSTANT = 10.0


@dataclass(frozen=True)
class BoundValue:
    raw: float
    hypothesis_met: bool

    @property
    def value(self) -> float:
        return min(1.0, max(0.0, self.raw))

    @classmethod
    def from_log(cls, log_raw: float, hypothesis_met: bool) -> "BoundValue":
        raw = math.inf if log_raw > 709.0 else math.exp(log_raw)
        return cls(raw, hypothesis_met)


def _check_nonneg(**kwargs: float) -> None:
    for name, v in kwargs.items():
        if not v >= 0:
            raise ValueError(f"{name} must be non-negative, got {v}")


def chernoff_upper(expected: float, delta: float) -> float:
    """Upper-tail bound Pr[S >= (1 + delta) E[S]] <= exp(-delta^2 E[S] / 3)."""
    _check_nonneg(expected=expected, delta=delta)
    return math.exp(-delta * delta * expected / 3.0)


def chernoff_lower(expected: float, delta: float) -> float:
    """Lower-tail bound Pr[S <= (1 - delta) E[S]] <= exp(-delta^2 E[S] / 2)."""
    _check_nonneg(expected=expected, delta=delta)
    return math.exp(-delta * delta * expected / 2.0)


def nonexistence_bound(g: int, n: int, m: int) -> BoundValue:
    """Upper bound g^-(n-m) on the probability that any envy-free allocation exists.

    Only informative for m < n; otherwise the raw value is >= 1.
    """
    if g < 2 or n < 1 or m < 1:
        raise ValueError("nonexistence_bound: need g >= 2, n >= 1, m >= 1")
    return BoundValue.from_log(-(n - m) * math.log(g), m < n)


def approx_ef_delta(alpha: float) -> float:
    return (1.0 - alpha) / (1.0 + alpha)


def approx_ef_threshold(alpha: float, mu_min: float, g: int, n: int) -> float:
    """Number of items beyond which the random-assignment bound is proved to decay."""
    delta = approx_ef_delta(alpha)
    return APPROX_EF_SAMPLE_CONSTANT / (mu_min * delta * delta) * g * math.log(n)


def approx_ef_failure_bound(alpha: float, mu_min: float, m: int, g: int, n: int) -> BoundValue:
    """Bound on Pr[random assignment is not alpha-approximately envy-free].

    raw = exp(-delta^2 m mu_min / (3 g) + 3 ln n) with delta = (1 - alpha)/(1 + alpha).
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    if not 0.0 < mu_min <= 1.0:
        raise ValueError(f"mu_min must lie in (0, 1], got {mu_min}")
    if m < 0 or g < 1 or n < 1:
        raise ValueError("approx_ef_failure_bound: need m >= 0, g >= 1, n >= 1")
    delta = approx_ef_delta(alpha)
    log_raw = -delta * delta * m * mu_min / (3.0 * g) + 3.0 * math.log(n)
    return BoundValue.from_log(log_raw, m > approx_ef_threshold(alpha, mu_min, g, n))


def greedy_failure_bound(sigma_min: float, m: int, n: int, g: int) -> BoundValue:
    """Bound 2 n (g-1) exp(-sigma_min^2 m / (120000 n)) on Pr[greedy_total is not envy-free]."""
    if sigma_min <= 0.0 or n < 1 or g < 2 or m < 0:
        raise ValueError("greedy_failure_bound: need sigma_min > 0, n >= 1, g >= 2, m >= 0")
    log_raw = (math.log(2.0 * n * (g - 1))
               - sigma_min * sigma_min * m / (GREEDY_EXPONENT_CONSTANT * n))
    return BoundValue.from_log(log_raw, True)
