"""Closed-form bound calculators used as reference curves by the suites.

Each function evaluates one bound exactly as stated, with natural logarithms
throughout (the derivations pass through exp(), so base e is the only
consistent reading).  Values are never clamped except where the bound itself
says so: probabilities cap at 1 and the adaptive bound floors at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from triggerlab.errors import DomainError


@dataclass(frozen=True)
class BoundReport:
    """A named bound value with its validity condition and input echo."""

    name: str
    value: float
    validity: str = ""
    valid: bool = True
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value < 0:
            raise DomainError(f"bound value must be >= 0, got {self.value!r}")


def passive_lower(delta: float, L: float, epsilon: float, m: int) -> float:
    """Minimax error floor for passive evaluators: (delta*L/4)*(1-epsilon)^m."""
    _check_prob("delta", delta)
    _check_prob("L", L)
    _check_prob("epsilon", epsilon)
    if m < 0:
        raise DomainError("query budget m must be >= 0")
    return (delta * L / 4.0) * (1.0 - epsilon) ** m


class SmallExposureBound(NamedTuple):
    value: float
    valid: bool


def passive_small_exposure(delta: float, L: float, epsilon: float, m: int) -> SmallExposureBound:
    """Small-exposure specialization 5*delta*L/24, valid when m*epsilon <= 1/6."""
    _check_prob("delta", delta)
    _check_prob("L", L)
    _check_prob("epsilon", epsilon)
    return SmallExposureBound(5.0 * delta * L / 24.0, m * epsilon <= 1.0 / 6.0)


def adaptive_lower(epsilon: float, L: float, m: int) -> float:
    """Adaptive-evaluator error floor (epsilon*L/4)*(1-m*epsilon), floored at 0."""
    _check_prob("epsilon", epsilon)
    _check_prob("L", L)
    if m < 0:
        raise DomainError("query budget m must be >= 0")
    return max(0.0, (epsilon * L / 4.0) * (1.0 - m * epsilon))


def detection_budget(epsilon: float, eta: float) -> float:
    """Queries needed for trigger detection w.p. >= 1-eta: ceil(ln(1/eta)/epsilon).

    Returns ``math.inf`` when epsilon == 0 (no budget suffices).
    """
    if not (0.0 <= epsilon <= 1.0):
        raise DomainError(f"epsilon must lie in [0, 1], got {epsilon!r}")
    if not (0.0 < eta < 1.0):
        raise DomainError(f"eta must lie in (0, 1), got {eta!r}")
    if epsilon == 0.0:
        return math.inf
    return float(math.ceil(math.log(1.0 / eta) / epsilon))


def whitebox_samples(gamma: float, epsilon_R: float, eta: float) -> int:
    """Probe-assisted sample budget ceil((18/(gamma^2 eps_R^2)) * ln(12/eta)).

    Meaningful failure probabilities lie in (0, 1); the calculator accepts
    any eta < 12 (the positive-log domain) so degenerate algebraic cases
    like eta = 12/e stay evaluable.
    """
    if not (0.0 < gamma <= 1.0):
        raise DomainError(f"probe quality gamma must lie in (0, 1], got {gamma!r}")
    if epsilon_R <= 0.0:
        raise DomainError(f"epsilon_R must be positive, got {epsilon_R!r}")
    if not (0.0 < eta < 12.0):
        raise DomainError(f"eta must lie in (0, 12), got {eta!r}")
    return int(math.ceil(18.0 / (gamma**2 * epsilon_R**2) * math.log(12.0 / eta)))


@dataclass(frozen=True)
class PartialBounds:
    """Passive/adaptive floors under partial distinguishability level c.

    The adaptive entry carries two expressions: ``adaptive_full`` is the
    (epsilon*L/4)*(1-c)*(1-m*epsilon) form the conditional-TV argument
    yields, and ``adaptive_headline`` is the 7*c*epsilon*L/32 form stated as
    the headline.  The two disagree at c = 1, where the full form vanishes
    while the headline reduces to the unconditional adaptive bound; both are
    reported and the discrepancy is flagged rather than resolved.
    """

    passive_value: float
    passive_valid: bool
    adaptive_full: float
    adaptive_headline: float
    adaptive_headline_valid: bool
    consistent: bool


def partial_bounds(c: float, delta: float, L: float, epsilon: float, m: int) -> PartialBounds:
    if not (0.0 < c <= 1.0):
        raise DomainError(f"c must lie in (0, 1], got {c!r}")
    _check_prob("delta", delta)
    _check_prob("L", L)
    _check_prob("epsilon", epsilon)
    passive_value = 5.0 * c * delta * L / 24.0
    passive_valid = m * c * epsilon <= 1.0 / 6.0
    adaptive_full = max(0.0, (epsilon * L / 4.0) * (1.0 - c) * (1.0 - m * epsilon))
    adaptive_headline = 7.0 * c * epsilon * L / 32.0
    headline_valid = m * epsilon <= 1.0 / 8.0
    return PartialBounds(
        passive_value=passive_value,
        passive_valid=passive_valid,
        adaptive_full=adaptive_full,
        adaptive_headline=adaptive_headline,
        adaptive_headline_valid=headline_valid,
        consistent=abs(adaptive_full - adaptive_headline) <= 1e-15 or c < 1.0,
    )


def hoeffding_tail(m: int, t: float) -> float:
    """Two-sided Hoeffding tail min(1, 2*exp(-2*m*t^2)) for [0,1] summands."""
    if m < 1:
        raise DomainError("m must be >= 1")
    if t <= 0:
        return 1.0
    return min(1.0, 2.0 * math.exp(-2.0 * m * t * t))


class ProxyBias(NamedTuple):
    total_error: float
    tau_threshold: float


def proxy_bias(tau: float, L: float, epsilon_R: float) -> ProxyBias:
    """Total error epsilon_R + tau*L when deployment is proxied within TV tau.

    ``tau_threshold`` is the largest tau keeping the total within
    2*epsilon_R (infinite when L == 0).
    """
    _check_prob("tau", tau)
    _check_prob("L", L)
    if epsilon_R <= 0:
        raise DomainError(f"epsilon_R must be positive, got {epsilon_R!r}")
    threshold = math.inf if L == 0.0 else epsilon_R / L
    return ProxyBias(epsilon_R + tau * L, threshold)


def _check_prob(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
