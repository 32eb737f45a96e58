"""White-box probe simulation and debiased prevalence/loss/risk estimators.

A probe reads the latent bit with specificity ``alpha0`` (correct-0 rate)
and sensitivity ``alpha1`` (correct-1 rate); its quality is
``gamma = alpha0 + alpha1 - 1 > 0``.  Estimation proceeds from two
independent sample pools drawn at the deployment trigger prevalence p: a
*dep* pool driving the prevalence estimate and an *eval* pool driving the
conditional-loss estimates.

Debiasing inverts the probe confusion matrix

    N = [[alpha1, 1 - alpha0],
         [1 - alpha1, alpha0]],   det N = gamma.

Applied to the *partition-weighted* naive means (partition sum divided by
the pool size), the inverse recovers the loss masses exactly:

    E[(alpha0 * qhat * l1_naive - (1-alpha0) * (1-qhat) * l0_naive) / gamma]
        = p * ell1,
    E[(alpha1 * (1-qhat) * l0_naive - (1-alpha1) * qhat * l1_naive) / gamma]
        = (1 - p) * ell0,

with qhat the pool's probe-positive fraction.  Note the plain linear
combination of the ratio-normalized naive means alone (without the
partition-fraction weights) is *not* unbiased: the partition denominators
do not cancel against the mixture weights except when the partition happens
to sit exactly at its population fraction.  ``debias_losses`` therefore
takes qhat, applies the weighted inversion, and normalizes the masses by
the implied prevalence; at population-exact inputs it returns (ell1, ell0)
identically, and the mass form is exactly unbiased at every sample size.

Estimators are never clamped in statistical use (clamping destroys the
moment identities); ``estimate_risk`` additionally reports a clamped value
for human-facing summaries only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from triggerlab.bounds import whitebox_samples
from triggerlab.errors import DomainError
from triggerlab.rngstream import replicate_rng


@dataclass(frozen=True)
class ProbeSpec:
    """Probe accuracy pair; requires quality gamma = alpha0 + alpha1 - 1 > 0."""

    alpha0: float
    alpha1: float

    def __post_init__(self):
        for name, v in (("alpha0", self.alpha0), ("alpha1", self.alpha1)):
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")
        if self.gamma <= 0.0:
            raise DomainError(
                f"probe no better than chance: gamma = {self.gamma!r} <= 0"
            )

    @property
    def gamma(self) -> float:
        return self.alpha0 + self.alpha1 - 1.0

    @classmethod
    def symmetric(cls, gamma: float) -> "ProbeSpec":
        """Equal-accuracy probe with the given quality: alpha = (1 + gamma)/2."""
        if not (0.0 < gamma <= 1.0):
            raise DomainError(f"gamma must lie in (0, 1], got {gamma!r}")
        a = (1.0 + gamma) / 2.0
        return cls(a, a)


@dataclass(frozen=True)
class ProbeSample:
    """One probed observation; ``true_latent`` is retained for test oracles only."""

    probe_bit: int
    loss_value: float
    true_latent: int

    def __post_init__(self):
        if self.probe_bit not in (0, 1) or self.true_latent not in (0, 1):
            raise DomainError("bits must be 0 or 1")
        if not (0.0 <= self.loss_value <= 1.0):
            raise DomainError(f"loss must lie in [0, 1], got {self.loss_value!r}")


def simulate_probe(spec: ProbeSpec, z: int, rng: np.random.Generator) -> int:
    """Probe output for latent bit z: 1 w.p. alpha1 if z=1, 0 w.p. alpha0 if z=0."""
    if z not in (0, 1):
        raise DomainError("latent bit must be 0 or 1")
    p_one = spec.alpha1 if z == 1 else 1.0 - spec.alpha0
    return int(rng.random() < p_one)


def debias_prevalence(q_hat: float, spec: ProbeSpec) -> float:
    """Unbiased prevalence estimate (q_hat - (1 - alpha0)) / gamma, unclamped."""
    if not (0.0 <= q_hat <= 1.0):
        raise DomainError(f"q_hat must lie in [0, 1], got {q_hat!r}")
    return (q_hat - (1.0 - spec.alpha0)) / spec.gamma


def debias_loss_masses(l1_naive: float | None, l0_naive: float | None,
                       q_hat: float, spec: ProbeSpec) -> tuple:
    """Confusion-inverted loss masses, exactly unbiased for (p*ell1, (1-p)*ell0).

    Inputs are the ratio-normalized naive partition means and the
    probe-positive fraction q_hat; an empty partition contributes zero mass
    exactly (its weight q_hat or 1-q_hat vanishes), so a ``None`` naive mean
    with zero weight is treated as 0.
    """
    if not (0.0 <= q_hat <= 1.0):
        raise DomainError(f"q_hat must lie in [0, 1], got {q_hat!r}")
    s1 = _weighted_sum(l1_naive, q_hat)
    s0 = _weighted_sum(l0_naive, 1.0 - q_hat)
    if s1 is None or s0 is None:
        return None, None
    g = spec.gamma
    mass1 = (spec.alpha0 * s1 - (1.0 - spec.alpha0) * s0) / g
    mass0 = (spec.alpha1 * s0 - (1.0 - spec.alpha1) * s1) / g
    return mass1, mass0


def _weighted_sum(naive: float | None, weight: float):
    if naive is None:
        return 0.0 if weight == 0.0 else None
    return weight * naive


def debias_losses(l1_naive: float | None, l0_naive: float | None,
                  q_hat: float, spec: ProbeSpec) -> tuple:
    """Debiased conditional losses (l1_tilde, l0_tilde), unclamped.

    Normalizes the exactly-unbiased loss masses by the prevalence implied by
    q_hat.  At population-exact inputs this recovers (ell1, ell0)
    identically; a side whose implied normalizer is not strictly positive is
    flagged ``None`` (undefined) rather than returned with a flipped sign.
    """
    mass1, mass0 = debias_loss_masses(l1_naive, l0_naive, q_hat, spec)
    if mass1 is None or mass0 is None:
        return None, None
    p_hat = debias_prevalence(q_hat, spec)
    l1_tilde = mass1 / p_hat if p_hat > 0.0 else None
    l0_tilde = mass0 / (1.0 - p_hat) if p_hat < 1.0 else None
    return l1_tilde, l0_tilde


@dataclass(frozen=True)
class RiskEstimate:
    """Composite risk estimate with its components.

    ``r_hat`` is the unclamped mixture p_hat * l1_tilde + (1-p_hat) * l0_tilde
    (``None`` when a component is undefined); ``r_hat_clamped`` restricts the
    components and the mixture to [0, 1] for reporting only.
    """

    r_hat: float | None
    p_hat: float
    l1_tilde: float | None
    l0_tilde: float | None
    r_hat_clamped: float | None

    @property
    def defined(self) -> bool:
        return self.r_hat is not None


def estimate_risk(dep_samples: Sequence[ProbeSample],
                  eval_samples: Sequence[ProbeSample],
                  spec: ProbeSpec) -> RiskEstimate:
    """Debiased deployment-risk estimate from the two sample pools."""
    if not dep_samples or not eval_samples:
        raise DomainError("both sample pools must be nonempty")
    q_dep = sum(s.probe_bit for s in dep_samples) / len(dep_samples)
    p_hat = debias_prevalence(q_dep, spec)

    pos = [s.loss_value for s in eval_samples if s.probe_bit == 1]
    neg = [s.loss_value for s in eval_samples if s.probe_bit == 0]
    l1_naive = sum(pos) / len(pos) if pos else None
    l0_naive = sum(neg) / len(neg) if neg else None
    q_eval = len(pos) / len(eval_samples)
    l1_tilde, l0_tilde = debias_losses(l1_naive, l0_naive, q_eval, spec)

    if l1_tilde is None or l0_tilde is None:
        return RiskEstimate(None, p_hat, l1_tilde, l0_tilde, None)
    r_hat = p_hat * l1_tilde + (1.0 - p_hat) * l0_tilde
    p_c = min(1.0, max(0.0, p_hat))
    l1_c = min(1.0, max(0.0, l1_tilde))
    l0_c = min(1.0, max(0.0, l0_tilde))
    r_clamped = min(1.0, max(0.0, p_c * l1_c + (1.0 - p_c) * l0_c))
    return RiskEstimate(r_hat, p_hat, l1_tilde, l0_tilde, r_clamped)


@dataclass(frozen=True)
class CoverageResult:
    gamma: float
    epsilon_R: float
    eta: float
    m: int
    replicates: int
    failures: int
    undefined: int

    @property
    def failure_rate(self) -> float:
        return self.failures / self.replicates


def coverage_experiment(true_p: float, true_l0: float, true_l1: float,
                        spec: ProbeSpec, epsilon_R: float, eta: float,
                        replicates: int, seed: int,
                        loss_mode: str = "bernoulli") -> CoverageResult:
    """Monte Carlo coverage of the risk estimator at the prescribed budget.

    Each replicate draws m = whitebox_samples(gamma, epsilon_R, eta) samples
    per pool at prevalence ``true_p`` and counts a failure when the estimate
    is undefined (an empty probe partition) or misses the true risk by more
    than epsilon_R.  Loss observations default to Bernoulli(ell_z), the
    worst-case variance for [0, 1] losses; ``loss_mode="uniform"`` draws
    from a mean-exact uniform interval instead.
    """
    for name, v in (("true_p", true_p), ("true_l0", true_l0), ("true_l1", true_l1)):
        if not (0.0 <= v <= 1.0):
            raise DomainError(f"{name} must lie in [0, 1], got {v!r}")
    if replicates < 10.0 / eta:
        raise DomainError(
            f"replicates={replicates} cannot resolve eta={eta}; need >= {10.0 / eta:.0f}"
        )
    if loss_mode not in ("bernoulli", "uniform"):
        raise DomainError(f"unknown loss_mode {loss_mode!r}")
    m = whitebox_samples(spec.gamma, epsilon_R, eta)
    true_risk = true_p * true_l1 + (1.0 - true_p) * true_l0

    failures = 0
    undefined = 0
    for rep in range(replicates):
        rng = replicate_rng(seed, rep + 1)
        q_dep = _simulated_positive_rate(rng, m, true_p, spec)
        p_hat = debias_prevalence(q_dep, spec)

        z = rng.random(m) < true_p
        probe = rng.random(m) < np.where(z, spec.alpha1, 1.0 - spec.alpha0)
        means = np.where(z, true_l1, true_l0)
        if loss_mode == "bernoulli":
            losses = (rng.random(m) < means).astype(float)
        else:
            half = np.minimum(means, 1.0 - means)
            losses = means + (rng.random(m) - 0.5) * 2.0 * half
        n1 = int(probe.sum())
        l1_naive = float(losses[probe].mean()) if n1 > 0 else None
        l0_naive = float(losses[~probe].mean()) if n1 < m else None
        l1_tilde, l0_tilde = debias_losses(l1_naive, l0_naive, n1 / m, spec)

        if l1_tilde is None or l0_tilde is None:
            undefined += 1
            failures += 1
            continue
        r_hat = p_hat * l1_tilde + (1.0 - p_hat) * l0_tilde
        if abs(r_hat - true_risk) > epsilon_R:
            failures += 1
    return CoverageResult(spec.gamma, epsilon_R, eta, m, replicates,
                          failures, undefined)


def _simulated_positive_rate(rng: np.random.Generator, m: int, true_p: float,
                             spec: ProbeSpec) -> float:
    z = rng.random(m) < true_p
    probe = rng.random(m) < np.where(z, spec.alpha1, 1.0 - spec.alpha0)
    return float(probe.mean())
