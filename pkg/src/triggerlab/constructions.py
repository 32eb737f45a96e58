"""Builders for the adversarial model instances the games run against.

Two families are provided:

- *Two-point instances*: a safe model with empty trigger set paired with an
  unsafe model triggering on one designated input atom.  The evaluation
  distribution places mass exactly ``epsilon`` on the trigger atom and the
  deployment distribution mass ``delta``; the conditional losses are pinned
  to the configured (ell0, ell1), so the risk gap is exactly delta * L.
  Kernels off-trigger are shared objects, making unobservability an
  identity, not a tolerance.

- *Hash-trigger models*: safe/unsafe pairs over a prime field whose trigger
  set is S_h = {x : h(x) < k} for a polynomial hash; used by the adaptive
  games and the transcript indistinguishability checks.

Partial-distinguishability variants overlap the trigger arm's output
support with the safe arm so that per-trigger TV equals a chosen c < 1.
"""

from __future__ import annotations

from dataclasses import dataclass

from triggerlab.core import DiscreteDistribution, LatentModel
from triggerlab.errors import DomainError
from triggerlab.hashfam import PolyHash, TriggerThreshold, in_trigger

SAFE_OUTPUT = "ok"
RISKY_OUTPUT = "flag"
TRIGGERED_OUTPUT = "boom"


@dataclass(frozen=True)
class TwoPointInstance:
    """A safe/unsafe model pair with its evaluation/deployment distributions."""

    model0: LatentModel
    model1: LatentModel
    dist_eval: DiscreteDistribution
    dist_dep: DiscreteDistribution
    epsilon: float
    delta: float
    ell0: float
    ell1: float

    @property
    def loss_gap(self) -> float:
        return abs(self.ell1 - self.ell0)

    @property
    def risk_gap(self) -> float:
        """|R_dep(model1) - R_dep(model0)| = delta * L for this construction."""
        return self.delta * self.loss_gap


def two_point_instance(epsilon: float, delta: float, ell0: float, ell1: float,
                       stochastic: bool = True) -> TwoPointInstance:
    """Build the canonical three-input two-point pair.

    Inputs are ('trig', 'u', 'v').  With ``stochastic=True`` the shared safe
    kernel is Bernoulli(ell0) over {ok, flag} with loss(flag)=1, so ell0 is
    met exactly while transcripts stay informative; otherwise the safe arm
    is a point mass on an output whose loss is ell0.
    """
    if not (0.0 <= epsilon < 1.0):
        raise DomainError(f"epsilon must lie in [0, 1), got {epsilon!r}")
    if not (0.0 < delta <= 1.0) or delta <= epsilon:
        raise DomainError("delta must lie in (0, 1] and exceed epsilon")
    for name, v in (("ell0", ell0), ("ell1", ell1)):
        if not (0.0 <= v <= 1.0):
            raise DomainError(f"{name} must lie in [0, 1], got {v!r}")

    inputs = ("trig", "u", "v")
    if stochastic:
        safe_kernel = DiscreteDistribution((SAFE_OUTPUT, RISKY_OUTPUT), (1.0 - ell0, ell0))
        loss = {SAFE_OUTPUT: 0.0, RISKY_OUTPUT: 1.0, TRIGGERED_OUTPUT: ell1}
    else:
        safe_kernel = DiscreteDistribution((SAFE_OUTPUT,), (1.0,))
        loss = {SAFE_OUTPUT: ell0, TRIGGERED_OUTPUT: ell1}
    triggered_kernel = DiscreteDistribution((TRIGGERED_OUTPUT,), (1.0,))

    kernel0 = {}
    kernel1 = {}
    for x in inputs:
        for z in (0, 1):
            kernel0[(x, z)] = safe_kernel
            kernel1[(x, z)] = safe_kernel
    kernel1[("trig", 1)] = triggered_kernel

    model0 = LatentModel(inputs, (), kernel0, loss, name="two-point-safe")
    model1 = LatentModel(inputs, ("trig",), kernel1, loss, name="two-point-unsafe")

    dist_eval = DiscreteDistribution(inputs, (epsilon, (1 - epsilon) / 2, (1 - epsilon) / 2))
    dist_dep = DiscreteDistribution(inputs, (delta, (1 - delta) / 2, (1 - delta) / 2))
    return TwoPointInstance(model0, model1, dist_eval, dist_dep,
                            epsilon, delta, ell0, ell1)


def partial_trigger_kernel(safe_kernel: DiscreteDistribution, c: float) -> DiscreteDistribution:
    """Trigger-arm kernel at TV exactly ``c`` from the safe arm.

    Mixes the safe kernel with the disjoint triggered output:
    (1-c) * safe + c * point(TRIGGERED_OUTPUT), whose TV from the safe arm
    is exactly c.
    """
    if not (0.0 < c <= 1.0):
        raise DomainError(f"c must lie in (0, 1], got {c!r}")
    atoms = safe_kernel.atoms + (TRIGGERED_OUTPUT,)
    probs = tuple(p * (1.0 - c) for p in safe_kernel.probs) + (c,)
    return DiscreteDistribution(atoms, probs)


def two_point_instance_partial(epsilon: float, delta: float, ell0: float, ell1: float,
                               c: float) -> TwoPointInstance:
    """Two-point pair whose per-trigger distinguishability equals ``c``."""
    base = two_point_instance(epsilon, delta, ell0, ell1, stochastic=True)
    safe_kernel = base.model0.output_dist("u", 0)
    mixed = partial_trigger_kernel(safe_kernel, c)
    kernel1 = dict(base.model1.kernel)
    kernel1[("trig", 1)] = mixed
    model1 = LatentModel(base.model1.input_space, ("trig",), kernel1,
                         base.model1.loss, name=f"two-point-partial-c{c}")
    return TwoPointInstance(base.model0, model1, base.dist_eval, base.dist_dep,
                            epsilon, delta, ell0, ell1)


def field_distribution(q: int, probs=None) -> DiscreteDistribution:
    """Distribution over the field atoms 0..q-1 (uniform by default)."""
    atoms = tuple(range(q))
    if probs is None:
        return DiscreteDistribution.uniform(atoms)
    return DiscreteDistribution(atoms, probs)


def hash_trigger_models(h: PolyHash, thr: TriggerThreshold, ell0: float, ell1: float,
                        stochastic_safe: bool = False) -> tuple:
    """Safe/unsafe model pair over F_q with trigger set S_h.

    Returns (model0, model_h).  Both share the safe kernel everywhere except
    the unsafe model's trigger arm on S_h, which is a disjoint point mass,
    so the pair is unobservable with perfect distinguishability on triggers.
    """
    q = h.q
    inputs = tuple(range(q))
    if stochastic_safe:
        safe_kernel = DiscreteDistribution((SAFE_OUTPUT, RISKY_OUTPUT), (1.0 - ell0, ell0))
        loss = {SAFE_OUTPUT: 0.0, RISKY_OUTPUT: 1.0, TRIGGERED_OUTPUT: ell1}
    else:
        safe_kernel = DiscreteDistribution((SAFE_OUTPUT,), (1.0,))
        loss = {SAFE_OUTPUT: ell0, TRIGGERED_OUTPUT: ell1}
    triggered_kernel = DiscreteDistribution((TRIGGERED_OUTPUT,), (1.0,))

    trigger_atoms = tuple(x for x in inputs if in_trigger(h, thr, x))
    kernel0 = {}
    kernel_h = {}
    for x in inputs:
        for z in (0, 1):
            kernel0[(x, z)] = safe_kernel
            kernel_h[(x, z)] = safe_kernel
    for x in trigger_atoms:
        kernel_h[(x, 1)] = triggered_kernel

    model0 = LatentModel(inputs, (), kernel0, loss, name="hash-safe")
    model_h = LatentModel(inputs, trigger_atoms, kernel_h, loss,
                          name=f"hash-trigger-k{thr.k}")
    return model0, model_h
