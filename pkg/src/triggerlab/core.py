"""Domain types for latent context-conditioned models over finite spaces.

A model here is a pair (trigger, kernel): a binary trigger bit per input and
an output kernel ``g(x, z)`` giving a distribution over output atoms for each
input and latent bit.  The observed behavior is ``g(x, trigger(x))``.  A model
is *unobservable* when ``g(x, 0) == g(x, 1)`` exactly on every non-trigger
input, so safe and triggered variants are indistinguishable away from the
trigger set.

All spaces are finite and explicitly enumerable.  "Exact" computations are
floating-point sums compared at the package-wide ``PROB_TOL`` (1e-12); kernel
equality for the unobservability check is exact atom-by-atom equality of the
stored floats, which the construction helpers achieve by sharing kernel
objects.

Values are immutable after construction and safe to share across parallel
workers.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from triggerlab.errors import DomainError

# Absolute tolerance for probability mass checks throughout the package.
PROB_TOL = 1e-12

Atom = object


def _check_unit_interval(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite probability vector over labeled atoms.

    Atoms are opaque hashable labels; probabilities must be non-negative and
    sum to 1 within ``PROB_TOL``.
    """

    atoms: tuple
    probs: tuple

    def __init__(self, atoms: Sequence, probs: Sequence[float]):
        atoms = tuple(atoms)
        probs = tuple(float(p) for p in probs)
        if len(atoms) != len(probs):
            raise DomainError(
                f"atoms and probs must have equal length ({len(atoms)} vs {len(probs)})"
            )
        if not atoms:
            raise DomainError("a distribution needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise DomainError("atom identifiers must be unique")
        for p in probs:
            if p < 0.0:
                raise DomainError(f"negative probability {p!r}")
        total = sum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise DomainError(f"probabilities sum to {total!r}, not 1 within {PROB_TOL}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, atoms: Sequence) -> "DiscreteDistribution":
        atoms = tuple(atoms)
        return cls(atoms, [1.0 / len(atoms)] * len(atoms))

    @classmethod
    def point_mass(cls, atoms: Sequence, atom) -> "DiscreteDistribution":
        atoms = tuple(atoms)
        if atom not in atoms:
            raise DomainError(f"point-mass atom {atom!r} not in atom list")
        return cls(atoms, [1.0 if a == atom else 0.0 for a in atoms])

    @classmethod
    def from_weights(cls, atoms: Sequence, weights: Sequence[float]) -> "DiscreteDistribution":
        weights = [float(w) for w in weights]
        if any(w < 0 for w in weights):
            raise DomainError("weights must be non-negative")
        total = sum(weights)
        if total <= 0:
            raise DomainError("weights must have positive total")
        return cls(atoms, [w / total for w in weights])

    @cached_property
    def _index(self) -> dict:
        return {a: i for i, a in enumerate(self.atoms)}

    @cached_property
    def _cumulative(self) -> np.ndarray:
        cum = np.cumsum(np.asarray(self.probs, dtype=float))
        cum[-1] = 1.0
        return cum

    def prob(self, atom) -> float:
        """Probability of ``atom`` (0.0 for atoms outside the support list)."""
        i = self._index.get(atom)
        return 0.0 if i is None else self.probs[i]

    @property
    def support(self) -> tuple:
        return tuple(a for a, p in zip(self.atoms, self.probs) if p > 0.0)

    def sample(self, rng: np.random.Generator):
        """Draw one atom by inverse-CDF on a uniform variate."""
        return self.sample_from_uniform(rng.random())

    def sample_from_uniform(self, u: float):
        """Invert the CDF at ``u``; identical kernels map equal u to equal atoms."""
        i = int(np.searchsorted(self._cumulative, u, side="right"))
        return self.atoms[min(i, len(self.atoms) - 1)]

    def sample_indices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Vectorized draw of ``size`` atom indices."""
        u = rng.random(size)
        idx = np.searchsorted(self._cumulative, u, side="right")
        return np.minimum(idx, len(self.atoms) - 1)

    def as_vector(self, atom_order: Sequence) -> np.ndarray:
        """Probability vector aligned to ``atom_order`` (missing atoms get 0)."""
        return np.array([self.prob(a) for a in atom_order], dtype=float)


class ConditionalLosses(NamedTuple):
    """Conditional expected losses; ``None`` flags a zero-mass conditioning event."""

    ell0: float | None
    ell1: float | None


@dataclass(frozen=True)
class RiskParams:
    """Scalar parameter block for trigger separation and risk tolerances.

    ``epsilon``/``delta`` are the trigger masses under the evaluation and
    deployment distributions, ``ell0``/``ell1`` the conditional expected
    losses off/on trigger, ``c`` the per-trigger distinguishability level,
    ``epsilon_R`` the risk-estimation tolerance and ``eta`` the allowed
    failure probability.
    """

    epsilon: float
    delta: float
    ell0: float
    ell1: float
    epsilon_R: float
    eta: float
    c: float = 1.0

    def __post_init__(self):
        _check_unit_interval("epsilon", self.epsilon)
        _check_unit_interval("delta", self.delta)
        _check_unit_interval("ell0", self.ell0)
        _check_unit_interval("ell1", self.ell1)
        if self.delta <= self.epsilon:
            raise DomainError(
                f"delta ({self.delta!r}) must exceed epsilon ({self.epsilon!r})"
            )
        if not (0.0 < self.c <= 1.0):
            raise DomainError(f"c must lie in (0, 1], got {self.c!r}")
        if self.epsilon_R <= 0.0:
            raise DomainError(f"epsilon_R must be positive, got {self.epsilon_R!r}")
        if not (0.0 < self.eta < 1.0):
            raise DomainError(f"eta must lie in (0, 1), got {self.eta!r}")

    @property
    def loss_gap(self) -> float:
        """L = |ell1 - ell0|."""
        return abs(self.ell1 - self.ell0)

    @property
    def separation(self) -> float:
        """Delta = delta - epsilon."""
        return self.delta - self.epsilon


@dataclass(frozen=True)
class LatentModel:
    """A finite context-conditioned model: trigger bit plus two-armed kernel.

    ``trigger`` may be a collection of trigger inputs or a callable
    ``x -> {0, 1}``.  ``kernel`` may be a mapping keyed by ``(x, z)`` or a
    callable ``(x, z) -> DiscreteDistribution``.  ``loss`` maps output atoms
    to values in [0, 1] (mapping or callable).  Mapping-backed models are
    validated eagerly; callable-backed models (used for very large spaces)
    are spot-checked on the first input only, and the structural check
    operations below do the full sweeps.
    """

    input_space: tuple
    trigger: object
    kernel: object
    loss: object
    name: str = field(default="", compare=False)

    def __init__(self, input_space, trigger, kernel, loss, name: str = ""):
        input_space = tuple(input_space)
        if not input_space:
            raise DomainError("input space must be nonempty")
        if len(set(input_space)) != len(input_space):
            raise DomainError("input atoms must be unique")
        if not callable(trigger):
            trigger = frozenset(trigger)
            unknown = trigger - set(input_space)
            if unknown:
                raise DomainError(f"trigger atoms outside input space: {sorted(map(repr, unknown))}")
        object.__setattr__(self, "input_space", input_space)
        object.__setattr__(self, "trigger", trigger)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "loss", loss)
        object.__setattr__(self, "name", name)
        self._validate()

    def _validate(self):
        if isinstance(self.kernel, Mapping):
            for x in self.input_space:
                for z in (0, 1):
                    if (x, z) not in self.kernel:
                        raise DomainError(f"kernel missing arm ({x!r}, {z})")
            atoms = self.output_atoms
            if isinstance(self.loss, Mapping):
                missing = [a for a in atoms if a not in self.loss]
                if missing:
                    raise DomainError(f"loss undefined for output atoms {missing!r}")
            for a in atoms:
                _check_unit_interval(f"loss({a!r})", self.loss_of(a))
        else:
            x0 = self.input_space[0]
            for z in (0, 1):
                d = self.output_dist(x0, z)
                if not isinstance(d, DiscreteDistribution):
                    raise DomainError("kernel must produce DiscreteDistribution values")
                for a in d.atoms:
                    _check_unit_interval(f"loss({a!r})", self.loss_of(a))

    def trigger_bit(self, x) -> int:
        if callable(self.trigger):
            return 1 if self.trigger(x) else 0
        return 1 if x in self.trigger else 0

    @cached_property
    def trigger_atoms(self) -> tuple:
        if callable(self.trigger):
            return tuple(x for x in self.input_space if self.trigger(x))
        return tuple(x for x in self.input_space if x in self.trigger)

    def output_dist(self, x, z: int) -> DiscreteDistribution:
        if isinstance(self.kernel, Mapping):
            try:
                return self.kernel[(x, z)]
            except KeyError:
                raise DomainError(f"no kernel for ({x!r}, {z})") from None
        return self.kernel(x, z)

    def behavior_dist(self, x) -> DiscreteDistribution:
        """Output distribution under the model's own trigger bit."""
        return self.output_dist(x, self.trigger_bit(x))

    def loss_of(self, output_atom) -> float:
        if isinstance(self.loss, Mapping):
            try:
                return float(self.loss[output_atom])
            except KeyError:
                raise DomainError(f"no loss value for output atom {output_atom!r}") from None
        return float(self.loss(output_atom))

    @cached_property
    def output_atoms(self) -> tuple:
        """Union of kernel output atoms (mapping-backed models only)."""
        if not isinstance(self.kernel, Mapping):
            raise DomainError("output_atoms requires a mapping-backed kernel")
        seen: dict = {}
        for dist in self.kernel.values():
            for a in dist.atoms:
                seen.setdefault(a, None)
        return tuple(seen)

    def point_risk(self, x) -> float:
        """Expected loss of the model's behavior on input ``x``."""
        d = self.behavior_dist(x)
        return float(sum(p * self.loss_of(a) for a, p in zip(d.atoms, d.probs)))


class UnobservabilityReport(NamedTuple):
    ok: bool
    violations: tuple


def deployment_risk(p_dep: float, ell0: float, ell1: float) -> float:
    """Risk mixture p*ell1 + (1-p)*ell0 at trigger prevalence ``p_dep``."""
    _check_unit_interval("p_dep", p_dep)
    _check_unit_interval("ell0", ell0)
    _check_unit_interval("ell1", ell1)
    return p_dep * ell1 + (1.0 - p_dep) * ell0


def trigger_mass(model: LatentModel, dist: DiscreteDistribution) -> float:
    """Probability that an input drawn from ``dist`` lands in the trigger set."""
    extra = [a for a in dist.support if a not in set(model.input_space)]
    if extra:
        raise DomainError(f"distribution atoms outside model input space: {extra!r}")
    return float(sum(p for a, p in zip(dist.atoms, dist.probs) if model.trigger_bit(a)))


def check_unobservability(model: LatentModel) -> UnobservabilityReport:
    """Verify g(x,0) == g(x,1) exactly (atoms and stored probs) off-trigger."""
    violations = []
    for x in model.input_space:
        if model.trigger_bit(x):
            continue
        d0 = model.output_dist(x, 0)
        d1 = model.output_dist(x, 1)
        if d0.atoms != d1.atoms or d0.probs != d1.probs:
            violations.append(x)
    return UnobservabilityReport(not violations, tuple(violations))


def check_trigger_distinguishability(model: LatentModel) -> float:
    """Minimum TV(g(x,0), g(x,1)) over trigger inputs.

    Equals 1 exactly iff the two arms have disjoint supports on every
    trigger input (perfect distinguishability); the value doubles as the
    level ``c`` of partial distinguishability.
    """
    from triggerlab.tvcalc import tv_distance

    triggers = model.trigger_atoms
    if not triggers:
        raise DomainError("model has an empty trigger set")
    return min(tv_distance(model.output_dist(x, 0), model.output_dist(x, 1)) for x in triggers)


def conditional_losses(model: LatentModel, dist: DiscreteDistribution) -> ConditionalLosses:
    """Exact conditional expected losses given the latent bit under ``dist``.

    A zero-mass conditioning event yields ``None`` for that side rather than
    an error: a model with an empty trigger set genuinely has no conditional
    loss on trigger inputs.
    """
    extra = [a for a in dist.support if a not in set(model.input_space)]
    if extra:
        raise DomainError(f"distribution atoms outside model input space: {extra!r}")
    mass = [0.0, 0.0]
    weighted = [0.0, 0.0]
    for x, p in zip(dist.atoms, dist.probs):
        if p == 0.0:
            continue
        z = model.trigger_bit(x)
        mass[z] += p
        weighted[z] += p * model.point_risk(x)
    ell0 = weighted[0] / mass[0] if mass[0] > 0.0 else None
    ell1 = weighted[1] / mass[1] if mass[1] > 0.0 else None
    return ConditionalLosses(ell0, ell1)


def expected_risk(model: LatentModel, dist: DiscreteDistribution) -> float:
    """Expected loss of the model's behavior under ``dist``."""
    extra = [a for a in dist.support if a not in set(model.input_space)]
    if extra:
        raise DomainError(f"distribution atoms outside model input space: {extra!r}")
    return float(sum(p * model.point_risk(x) for x, p in zip(dist.atoms, dist.probs) if p))


# ---------------------------------------------------------------------------
# Plain-text fixture format
#
# Models and distributions serialize to a line-oriented key = value format so
# experiment configs can reference named instances on disk.  Atom labels are
# whitespace-free tokens.  Schema:
#
#   format = latent-model-v1
#   [inputs]
#   atoms = t u v
#   trigger = t
#   [kernel t 0]
#   atoms = ok
#   probs = 1.0
#   ...one kernel section per (input, bit)...
#   [loss]
#   ok = 0.0
#
#   format = distribution-v1
#   atoms = t u v
#   probs = 0.1 0.45 0.45
# ---------------------------------------------------------------------------

MODEL_FORMAT = "latent-model-v1"
DISTRIBUTION_FORMAT = "distribution-v1"


def _fmt_float(x: float) -> str:
    return repr(float(x))


def format_distribution(dist: DiscreteDistribution) -> str:
    atoms = " ".join(str(a) for a in dist.atoms)
    probs = " ".join(_fmt_float(p) for p in dist.probs)
    return f"format = {DISTRIBUTION_FORMAT}\natoms = {atoms}\nprobs = {probs}\n"


def parse_distribution(text: str) -> DiscreteDistribution:
    fields = _parse_kv_lines(text)
    if fields.get("format") != DISTRIBUTION_FORMAT:
        raise DomainError(f"expected 'format = {DISTRIBUTION_FORMAT}'")
    atoms = fields["atoms"].split()
    probs = [float(t) for t in fields["probs"].split()]
    return DiscreteDistribution(atoms, probs)


def format_model(model: LatentModel) -> str:
    """Serialize a mapping-backed model to the documented plain-text schema.

    Atom labels are written with str(); round-tripping therefore yields
    string-labeled atoms regardless of the original label type.
    """
    if not isinstance(model.kernel, Mapping):
        raise DomainError("only mapping-backed models are serializable")
    lines = [f"format = {MODEL_FORMAT}"]
    if model.name:
        lines.append(f"name = {model.name}")
    lines.append("[inputs]")
    lines.append("atoms = " + " ".join(str(x) for x in model.input_space))
    lines.append("trigger = " + " ".join(str(x) for x in model.trigger_atoms))
    for x in model.input_space:
        for z in (0, 1):
            d = model.output_dist(x, z)
            lines.append(f"[kernel {x} {z}]")
            lines.append("atoms = " + " ".join(str(a) for a in d.atoms))
            lines.append("probs = " + " ".join(_fmt_float(p) for p in d.probs))
    lines.append("[loss]")
    for a in model.output_atoms:
        lines.append(f"{a} = {_fmt_float(model.loss_of(a))}")
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> LatentModel:
    sections = _parse_sections(text)
    head = sections.get("", {})
    if head.get("format") != MODEL_FORMAT:
        raise DomainError(f"expected 'format = {MODEL_FORMAT}'")
    try:
        inputs_sec = sections["inputs"]
        atoms = inputs_sec["atoms"].split()
        trigger = inputs_sec.get("trigger", "").split()
        loss_sec = sections["loss"]
    except KeyError as exc:
        raise DomainError(f"missing fixture section/key: {exc}") from None
    kernel = {}
    for name, fields in sections.items():
        if not name.startswith("kernel "):
            continue
        parts = name.split()
        if len(parts) != 3 or parts[2] not in ("0", "1"):
            raise DomainError(f"bad kernel section header [{name}]")
        x, z = parts[1], int(parts[2])
        kernel[(x, z)] = DiscreteDistribution(
            fields["atoms"].split(), [float(t) for t in fields["probs"].split()]
        )
    loss = {a: float(v) for a, v in loss_sec.items()}
    return LatentModel(atoms, trigger, kernel, loss, name=head.get("name", ""))


def _parse_kv_lines(text: str) -> dict:
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DomainError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    return fields


def _parse_sections(text: str) -> dict:
    sections: dict = {"": {}}
    current = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in sections:
                raise DomainError(f"line {lineno}: duplicate section [{current}]")
            sections[current] = {}
            continue
        if "=" not in line:
            raise DomainError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        sections[current][key.strip()] = value.strip()
    return sections
