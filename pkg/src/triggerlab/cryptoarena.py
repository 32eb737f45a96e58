"""Toy trapdoor arena: a keyed bijection separating deployment from evaluators.

The "trapdoor function" is a 4-round balanced Feistel network on n-bit
strings keyed by a secret seed.  It is a structural bijection and carries
NO one-wayness claim; the arena verifies only the information-theoretic
content of the separation at finite n:

- inputs are pairs (x, pi); the trigger set is {(x, pi) : forward(pi) = x},
  whose mass under uniform independent pairs is exactly 2^-n,
- a deployment environment holding the inversion capability samples
  x uniformly and sets pi = invert(x), so every deployment sample triggers
  (trigger rate exactly 1),
- an evaluator with only query access finds a trigger with probability at
  most m * 2^-n after m queries (union-bound ceiling), matched by the
  closed-form 1 - (1 - 2^-n)^m for uniform guessing,
- granting the forward map (breach demo) or the inversion capability
  (control arm) collapses the separation in a single query.

Access control is enforced by the oracle object handed to evaluators: the
forward and invert capabilities raise ``AccessViolation`` unless the demo
arm explicitly grants them, and instance keys never appear in reprs or
result files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from triggerlab.core import DiscreteDistribution, LatentModel
from triggerlab.errors import AccessViolation, DomainError
from triggerlab.rngstream import replicate_rng

SAFE_OUTPUT = "ok"
TRIGGERED_OUTPUT = "boom"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_ROUNDS = 4

MATERIALIZE_MAX_N = 8   # largest n for which the full pair space is built
ENUMERATE_MAX_N = 10    # largest n for exact trigger-mass enumeration


def _mix64(v: int) -> int:
    """splitmix64 finalizer; a fixed 64-bit mixing permutation."""
    v &= _MASK64
    v = ((v ^ (v >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    v = ((v ^ (v >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (v ^ (v >> 31)) & _MASK64


@dataclass(frozen=True)
class TrapdoorInstance:
    """Keyed n-bit bijection with the key as trapdoor.

    The secret seed and derived round keys are excluded from reprs; result
    files must never contain them.
    """

    n: int
    secret_seed: int = field(repr=False)
    round_keys: tuple = field(repr=False, default=())

    def __post_init__(self):
        if not (4 <= self.n <= 24):
            raise DomainError(f"bit width n={self.n} outside [4, 24]")
        if self.n % 2:
            raise DomainError("balanced Feistel needs an even bit width")
        keys = tuple(
            _mix64(self.secret_seed + (i + 1) * _GOLDEN) for i in range(_ROUNDS)
        )
        object.__setattr__(self, "round_keys", keys)

    @property
    def half(self) -> int:
        return self.n // 2

    @property
    def half_mask(self) -> int:
        return (1 << self.half) - 1

    def _round_fn(self, r: int, key: int) -> int:
        return _mix64(r ^ key) & self.half_mask

    def forward(self, pi: int) -> int:
        """The keyed bijection on n-bit values."""
        self._check_width("pi", pi)
        left = pi >> self.half
        right = pi & self.half_mask
        for key in self.round_keys:
            left, right = right, left ^ self._round_fn(right, key)
        return (left << self.half) | right

    def invert(self, x: int) -> int:
        """Trapdoor inversion: undo the rounds in reverse order."""
        self._check_width("x", x)
        left = x >> self.half
        right = x & self.half_mask
        for key in reversed(self.round_keys):
            left, right = right ^ self._round_fn(left, key), left
        return (left << self.half) | right

    def in_trigger(self, x: int, pi: int) -> bool:
        return self.forward(pi) == x

    def _check_width(self, name: str, v: int) -> None:
        if not (0 <= v < (1 << self.n)):
            raise DomainError(f"{name}={v} is not an {self.n}-bit value")


@dataclass(frozen=True)
class ArenaInput:
    """An (x, pi) query pair of n-bit strings."""

    x: int
    pi: int

    def validate(self, n: int) -> None:
        for name, v in (("x", self.x), ("pi", self.pi)):
            if not (0 <= v < (1 << n)):
                raise DomainError(f"{name}={v} is not an {n}-bit value")


def gen_instance(n: int, rng: np.random.Generator) -> TrapdoorInstance:
    """Draw a fresh instance; bijectivity is structural (Feistel rounds)."""
    seed = int(rng.integers(0, 2**63, dtype=np.int64))
    return TrapdoorInstance(n=n, secret_seed=seed)


def verify_bijection(instance: TrapdoorInstance) -> bool:
    """Exhaustive forward-table and round-trip check (n <= 16)."""
    if instance.n > 16:
        raise DomainError("exhaustive bijectivity check limited to n <= 16")
    size = 1 << instance.n
    table = [instance.forward(v) for v in range(size)]
    if len(set(table)) != size:
        return False
    return all(instance.invert(table[v]) == v for v in range(size))


class ExactTriggerMass(NamedTuple):
    mass: float
    trigger_count: int
    pair_count: int


def exact_trigger_mass(instance: TrapdoorInstance) -> ExactTriggerMass:
    """Trigger mass under uniform independent (x, pi) by full pair enumeration."""
    if instance.n > ENUMERATE_MAX_N:
        raise DomainError(f"pair enumeration limited to n <= {ENUMERATE_MAX_N}")
    size = 1 << instance.n
    table = np.array([instance.forward(pi) for pi in range(size)], dtype=np.int64)
    hits = int((table[:, None] == np.arange(size, dtype=np.int64)[None, :]).sum())
    total = size * size
    return ExactTriggerMass(hits / total, hits, total)


def build_model_pair(instance: TrapdoorInstance) -> tuple:
    """Materialized (safe, unsafe) latent models over the full pair space.

    The pair space has 2^(2n) atoms; materialization is capped at
    n <= MATERIALIZE_MAX_N (exact checks beyond that use the streaming
    enumerator above).  Kernels are callables sharing one safe arm, so
    unobservability is an object identity off-trigger.
    """
    if instance.n > MATERIALIZE_MAX_N:
        raise DomainError(f"model materialization limited to n <= {MATERIALIZE_MAX_N}")
    size = 1 << instance.n
    inputs = tuple((x, pi) for x in range(size) for pi in range(size))
    ok_dist = DiscreteDistribution((SAFE_OUTPUT,), (1.0,))
    boom_dist = DiscreteDistribution((TRIGGERED_OUTPUT,), (1.0,))
    table = {pi: instance.forward(pi) for pi in range(size)}

    def trigger(pair):
        x, pi = pair
        return table[pi] == x

    def unsafe_kernel(pair, z):
        if z == 1 and trigger(pair):
            return boom_dist
        return ok_dist

    def safe_kernel(pair, z):
        return ok_dist

    loss = {SAFE_OUTPUT: 0.0, TRIGGERED_OUTPUT: 1.0}
    safe = LatentModel(inputs, lambda pair: False, safe_kernel, loss,
                       name=f"arena-safe-n{instance.n}")
    unsafe = LatentModel(inputs, trigger, unsafe_kernel, loss,
                         name=f"arena-unsafe-n{instance.n}")
    return safe, unsafe


def build_trigger_model(instance: TrapdoorInstance) -> LatentModel:
    """The unsafe latent model whose trigger set is {(x, pi): forward(pi) = x}."""
    return build_model_pair(instance)[1]


def sample_deployment(instance: TrapdoorInstance, rng: np.random.Generator) -> ArenaInput:
    """Deployment draw: x uniform, pi = invert(x); always in the trigger set."""
    x = int(rng.integers(0, 1 << instance.n))
    return ArenaInput(x=x, pi=instance.invert(x))


class ArenaOracle:
    """The query interface evaluators receive.

    Exposes only (x, pi) -> output; ``forward`` and ``invert`` raise
    ``AccessViolation`` unless the game arm granted them.  The oracle tracks
    trigger hits itself so games can measure find rates without giving the
    evaluator any extra signal.
    """

    def __init__(self, instance: TrapdoorInstance, unsafe: bool, budget: int,
                 allow_forward: bool = False, allow_invert: bool = False):
        self._instance = instance
        self._unsafe = unsafe
        self.budget = budget
        self.n = instance.n
        self._allow_forward = allow_forward
        self._allow_invert = allow_invert
        self.queries_made = 0
        self.trigger_hits = 0

    def query(self, x: int, pi: int) -> str:
        if self.queries_made >= self.budget:
            raise DomainError(f"query budget {self.budget} exhausted")
        self._instance._check_width("x", x)
        self._instance._check_width("pi", pi)
        self.queries_made += 1
        hit = self._instance.in_trigger(x, pi)
        if hit:
            self.trigger_hits += 1
        return TRIGGERED_OUTPUT if (hit and self._unsafe) else SAFE_OUTPUT

    def forward(self, pi: int) -> int:
        if not self._allow_forward:
            raise AccessViolation("forward map is not part of the evaluator interface")
        return self._instance.forward(pi)

    def invert(self, x: int) -> int:
        if not self._allow_invert:
            raise AccessViolation("trapdoor inversion is not part of the evaluator interface")
        return self._instance.invert(x)


class UniformGuessingEvaluator:
    """Queries uniform pairs; reports unsafe iff a triggered output was seen."""

    name = "uniform-guessing"

    def play(self, oracle: ArenaOracle, rng: np.random.Generator) -> str:
        unsafe_seen = False
        size = 1 << oracle.n
        for _ in range(oracle.budget):
            x = int(rng.integers(0, size))
            pi = int(rng.integers(0, size))
            if oracle.query(x, pi) == TRIGGERED_OUTPUT:
                unsafe_seen = True
        return "unsafe" if unsafe_seen else "safe"


class ForwardConstructionEvaluator:
    """Builds a trigger pair via the forward map; falls back to guessing.

    With the forward capability granted one query suffices: pick any pi,
    compute x = forward(pi), query (x, pi).  When the capability is revoked
    the attempt raises ``AccessViolation`` and the evaluator degrades to
    uniform guessing, reproducing the guessing-ceiling rates.
    """

    name = "forward-construction"

    def play(self, oracle: ArenaOracle, rng: np.random.Generator) -> str:
        size = 1 << oracle.n
        pi = int(rng.integers(0, size))
        try:
            x = oracle.forward(pi)
        except AccessViolation:
            return UniformGuessingEvaluator().play(oracle, rng)
        return "unsafe" if oracle.query(x, pi) == TRIGGERED_OUTPUT else "safe"


class TrapdoorAssistedEvaluator:
    """Control arm holding the inversion capability: one deployment-style query."""

    name = "trapdoor-assisted"

    def play(self, oracle: ArenaOracle, rng: np.random.Generator) -> str:
        size = 1 << oracle.n
        x = int(rng.integers(0, size))
        pi = oracle.invert(x)
        return "unsafe" if oracle.query(x, pi) == TRIGGERED_OUTPUT else "safe"


@dataclass(frozen=True)
class ArenaGameResult:
    evaluator: str
    replicates: int
    find_rate: float
    correct_rate: float

    @property
    def advantage(self) -> float:
        """Distinguishing advantage 2 * |P[correct] - 1/2|, in [0, 1]."""
        return 2.0 * abs(self.correct_rate - 0.5)


def evaluator_game(instance: TrapdoorInstance, evaluator, m: int, seed: int,
                   replicates: int, allow_forward: bool = False,
                   allow_invert: bool = False) -> ArenaGameResult:
    """Distinguishing game: safe or unsafe model w.p. 1/2 each per replicate.

    ``find_rate`` is the fraction of replicates where any query landed in
    the instance's trigger set (model-independent); ``correct_rate`` the
    fraction of correct safe/unsafe verdicts.
    """
    if m < 0:
        raise DomainError("query budget must be >= 0")
    finds = 0
    correct = 0
    for rep in range(replicates):
        rng = replicate_rng(seed, rep + 1)
        unsafe = bool(rng.random() < 0.5)
        oracle = ArenaOracle(instance, unsafe, m,
                             allow_forward=allow_forward, allow_invert=allow_invert)
        verdict = evaluator.play(oracle, rng) if m > 0 else "safe"
        if oracle.trigger_hits > 0:
            finds += 1
        if (verdict == "unsafe") == unsafe:
            correct += 1
    return ArenaGameResult(getattr(evaluator, "name", type(evaluator).__name__),
                           replicates, finds / replicates, correct / replicates)


class BreachDemoResult(NamedTuple):
    granted: ArenaGameResult
    revoked: ArenaGameResult


def forward_oracle_breach_demo(instance: TrapdoorInstance, m: int, seed: int,
                               replicates: int) -> BreachDemoResult:
    """Paired demonstration of the no-forward-oracle condition.

    The granted arm hands the evaluator the forward map (advantage ~1 after
    one query); the revoked arm runs the same evaluator without it, which
    degrades to uniform-guessing rates.
    """
    evaluator = ForwardConstructionEvaluator()
    granted = evaluator_game(instance, evaluator, m, seed, replicates,
                             allow_forward=True)
    revoked = evaluator_game(instance, evaluator, m, seed, replicates,
                             allow_forward=False)
    return BreachDemoResult(granted, revoked)
