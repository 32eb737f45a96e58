"""Polynomial hash families over prime fields and their exactness oracles.

A family member is a degree-(m-1) polynomial with coefficients drawn
uniformly from F_q; evaluating at any m *distinct* points gives a jointly
uniform tuple over F_q^m (the Vandermonde system is invertible), which is
exactly m-wise independence.  Hash values are normalized to the grid
{0, 1/q, ..., (q-1)/q}; the trigger threshold is quantized as k/q so that
membership statements hold with integer-exact equality rather than up to
rounding.

The oracles in this module enumerate entire coefficient spaces (guarded at
``ENUMERATION_GUARD`` vectors) and verify, with integer arithmetic:

- joint uniformity of value tuples at distinct inputs,
- marginal uniformity at a single input,
- conditional per-query trigger probability k/q along adaptive strategy
  trees (the tower-property mechanism),
- the m * k/q ceiling on the probability any query hits the trigger set,
- the Fubini identity: expected trigger mass of any fixed distribution
  equals k/q.

Adaptive strategies are deterministic decision trees mapping a tuple of
binary responses (hit/no-hit so far) to the next query.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from triggerlab.core import DiscreteDistribution
from triggerlab.errors import DomainError, SizeError

ENUMERATION_GUARD = 10**7


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class PolyHash:
    """Degree-(m-1) polynomial over F_q; coeffs are (a0, ..., a_{m-1})."""

    q: int
    coeffs: tuple

    def __post_init__(self):
        if not is_prime(self.q):
            raise DomainError(f"field modulus {self.q} is not prime")
        if len(self.coeffs) < 1:
            raise DomainError("at least one coefficient required")
        if any(not (0 <= a < self.q) for a in self.coeffs):
            raise DomainError("coefficients must lie in [0, q)")
        object.__setattr__(self, "coeffs", tuple(int(a) for a in self.coeffs))

    @property
    def m(self) -> int:
        return len(self.coeffs)

    def value_int(self, x: int) -> int:
        """Polynomial value in F_q via Horner evaluation."""
        if not (0 <= x < self.q):
            raise DomainError(f"input {x} outside field [0, {self.q})")
        acc = 0
        for a in reversed(self.coeffs):
            acc = (acc * x + a) % self.q
        return acc


@dataclass(frozen=True)
class TriggerThreshold:
    """Trigger count k over F_q; the implied trigger rate is k/q."""

    k: int
    q: int

    def __post_init__(self):
        if not is_prime(self.q):
            raise DomainError(f"field modulus {self.q} is not prime")
        if not (0 <= self.k <= self.q):
            raise DomainError(f"trigger count k={self.k} outside [0, {self.q}]")

    @property
    def epsilon(self) -> float:
        return self.k / self.q


def sample_hash(q: int, m: int, rng: np.random.Generator) -> PolyHash:
    """Draw m i.i.d. uniform field coefficients."""
    if not is_prime(q):
        raise DomainError(f"field modulus {q} is not prime")
    if not (1 <= m <= q):
        raise DomainError(f"degree bound m={m} must satisfy 1 <= m <= q")
    coeffs = tuple(int(c) for c in rng.integers(0, q, size=m))
    return PolyHash(q, coeffs)


def eval_hash(h: PolyHash, x: int) -> float:
    """Hash value normalized to [0, 1) by dividing the field value by q."""
    return h.value_int(x) / h.q


def in_trigger(h: PolyHash, thr: TriggerThreshold, x: int) -> bool:
    """Membership x in S_h, i.e. field value < k (hash value < k/q)."""
    if thr.q != h.q:
        raise DomainError(f"threshold modulus {thr.q} != hash modulus {h.q}")
    return h.value_int(x) < thr.k


def _all_coeff_vectors(q: int, m: int):
    total = q**m
    if total > ENUMERATION_GUARD:
        raise SizeError(f"enumeration needs q^m = {total} coefficient vectors")
    return product(range(q), repeat=m)


def _horner_tuple(coeffs: tuple, xs: tuple, q: int) -> tuple:
    out = []
    for x in xs:
        acc = 0
        for a in reversed(coeffs):
            acc = (acc * x + a) % q
        out.append(acc)
    return tuple(out)


def joint_uniformity_oracle(q: int, m: int, inputs: tuple,
                            counterexample_csv: str | None = None) -> bool:
    """Exhaustively verify joint uniformity of hash values at ``inputs``.

    Enumerates all q^m coefficient vectors and checks the induced map
    coeffs -> (h(x_1), ..., h(x_m)) hits every value tuple exactly once.
    """
    if not is_prime(q):
        raise DomainError(f"field modulus {q} is not prime")
    inputs = tuple(int(x) for x in inputs)
    if len(inputs) != m:
        raise DomainError(f"need exactly m={m} inputs, got {len(inputs)}")
    if len(set(inputs)) != len(inputs):
        raise DomainError(f"inputs must be distinct (Vandermonde), got {inputs}")
    if any(not (0 <= x < q) for x in inputs):
        raise DomainError(f"inputs must lie in [0, {q})")
    counts: dict = {}
    for coeffs in _all_coeff_vectors(q, m):
        values = _horner_tuple(coeffs, inputs, q)
        counts[values] = counts.get(values, 0) + 1
    ok = len(counts) == q**m and all(c == 1 for c in counts.values())
    if not ok and counterexample_csv:
        _dump_count_counterexamples(counterexample_csv, inputs, counts, expected=1)
    return ok


def marginal_uniformity_counts(q: int, m: int, x: int) -> dict:
    """Exact counts of each hash value at input ``x`` over the full family.

    Uniformity means every value appears exactly q^{m-1} times.
    """
    counts = {v: 0 for v in range(q)}
    for coeffs in _all_coeff_vectors(q, m):
        acc = 0
        for a in reversed(coeffs):
            acc = (acc * x + a) % q
        counts[acc] += 1
    return counts


def exact_expected_trigger_mass(q: int, m: int, thr: TriggerThreshold,
                                dist: DiscreteDistribution) -> float:
    """Exact E_h[P_{x~dist}[x in S_h]] over the full coefficient enumeration.

    The per-atom inclusion counts are integer-exact and equal k * q^{m-1}
    for every atom (Fubini); the returned float is the dist-weighted
    average, which matches k/q to float precision.
    """
    if thr.q != q:
        raise DomainError(f"threshold modulus {thr.q} != field modulus {q}")
    counts = trigger_inclusion_counts(q, m, thr)
    atoms = [int(a) for a in dist.atoms]
    if any(not (0 <= a < q) for a in atoms):
        raise DomainError(f"distribution atoms must lie in [0, {q})")
    total_hashes = q**m
    return float(sum(p * counts[a] / total_hashes for a, p in zip(atoms, dist.probs)))


def trigger_inclusion_counts(q: int, m: int, thr: TriggerThreshold) -> dict:
    """Integer count per field element x of hashes with x in S_h."""
    if thr.q != q:
        raise DomainError(f"threshold modulus {thr.q} != field modulus {q}")
    counts = {x: 0 for x in range(q)}
    for coeffs in _all_coeff_vectors(q, m):
        for x in range(q):
            acc = 0
            for a in reversed(coeffs):
                acc = (acc * x + a) % q
            if acc < thr.k:
                counts[x] += 1
    return counts


# ---------------------------------------------------------------------------
# Deterministic adaptive strategy trees and conditional uniformity
# ---------------------------------------------------------------------------

class StrategyTree:
    """Deterministic adaptive strategy: response prefix -> next query.

    ``plan`` maps tuples of binary responses (hit indicators observed so
    far) to the next query; the empty tuple keys the first query.  Depth is
    the query budget.
    """

    def __init__(self, plan: dict, depth: int):
        self.plan = dict(plan)
        self.depth = depth
        for d in range(depth):
            for prefix in product((0, 1), repeat=d):
                if prefix not in self.plan:
                    raise DomainError(f"strategy plan missing prefix {prefix}")

    def query_at(self, responses: tuple) -> int:
        return self.plan[responses]


def all_distinct_strategies(q: int, depth: int):
    """Every deterministic strategy tree that never repeats a query.

    Distinctness along each path is the hypothesis under which conditional
    uniformity is non-degenerate (a repeated query's hit bit is already
    determined by the transcript).
    """
    if depth == 1:
        for x in range(q):
            yield StrategyTree({(): x}, 1)
        return
    if depth != 2:
        raise DomainError("exhaustive strategy listing implemented for depth <= 2")
    for x1 in range(q):
        rest = [x for x in range(q) if x != x1]
        for x2_0 in rest:
            for x2_1 in rest:
                yield StrategyTree({(): x1, (0,): x2_0, (1,): x2_1}, 2)


def random_distinct_strategy(q: int, depth: int, rng: np.random.Generator) -> StrategyTree:
    """A uniformly random strategy tree with distinct queries along each path."""
    plan = {}

    def fill(prefix: tuple, used: tuple):
        choices = [x for x in range(q) if x not in used]
        x = int(rng.choice(choices))
        plan[prefix] = x
        if len(prefix) + 1 < depth:
            for r in (0, 1):
                fill(prefix + (r,), used + (x,))

    fill((), ())
    return StrategyTree(plan, depth)


def conditional_uniformity_oracle(q: int, m: int, thr: TriggerThreshold,
                                  strategy: StrategyTree) -> bool:
    """Verify P[next query hits | transcript prefix] == k/q exactly.

    Enumerates the full family, partitions it by the response prefix the
    strategy realizes, and cross-multiplies integer counts; every reachable
    prefix must satisfy hits * q == k * partition_size.
    """
    if strategy.depth > m:
        raise DomainError("strategy deeper than the family's independence degree")
    family = [tuple(c) for c in _all_coeff_vectors(q, m)]
    for depth in range(strategy.depth):
        partitions: dict = {}
        for coeffs in family:
            responses = []
            for d in range(depth):
                x = strategy.query_at(tuple(responses))
                acc = 0
                for a in reversed(coeffs):
                    acc = (acc * x + a) % q
                responses.append(1 if acc < thr.k else 0)
            partitions.setdefault(tuple(responses), []).append(coeffs)
        for prefix, members in partitions.items():
            x_next = strategy.query_at(prefix)
            hits = 0
            for coeffs in members:
                acc = 0
                for a in reversed(coeffs):
                    acc = (acc * x_next + a) % q
                if acc < thr.k:
                    hits += 1
            if hits * q != thr.k * len(members):
                return False
    return True


def detection_probability_exact(q: int, m: int, thr: TriggerThreshold,
                                strategy: StrategyTree) -> Fraction:
    """Exact P[any query hits S_h] for a deterministic strategy, as a fraction."""
    hits = 0
    total = 0
    for coeffs in _all_coeff_vectors(q, m):
        responses: list = []
        hit = False
        for _ in range(strategy.depth):
            x = strategy.query_at(tuple(responses))
            acc = 0
            for a in reversed(coeffs):
                acc = (acc * x + a) % q
            r = 1 if acc < thr.k else 0
            hit = hit or bool(r)
            responses.append(r)
        hits += 1 if hit else 0
        total += 1
    return Fraction(hits, total)


def _dump_count_counterexamples(path: str, inputs: tuple, counts: dict, expected: int):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("inputs,value_tuple,count,expected\n")
        label = " ".join(str(x) for x in inputs)
        for values, c in sorted(counts.items()):
            if c != expected:
                vals = " ".join(str(v) for v in values)
                fh.write(f"{label},{vals},{c},{expected}\n")
