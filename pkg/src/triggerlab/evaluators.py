"""Passive and adaptive evaluator games against latent-trigger models.

An evaluator is a query policy plus an estimator.  Policies map the current
transcript (and policy-local randomness) to the next input atom; estimators
map the final transcript to a risk estimate in [0, 1].  Neither sees model
internals: the only information channel is the (query, response) history.

The module provides:

- single-run drivers ``run_passive`` / ``run_adaptive``,
- geometric first-hit sampling with a censoring cap,
- ``exact_two_point_bayes_risk``: the optimal L1 Bayes risk of the uniform
  two-point prior, by full enumeration of the m-query observation space,
- ``hash_prior_bayes_game``: the Monte Carlo Bayes game against the mixed
  prior (safe model w.p. 1/2, hash-trigger model with uniform coefficients
  w.p. 1/2), reporting each strategy's mean absolute risk error against the
  per-draw true deployment risk,
- ``transcript_indistinguishability_check``: paired runs with a shared
  random stream that must produce bit-identical transcripts whenever no
  query lands in the trigger set.

Replicated routines derive one Philox stream per (seed, replicate index),
so results are independent of execution order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from triggerlab.constructions import SAFE_OUTPUT, TRIGGERED_OUTPUT, field_distribution
from triggerlab.core import DiscreteDistribution, LatentModel, trigger_mass
from triggerlab.errors import DomainError, SizeError
from triggerlab.hashfam import is_prime
from triggerlab.rngstream import replicate_rng
from triggerlab.tvcalc import ENUMERATION_GUARD, observation_distribution

_FIRST_HIT_CHUNK = 4096


class Transcript:
    """Append-only (query, response) history with a fixed budget."""

    __slots__ = ("budget", "_entries")

    def __init__(self, budget: int):
        if budget < 0:
            raise DomainError("budget must be >= 0")
        self.budget = budget
        self._entries: list = []

    def append(self, query, response) -> None:
        if len(self._entries) >= self.budget:
            raise DomainError(f"transcript budget {self.budget} exhausted")
        self._entries.append((query, response))

    @property
    def entries(self) -> tuple:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)


# ---------------------------------------------------------------------------
# Query policies.  All are stateless across episodes: everything they need
# is reconstructed from the transcript, so one policy object can serve many
# replicates (and runs in paired mode behave identically on equal prefixes).
# ---------------------------------------------------------------------------

class IIDResampler:
    """Draws every query i.i.d. from a fixed distribution."""

    name = "iid-resample"

    def __init__(self, dist: DiscreteDistribution):
        self.dist = dist

    def next_query(self, transcript: Transcript, rng: np.random.Generator):
        return self.dist.sample(rng)


class Sweep:
    """Deterministic cyclic sweep through the input atoms."""

    name = "sweep"

    def __init__(self, inputs: Sequence):
        self.inputs = tuple(inputs)

    def next_query(self, transcript: Transcript, rng: np.random.Generator):
        return self.inputs[len(transcript) % len(self.inputs)]


class UniformWithoutReplacement:
    """Uniform over the not-yet-queried atoms; uniform over all once exhausted."""

    name = "no-replace"

    def __init__(self, inputs: Sequence):
        self.inputs = tuple(inputs)

    def next_query(self, transcript: Transcript, rng: np.random.Generator):
        seen = {q for q, _ in transcript}
        fresh = [x for x in self.inputs if x not in seen]
        pool = fresh if fresh else list(self.inputs)
        return pool[int(rng.integers(0, len(pool)))]


class Hunter:
    """Repeats any input whose response deviated from the safe baseline.

    Until a deviation is seen it sweeps; afterwards it hammers the first
    deviating input, the most transcript-reactive behavior in the fleet.
    """

    name = "hunter"

    def __init__(self, inputs: Sequence, safe_response: dict):
        self.inputs = tuple(inputs)
        self.safe_response = dict(safe_response)

    def next_query(self, transcript: Transcript, rng: np.random.Generator):
        for q, r in transcript:
            if self.safe_response.get(q) != r:
                return q
        return self.inputs[len(transcript) % len(self.inputs)]


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

class NaiveEmpiricalLoss:
    """Mean observed loss over the transcript."""

    name = "naive-mean"

    def __init__(self, loss_of: Callable, empty_estimate: float = 0.0):
        self.loss_of = loss_of
        self.empty_estimate = empty_estimate

    def estimate(self, transcript: Transcript) -> float:
        if len(transcript) == 0:
            return self.empty_estimate
        return sum(self.loss_of(r) for _, r in transcript) / len(transcript)


class TwoPointPosteriorMedian:
    """L1-optimal plug-in for the two-point prior.

    If any response deviates from the safe baseline the model is certainly
    the triggered one: report its mean risk.  Otherwise the posterior stays
    at the 1/2-1/2 prior and any point between the two risks minimizes the
    expected absolute error; the midpoint is used.
    """

    name = "posterior-median"

    def __init__(self, safe_risk: float, unsafe_mean_risk: float,
                 deviates: Callable[[tuple], bool]):
        self.safe_risk = safe_risk
        self.unsafe_mean_risk = unsafe_mean_risk
        self.deviates = deviates

    def estimate(self, transcript: Transcript) -> float:
        if any(self.deviates(entry) for entry in transcript):
            return self.unsafe_mean_risk
        return 0.5 * (self.safe_risk + self.unsafe_mean_risk)


class MidpointThreshold:
    """Classify by thresholding the empirical mean loss at the risk midpoint."""

    name = "midpoint-threshold"

    def __init__(self, safe_risk: float, unsafe_risk: float, loss_of: Callable):
        self.safe_risk = safe_risk
        self.unsafe_risk = unsafe_risk
        self.loss_of = loss_of

    def estimate(self, transcript: Transcript) -> float:
        if len(transcript) == 0:
            return self.safe_risk
        mean = sum(self.loss_of(r) for _, r in transcript) / len(transcript)
        midpoint = 0.5 * (self.safe_risk + self.unsafe_risk)
        return self.unsafe_risk if mean >= midpoint else self.safe_risk


@dataclass(frozen=True)
class EvaluatorStrategy:
    """A named (query policy, estimator) pairing."""

    name: str
    policy: object
    estimator: object


def deterministic_safe_response(model: LatentModel) -> dict:
    """Map input -> output for a model whose behavior kernels are point masses."""
    resp = {}
    for x in model.input_space:
        d = model.behavior_dist(x)
        support = d.support
        if len(support) != 1:
            raise DomainError(f"behavior on {x!r} is not deterministic")
        resp[x] = support[0]
    return resp


# ---------------------------------------------------------------------------
# Single-run drivers
# ---------------------------------------------------------------------------

def run_passive(model: LatentModel, dist_eval: DiscreteDistribution, m: int,
                strategy: EvaluatorStrategy, rng: np.random.Generator):
    """Draw m i.i.d. queries from ``dist_eval`` and observe model behavior."""
    if m < 1:
        raise DomainError("m must be >= 1")
    transcript = Transcript(m)
    idx = dist_eval.sample_indices(rng, m)
    for i in idx:
        x = dist_eval.atoms[int(i)]
        y = model.behavior_dist(x).sample(rng)
        transcript.append(x, y)
    return strategy.estimator.estimate(transcript), transcript


def run_adaptive(model: LatentModel, m: int, strategy: EvaluatorStrategy,
                 rng: np.random.Generator):
    """Let the strategy choose each query from the prefix transcript."""
    if m < 1:
        raise DomainError("m must be >= 1")
    inputs = set(model.input_space)
    transcript = Transcript(m)
    for _ in range(m):
        x = strategy.policy.next_query(transcript, rng)
        if x not in inputs:
            raise DomainError(f"strategy emitted input {x!r} outside the model space")
        y = model.behavior_dist(x).sample(rng)
        transcript.append(x, y)
    return strategy.estimator.estimate(transcript), transcript


# ---------------------------------------------------------------------------
# First-hit times
# ---------------------------------------------------------------------------

def default_censor_cap(epsilon: float) -> int:
    """Cap ceil(20/epsilon): censoring probability <= e^-20, negligible."""
    if epsilon <= 0:
        raise DomainError("epsilon must be positive to choose a cap")
    return int(np.ceil(20.0 / epsilon))


def first_hit_time(model: LatentModel, dist_eval: DiscreteDistribution,
                   rng: np.random.Generator, cap: int):
    """1-based index of the first i.i.d. sample in the trigger set, or None."""
    if cap < 1:
        raise DomainError("cap must be >= 1")
    for i in range(1, cap + 1):
        if model.trigger_bit(dist_eval.sample(rng)):
            return i
    return None


def first_hit_times(model: LatentModel, dist_eval: DiscreteDistribution,
                    seed: int, replicates: int, cap: int | None = None):
    """Vectorized replicated first-hit sampling.

    Returns (times, censored): ``times[i]`` is the 1-based hit index for
    replicate i (undefined where ``censored[i]``).  Each replicate consumes
    its own (seed, index) stream; sampling draws real atoms from
    ``dist_eval`` and tests trigger membership, not a geometric shortcut.
    """
    if cap is None:
        cap = default_censor_cap(trigger_mass(model, dist_eval))
    if cap < 1:
        raise DomainError("cap must be >= 1")
    indicator = np.array([bool(model.trigger_bit(a)) for a in dist_eval.atoms])
    cum = np.cumsum(np.asarray(dist_eval.probs, dtype=float))
    cum[-1] = 1.0
    n_atoms = len(dist_eval.atoms)
    times = np.zeros(replicates, dtype=np.int64)
    censored = np.zeros(replicates, dtype=bool)
    for rep in range(replicates):
        rng = replicate_rng(seed, rep + 1)
        drawn = 0
        hit_at = None
        while drawn < cap:
            n = min(_FIRST_HIT_CHUNK, cap - drawn)
            idx = np.minimum(
                np.searchsorted(cum, rng.random(n), side="right"), n_atoms - 1
            )
            hits = indicator[idx]
            pos = np.flatnonzero(hits)
            if pos.size:
                hit_at = drawn + int(pos[0]) + 1
                break
            drawn += n
        if hit_at is None:
            censored[rep] = True
        else:
            times[rep] = hit_at
    return times, censored


# ---------------------------------------------------------------------------
# Exact two-point Bayes risk
# ---------------------------------------------------------------------------

def exact_two_point_bayes_risk(model0: LatentModel, model1: LatentModel,
                               dist_eval: DiscreteDistribution, m: int,
                               delta_prime: float) -> float:
    """Optimal L1 Bayes risk of the uniform two-point prior after m queries.

    Enumerates the m-fold product of the per-query (input, output)
    observation distributions; the optimal estimator of a quantity taking
    values {0, delta_prime} is the posterior median, whose expected absolute
    error on a transcript t is delta_prime * min(posterior masses), so the
    Bayes risk is delta_prime/2 * sum_t min(P0(t), P1(t)).
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    if delta_prime < 0:
        raise DomainError("delta_prime must be >= 0")
    obs0 = observation_distribution(model0, dist_eval)
    obs1 = observation_distribution(model1, dist_eval)
    atom_set = {a for a, p in zip(obs0.atoms, obs0.probs) if p > 0.0}
    atom_set |= {a for a, p in zip(obs1.atoms, obs1.probs) if p > 0.0}
    atoms = tuple(sorted(atom_set, key=repr))
    if len(atoms) ** m > ENUMERATION_GUARD:
        raise SizeError(
            f"transcript enumeration needs {len(atoms)}^{m} atoms (> {ENUMERATION_GUARD})"
        )
    v0 = obs0.as_vector(atoms)
    v1 = obs1.as_vector(atoms)
    p0 = v0.copy()
    p1 = v1.copy()
    for _ in range(m - 1):
        p0 = np.multiply.outer(p0, v0).ravel()
        p1 = np.multiply.outer(p1, v1).ravel()
    return float(delta_prime * 0.5 * np.minimum(p0, p1).sum())


# ---------------------------------------------------------------------------
# Hash-prior Bayes game
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StrategyGameResult:
    """Per-strategy aggregate of the hash-prior game."""

    name: str
    replicates: int
    mean_abs_error: float
    std_abs_error: float
    sem: float
    hit_fraction: float
    mean_estimate: float


def hash_game_fleet(q: int, k: int, ell0: float, ell1: float) -> list:
    """The four-strategy fleet paired with the posterior-median estimator.

    Spans passive (i.i.d. resampling), oblivious (sweep, sampling without
    replacement) and transcript-reactive (hunter) behavior.
    """
    inputs = tuple(range(q))
    eps = k / q
    unsafe_mean = ell0 + eps * (ell1 - ell0)

    def deviates(entry):
        return entry[1] == TRIGGERED_OUTPUT

    estimator = TwoPointPosteriorMedian(ell0, unsafe_mean, deviates)
    uniform = field_distribution(q)
    safe_response = {x: SAFE_OUTPUT for x in inputs}
    return [
        EvaluatorStrategy("iid-resample", IIDResampler(uniform), estimator),
        EvaluatorStrategy("sweep", Sweep(inputs), estimator),
        EvaluatorStrategy("no-replace", UniformWithoutReplacement(inputs), estimator),
        EvaluatorStrategy("hunter", Hunter(inputs, safe_response), estimator),
    ]


def hash_prior_bayes_game(q: int, hash_degree: int, k: int, m_queries: int,
                          strategies: Sequence[EvaluatorStrategy],
                          dist_dep: DiscreteDistribution, seed: int,
                          replicates: int, ell0: float = 0.0, ell1: float = 1.0,
                          csv_path: str | None = None) -> list:
    """Run the Bayes game against the mixed hash prior.

    Each replicate draws the safe model with probability 1/2, otherwise a
    hash-trigger model with uniform polynomial coefficients; every strategy
    then plays its m_queries-episode against the drawn model.  Errors are
    measured against the per-draw true deployment risk
    ell0 + p_dep(h) * (ell1 - ell0), where p_dep(h) is the exact dist_dep
    mass of S_h (the bound itself is stated for the expected gap; the
    per-draw truth is the stricter target).

    Responses are the deterministic arena outputs: the safe arm always
    answers SAFE_OUTPUT and the trigger arm TRIGGERED_OUTPUT.
    """
    if not is_prime(q):
        raise DomainError(f"field modulus {q} is not prime")
    if hash_degree < m_queries:
        raise DomainError(
            "hash degree below the query budget breaks m-wise independence"
        )
    if not (0 <= k <= q):
        raise DomainError(f"trigger count k={k} outside [0, {q}]")
    atoms = tuple(range(q))
    if tuple(dist_dep.atoms) != atoms:
        raise DomainError("dist_dep must be over the field atoms 0..q-1 in order")
    dep_probs = np.asarray(dist_dep.probs, dtype=float)
    # powers[j, x] = x^j mod q; coefficient dot products stay well inside int64
    powers = np.empty((hash_degree, q), dtype=np.int64)
    powers[0] = 1
    xs = np.arange(q, dtype=np.int64)
    for j in range(1, hash_degree):
        powers[j] = (powers[j - 1] * xs) % q
    L = ell1 - ell0

    names = [s.name for s in strategies]
    errors = {n: np.empty(replicates) for n in names}
    estimates = {n: np.empty(replicates) for n in names}
    hits = {n: np.zeros(replicates, dtype=bool) for n in names}
    raw_rows = [] if csv_path else None

    for rep in range(replicates):
        rng = replicate_rng(seed, rep + 1)
        unsafe = rng.random() < 0.5
        if unsafe:
            coeffs = rng.integers(0, q, size=hash_degree).astype(np.int64)
            member = ((coeffs @ powers) % q) < k
            p_dep = float(member @ dep_probs)
        else:
            member = None
            p_dep = 0.0
        true_risk = ell0 + p_dep * L if unsafe else ell0
        for strat in strategies:
            transcript = Transcript(m_queries)
            hit_count = 0
            first_hit = 0
            for i in range(m_queries):
                x = strat.policy.next_query(transcript, rng)
                if not (0 <= x < q):
                    raise DomainError(f"strategy emitted {x!r} outside the field")
                hit = bool(unsafe and member[x])
                if hit:
                    hit_count += 1
                    if first_hit == 0:
                        first_hit = i + 1
                transcript.append(x, TRIGGERED_OUTPUT if hit else SAFE_OUTPUT)
            est = strat.estimator.estimate(transcript)
            err = abs(est - true_risk)
            errors[strat.name][rep] = err
            estimates[strat.name][rep] = est
            hits[strat.name][rep] = hit_count > 0
            if raw_rows is not None:
                raw_rows.append((rep + 1, strat.name, hit_count, first_hit,
                                 est, true_risk, err))

    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["replicate", "strategy", "hit_count", "first_hit",
                             "estimate", "true_risk", "abs_error"])
            writer.writerows(raw_rows)

    results = []
    for name in names:
        e = errors[name]
        std = float(e.std(ddof=1)) if replicates > 1 else 0.0
        results.append(StrategyGameResult(
            name=name,
            replicates=replicates,
            mean_abs_error=float(e.mean()),
            std_abs_error=std,
            sem=std / np.sqrt(replicates) if replicates > 1 else 0.0,
            hit_fraction=float(hits[name].mean()),
            mean_estimate=float(estimates[name].mean()),
        ))
    return results


def prior_only_best_error(q: int, hash_degree: int, k: int,
                          dist_dep: DiscreteDistribution,
                          ell0: float = 0.0, ell1: float = 1.0) -> float:
    """Best achievable L1 error with zero queries, by family enumeration.

    The zero-query posterior equals the prior; the objective
    E|e - R_dep(theta)| is piecewise linear in the estimate e, so the
    minimum over e is attained at one of the attainable risk values.
    """
    from itertools import product as iproduct

    if q**hash_degree > ENUMERATION_GUARD:
        raise SizeError("hash family enumeration guard exceeded")
    dep_probs = np.asarray(dist_dep.as_vector(tuple(range(q))), dtype=float)
    L = ell1 - ell0
    risks = [ell0]  # the safe branch, prior mass 1/2
    weights = [0.5]
    total = q**hash_degree
    for coeffs in iproduct(range(q), repeat=hash_degree):
        mask = np.empty(q, dtype=bool)
        for x in range(q):
            acc = 0
            for a in reversed(coeffs):
                acc = (acc * x + a) % q
            mask[x] = acc < k
        risks.append(ell0 + float(mask @ dep_probs) * L)
        weights.append(0.5 / total)
    risks_arr = np.asarray(risks)
    weights_arr = np.asarray(weights)
    candidates = np.unique(risks_arr)
    objective = [
        float((weights_arr * np.abs(e - risks_arr)).sum()) for e in candidates
    ]
    return min(objective)


# ---------------------------------------------------------------------------
# Transcript indistinguishability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IndistinguishabilityResult:
    ok: bool
    mismatched_replicates: tuple
    no_hit_replicates: int
    hit_replicates: int


def transcript_indistinguishability_check(model0: LatentModel, model_h: LatentModel,
                                          strategy: EvaluatorStrategy, m_queries: int,
                                          seed: int, replicates: int
                                          ) -> IndistinguishabilityResult:
    """Paired runs with shared randomness; no-hit transcripts must be identical.

    Both runs consume one random stream in lockstep: the policy draw is
    replayed from a saved generator state for each side, and the output for
    each side is sampled by inverting its kernel CDF at the same uniform
    variate.  On replicates where no query of the unsafe run lands in its
    trigger set, unobservability forces bit-identical transcripts; a single
    mismatch is a counterexample.
    """
    mismatches = []
    no_hit = 0
    hit = 0
    for rep in range(replicates):
        rng = replicate_rng(seed, rep + 1)
        t0 = Transcript(m_queries)
        th = Transcript(m_queries)
        saw_hit = False
        for _ in range(m_queries):
            state = rng.bit_generator.state
            x0 = strategy.policy.next_query(t0, rng)
            rng.bit_generator.state = state
            xh = strategy.policy.next_query(th, rng)
            u = rng.random()
            y0 = model0.behavior_dist(x0).sample_from_uniform(u)
            yh = model_h.behavior_dist(xh).sample_from_uniform(u)
            saw_hit = saw_hit or model_h.trigger_bit(xh) == 1
            t0.append(x0, y0)
            th.append(xh, yh)
        if saw_hit:
            hit += 1
        else:
            no_hit += 1
            if t0.entries != th.entries:
                mismatches.append(rep + 1)
    return IndistinguishabilityResult(not mismatches, tuple(mismatches), no_hit, hit)
