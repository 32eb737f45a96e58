"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Tolerances are pinned here exactly as stated: exact-enumeration
checks carry zero tolerance (integer arithmetic where the claim is integer,
1e-12 float policy where sums of floats are compared), Monte Carlo checks
carry 3-sigma margins computed from their replicate counts.
"""

import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest

from oracles import probe_moment_oracle
from triggerlab import bounds, cryptoarena, evaluators, hashfam, probes, tvcalc
from triggerlab.constructions import field_distribution, two_point_instance
from triggerlab.core import DiscreteDistribution
from triggerlab.expcli.config import ExperimentConfig
from triggerlab.expcli.rows import rows_to_csv
from triggerlab.expcli.suites import run_suite
from triggerlab.probes import ProbeSpec
from triggerlab.rngstream import replicate_rng

SEED = 20260810


def _report(num: int, name: str, ok: bool) -> None:
    print(f"\nACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'}")


def test_01_query_complexity():
    """eps=0.001, 1e5 replicates: mean within 2% of 1000; budget tails."""
    eps = 0.001
    replicates = 100000
    inst = two_point_instance(eps, 0.5005, 0.0, 1.0, stochastic=False)
    times, censored = evaluators.first_hit_times(inst.model1, inst.dist_eval,
                                                 SEED, replicates)
    alive = times[~censored]
    mean = float(alive.mean())
    mean_ok = abs(mean - 1000.0) <= 0.02 * 1000.0

    def tail_ok(budget, eta):
        exceed = float(np.mean((times > budget) | censored))
        return exceed <= eta + 3.0 * math.sqrt(eta * (1 - eta) / replicates)

    ok_a = tail_ok(2996, 0.05)
    ok_b = tail_ok(4606, 0.01)
    ok = mean_ok and ok_a and ok_b and censored.sum() <= 2
    _report(1, "query complexity (first-hit mean and tails)", ok)
    assert mean_ok, f"mean {mean} not within 2% of 1000"
    assert ok_a, "P[N > 2996] exceeded 0.05 + 3 sigma"
    assert ok_b, "P[N > 4606] exceeded 0.01 + 3 sigma"
    assert censored.sum() <= 2


def test_02_tensorization():
    """200 random pairs on <= 6 atoms, m in 1..4: zero violations."""
    rng = replicate_rng(SEED, 2)
    violations = 0
    m1_gap = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 7))
        atoms = tuple(f"a{i}" for i in range(n))
        w1 = rng.random(n) + 1e-9
        w2 = rng.random(n) + 1e-9
        p = DiscreteDistribution(atoms, (w1 / w1.sum()).tolist())
        q = DiscreteDistribution(atoms, (w2 / w2.sum()).tolist())
        tv = tvcalc.tv_distance(p, q)
        for m in (1, 2, 3, 4):
            tvm = tvcalc.product_tv_exact(p, q, m)
            if 1.0 - tvm < (1.0 - tv) ** m - 1e-12:
                violations += 1
            if m == 1:
                m1_gap = max(m1_gap, abs(tvm - tv))
    ok = violations == 0 and m1_gap <= 1e-12
    _report(2, "tensorization inequality (exact product enumeration)", ok)
    assert violations == 0
    assert m1_gap <= 1e-12


def test_03_passive_lower_bound():
    """Exact Bayes risk >= (delta L/4)(1-eps)^m on the two-point fleet."""
    violations = 0
    max_formula_gap = 0.0
    fleet = [
        (eps, 0.6, 0.1, 0.9, True) for eps in (0.05, 0.1, 0.2)
    ] + [
        (eps, 0.5, 0.0, 1.0, False) for eps in (0.05, 0.1, 0.2)
    ]
    for eps, delta, ell0, ell1, stochastic in fleet:
        inst = two_point_instance(eps, delta, ell0, ell1, stochastic=stochastic)
        obs0 = tvcalc.observation_distribution(inst.model0, inst.dist_eval)
        obs1 = tvcalc.observation_distribution(inst.model1, inst.dist_eval)
        gap = inst.risk_gap
        for m in range(1, 9):
            risk = evaluators.exact_two_point_bayes_risk(
                inst.model0, inst.model1, inst.dist_eval, m, gap)
            lower = (gap / 4.0) * (1.0 - eps) ** m
            if risk < lower - 1e-12:
                violations += 1
            formula = (gap / 2.0) * (1.0 - tvcalc.product_tv_exact(obs0, obs1, m))
            max_formula_gap = max(max_formula_gap, abs(risk - formula))
    ok = violations == 0 and max_formula_gap <= 1e-10
    _report(3, "passive minimax lower bound (exact Bayes risk fleet)", ok)
    assert violations == 0
    assert max_formula_gap <= 1e-10, f"formula gap {max_formula_gap}"


def test_04_hash_family_exactness():
    """Joint/conditional uniformity and the detection ceiling, integer-exact."""
    joint_ok = True
    for m in (1, 2):
        for tup in permutations(range(5), m):
            joint_ok &= hashfam.joint_uniformity_oracle(5, m, tup)
    rng = replicate_rng(SEED, 4)
    for _ in range(10):
        tup = tuple(rng.choice(7, size=3, replace=False).tolist())
        joint_ok &= hashfam.joint_uniformity_oracle(7, 3, tup)

    cond_ok = True
    ceiling_ok = True
    for k in (1, 2):
        thr = hashfam.TriggerThreshold(k=k, q=5)
        for strat in hashfam.all_distinct_strategies(5, 2):
            cond_ok &= hashfam.conditional_uniformity_oracle(5, 2, thr, strat)
            p = hashfam.detection_probability_exact(5, 2, thr, strat)
            ceiling_ok &= p <= Fraction(2 * k, 5)
    ok = joint_ok and cond_ok and ceiling_ok
    _report(4, "hash family joint/conditional uniformity (zero tolerance)", ok)
    assert joint_ok
    assert cond_ok
    assert ceiling_ok


def test_05_fubini():
    """E_h[trigger mass] = k/q: integer counts exact, float within policy."""
    rng = replicate_rng(SEED, 5)
    count_ok = True
    float_dev = 0.0
    for q in (5, 7):
        for k in (1, 2):
            thr = hashfam.TriggerThreshold(k=k, q=q)
            counts = hashfam.trigger_inclusion_counts(q, 2, thr)
            count_ok &= all(c == k * q for c in counts.values())
            dists = [field_distribution(q),
                     DiscreteDistribution.point_mass(tuple(range(q)),
                                                     int(rng.integers(0, q)))]
            for _ in range(10):
                w = rng.random(q) + 1e-9
                dists.append(field_distribution(q, (w / w.sum()).tolist()))
            for dist in dists:
                val = hashfam.exact_expected_trigger_mass(q, 2, thr, dist)
                float_dev = max(float_dev, abs(val - k / q))
    ok = count_ok and float_dev <= 1e-12
    _report(5, "Fubini expected trigger mass (exact enumeration)", ok)
    assert count_ok, "per-atom inclusion counts deviated from k*q^(m-1)"
    assert float_dev <= 1e-12


def test_06_adaptive_game():
    """q=101, k=1, m=12, L=1, 1e5 replicates: every strategy above the floor;
    paired transcripts bit-identical on every no-hit replicate."""
    q, k, m = 101, 1, 12
    replicates = 100000
    eps = k / q
    fleet = evaluators.hash_game_fleet(q, k, 0.0, 1.0)
    results = evaluators.hash_prior_bayes_game(
        q, m, k, m, fleet, field_distribution(q), SEED, replicates)
    floor = (eps / 4.0) * (1.0 - m * eps)
    game_ok = all(r.mean_abs_error >= floor - 3.0 * r.sem for r in results)

    h = hashfam.sample_hash(q, m, replicate_rng(SEED, 6))
    thr = hashfam.TriggerThreshold(k=k, q=q)
    from triggerlab.constructions import hash_trigger_models

    model0, model_h = hash_trigger_models(h, thr, 0.0, 1.0)
    mismatches = 0
    for strat in fleet:
        res = evaluators.transcript_indistinguishability_check(
            model0, model_h, strat, m, SEED, 2500)
        mismatches += len(res.mismatched_replicates)
    ok = game_ok and mismatches == 0
    _report(6, "adaptive hash-prior game (floor + transcript identity)", ok)
    for r in results:
        assert r.mean_abs_error >= floor - 3.0 * r.sem, (
            f"{r.name}: {r.mean_abs_error} below {floor} - 3*{r.sem}")
    assert mismatches == 0


def test_07_whitebox():
    """Exact unbiasedness by enumeration; coverage across the budget grid."""
    enum_dev = 0.0
    cases = [
        (2, 0.3, 0.2, 0.8, ProbeSpec(0.9, 0.9)),
        (3, 0.5, 0.1, 0.7, ProbeSpec(0.8, 0.7)),
        (4, 0.25, 0.3, 0.9, ProbeSpec(0.95, 0.85)),
    ]
    for m, p, l0, l1, spec in cases:
        mom = probe_moment_oracle(m, p, l0, l1, spec)
        enum_dev = max(enum_dev,
                       abs(mom["E[p_hat]"] - p),
                       abs(mom["E[mass1]"] - p * l1),
                       abs(mom["E[mass0]"] - (1 - p) * l0))
    enum_ok = enum_dev < 1e-12

    replicates = 2000
    coverage_ok = True
    failures = {}
    for gamma in (1.0, 0.8, 0.6):
        for eps_r in (0.1, 0.15):
            for eta in (0.05, 0.1):
                spec = ProbeSpec.symmetric(gamma)
                res = probes.coverage_experiment(
                    0.3, 0.2, 0.8, spec, eps_r, eta, replicates, SEED)
                assert res.m == bounds.whitebox_samples(gamma, eps_r, eta)
                tol = 3.0 * math.sqrt(eta * (1 - eta) / replicates)
                cell_ok = res.failure_rate <= eta + tol
                failures[(gamma, eps_r, eta)] = res.failure_rate
                coverage_ok &= cell_ok
    ok = enum_ok and coverage_ok
    _report(7, "white-box debiasing (exact moments + coverage grid)", ok)
    assert enum_ok, f"enumeration deviation {enum_dev}"
    assert coverage_ok, f"coverage failures: {failures}"


def test_08_crypto_arena():
    """Exact trigger mass, deployment rate 1, guessing rates, breach demo."""
    mass_ok = True
    for n in (4, 8, 10):
        inst = cryptoarena.gen_instance(n, replicate_rng(SEED, n))
        res = cryptoarena.exact_trigger_mass(inst)
        mass_ok &= res.mass == 2.0 ** (-n)

    inst = cryptoarena.gen_instance(8, replicate_rng(SEED, 8))
    rng = replicate_rng(SEED, 88)
    dep_ok = all(
        inst.in_trigger(s.x, s.pi)
        for s in (cryptoarena.sample_deployment(inst, rng) for _ in range(10000))
    )

    replicates = 10000
    game = cryptoarena.evaluator_game(
        inst, cryptoarena.UniformGuessingEvaluator(), 100, SEED, replicates)
    closed = 1.0 - (1.0 - 2.0 ** (-8)) ** 100
    sigma = math.sqrt(closed * (1 - closed) / replicates)
    guess_ok = abs(game.find_rate - closed) <= 3.0 * sigma
    ceiling_ok = game.find_rate <= 100 * 2.0 ** (-8) + 3.0 * sigma

    demo = cryptoarena.forward_oracle_breach_demo(inst, 1, SEED, 1000)
    breach_ok = demo.granted.advantage >= 0.99
    rev_ceiling = 2.0 ** (-8)
    rev_ok = demo.revoked.find_rate <= rev_ceiling + 3.0 * math.sqrt(
        rev_ceiling * (1 - rev_ceiling) / 1000)

    ok = mass_ok and dep_ok and guess_ok and ceiling_ok and breach_ok and rev_ok
    _report(8, "toy trapdoor arena (finite-n ceilings; asymptotics untested)", ok)
    assert mass_ok
    assert dep_ok
    assert guess_ok, f"find rate {game.find_rate} vs {closed} +- 3*{sigma}"
    assert ceiling_ok
    assert breach_ok, f"breach advantage {demo.granted.advantage}"
    assert rev_ok


def test_09_bound_calculators():
    """Named budget values exact; small-exposure flag consistent on a grid."""
    budgets_ok = (bounds.detection_budget(0.001, 0.05) == 2996
                  and bounds.detection_budget(0.001, 0.01) == 4606)
    # deterministic 1000-point grid spanning both validity regions
    deltas = [0.05 + 0.1 * i for i in range(10)]
    gaps = [0.05 + 0.1 * i for i in range(10)]
    exposures = [(0.001, 5), (0.005, 10), (0.01, 10), (0.02, 8), (0.001, 160),
                 (0.05, 4), (0.05, 10), (0.1, 5), (0.02, 100), (0.2, 30)]
    grid_ok = True
    valid_cells = 0
    invalid_cells = 0
    for delta in deltas:
        for L in gaps:
            for eps, m in exposures:
                v = bounds.passive_small_exposure(delta, L, eps, m)
                if v.valid:
                    valid_cells += 1
                    grid_ok &= v.value <= bounds.passive_lower(delta, L, eps, m) + 1e-15
                else:
                    invalid_cells += 1
                    grid_ok &= m * eps > 1.0 / 6.0
    ok = budgets_ok and grid_ok and valid_cells >= 100 and invalid_cells >= 100
    _report(9, "bound calculators (exact budgets + Bernoulli grid)", ok)
    assert budgets_ok
    assert grid_ok
    assert valid_cells >= 100 and invalid_cells >= 100


def test_10_reproducibility():
    """Identical (config, seed) => byte-identical CSV, across suites."""
    configs = [
        ExperimentConfig("passive_bound", 3, 1, {"m_max": 3}),
        ExperimentConfig("lemma_suite", 3, 1, {"random_pairs": 20}),
        ExperimentConfig("query_complexity", 3, 2000, {"epsilon": 0.01}),
        ExperimentConfig("adaptive_game", 3, 300,
                         {"q": 11, "k": 1, "m": 3, "indist_replicates": 50,
                          "indist_queries": 3}),
        ExperimentConfig("whitebox_coverage", 3, 120,
                         {"gamma": 1.0, "epsilon_R": 0.15, "eta": 0.1}),
        ExperimentConfig("crypto_arena", 3, 200,
                         {"n": 6, "m": 20, "deployment_samples": 100,
                          "breach_replicates": 100}),
        ExperimentConfig("regime_report", 3, 1, {}),
    ]
    ok = True
    for cfg in configs:
        a = rows_to_csv(run_suite(cfg))
        b = rows_to_csv(run_suite(cfg))
        ok &= a == b
        assert a == b, f"suite {cfg.experiment} not byte-identical"
    _report(10, "reproducibility (byte-identical CSV)", ok)
    assert ok
