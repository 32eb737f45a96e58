"""Named experiment suites mapping onto the verification targets.

Each suite takes an ``ExperimentConfig`` and returns deterministic
``ResultRow`` lists: identical (config, seed) pairs produce byte-identical
CSV.  Every suite emits at least one bound-comparison row with an explicit
pass/fail flag; Monte Carlo comparisons carry a 3-sigma margin computed
from the replicate count in the ``tolerance`` column.
"""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np

from triggerlab import bounds, cryptoarena, evaluators, hashfam, probes, tvcalc
from triggerlab.constructions import (
    field_distribution,
    hash_trigger_models,
    two_point_instance,
)
from triggerlab.core import (
    DiscreteDistribution,
    parse_distribution,
    parse_model,
    trigger_mass,
)
from triggerlab.errors import ConfigError
from triggerlab.expcli.config import ExperimentConfig
from triggerlab.expcli.rows import ResultRow, params_echo
from triggerlab.rngstream import SUITE_STREAM, replicate_rng

PLOT_X = {
    "passive_bound": "m",
    "adaptive_game": "m",
    "query_complexity": "epsilon",
    "whitebox_coverage": "gamma",
    "crypto_arena": "n",
    "regime_report": "m",
    "lemma_suite": "q",
}


def run_suite(cfg: ExperimentConfig) -> list:
    runner = _RUNNERS.get(cfg.experiment)
    if runner is None:
        raise ConfigError(f"unknown suite {cfg.experiment!r}")
    return runner(cfg)


def _sigma3_rate(p: float, n: int) -> float:
    """3-sigma binomial margin for an empirical rate compared at level p."""
    p = min(max(p, 0.0), 1.0)
    return 3.0 * math.sqrt(p * (1.0 - p) / n)


def _row(cfg, metric, value, bound=None, tolerance=None, passed=None,
         extra_params=None, replicate="agg"):
    params = dict(cfg.params)
    if extra_params:
        params.update(extra_params)
    return ResultRow(cfg.experiment, cfg.seed, replicate, params_echo(params),
                     metric, value, bound, tolerance, passed)


# ---------------------------------------------------------------------------
# passive_bound
# ---------------------------------------------------------------------------

def run_passive_bound(cfg: ExperimentConfig) -> list:
    p = cfg.params
    if p["model0_fixture"]:
        model0 = parse_model(_read(p["model0_fixture"]))
        model1 = parse_model(_read(p["model1_fixture"]))
        dist_eval = parse_distribution(_read(p["dist_eval_fixture"]))
        delta_prime = p["delta_prime"]
        if delta_prime <= 0:
            raise ConfigError("fixture mode needs delta_prime > 0")
    else:
        inst = two_point_instance(p["epsilon"], p["delta"], p["ell0"], p["ell1"],
                                  stochastic=p["stochastic"])
        model0, model1, dist_eval = inst.model0, inst.model1, inst.dist_eval
        delta_prime = inst.risk_gap
    eps = trigger_mass(model1, dist_eval)
    obs0 = tvcalc.observation_distribution(model0, dist_eval)
    obs1 = tvcalc.observation_distribution(model1, dist_eval)
    support = {a for a, pr in zip(obs0.atoms, obs0.probs) if pr > 0.0}
    support |= {a for a, pr in zip(obs1.atoms, obs1.probs) if pr > 0.0}
    tv_single = tvcalc.tv_distance(obs0, obs1)
    rows = []
    for m in range(1, p["m_max"] + 1):
        lower = (delta_prime / 4.0) * (1.0 - eps) ** m
        extra = {"m": m}
        if len(support) ** m <= tvcalc.ENUMERATION_GUARD:
            risk = evaluators.exact_two_point_bayes_risk(model0, model1,
                                                         dist_eval, m, delta_prime)
            formula = (delta_prime / 2.0) * (
                1.0 - tvcalc.product_tv_exact(obs0, obs1, m))
            rows.append(_row(cfg, "bayes_l1_risk", risk, lower, 1e-12,
                             risk >= lower - 1e-12, extra))
            gap = abs(risk - formula)
            rows.append(_row(cfg, "bayes_vs_formula_gap", gap, 1e-10, 0.0,
                             gap <= 1e-10, extra))
        else:
            # beyond the enumeration guard only the tensorization envelope
            # (delta'/2)(1 - tv)^m certifies the risk from below
            envelope = (delta_prime / 2.0) * (1.0 - tv_single) ** m
            rows.append(_row(cfg, "bayes_l1_risk_envelope", envelope, lower,
                             1e-12, envelope >= lower - 1e-12, extra))
    return rows


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


# ---------------------------------------------------------------------------
# adaptive_game
# ---------------------------------------------------------------------------

def run_adaptive_game(cfg: ExperimentConfig) -> list:
    p = cfg.params
    q, k, m = p["q"], p["k"], p["m"]
    degree = p["degree"] or m
    ell0, ell1 = p["ell0"], p["ell1"]
    eps = k / q
    loss_gap = abs(ell1 - ell0)
    fleet = evaluators.hash_game_fleet(q, k, ell0, ell1)
    results = evaluators.hash_prior_bayes_game(
        q, degree, k, m, fleet, field_distribution(q), cfg.seed, cfg.replicates,
        ell0=ell0, ell1=ell1,
    )
    lower = bounds.adaptive_lower(eps, loss_gap, m)
    headline_valid = m * eps <= 1.0 / 8.0
    headline = 7.0 * eps * loss_gap / 32.0
    rows = []
    for res in results:
        tol = 3.0 * res.sem
        rows.append(_row(cfg, f"mean_abs_error:{res.name}", res.mean_abs_error,
                         lower, tol, res.mean_abs_error >= lower - tol))
        if headline_valid:
            rows.append(_row(cfg, f"headline_check:{res.name}", res.mean_abs_error,
                             headline, tol, res.mean_abs_error >= headline - tol))
        rows.append(_row(cfg, f"hit_fraction:{res.name}", res.hit_fraction,
                         m * eps, _sigma3_rate(m * eps, cfg.replicates),
                         res.hit_fraction <= m * eps
                         + _sigma3_rate(m * eps, cfg.replicates)))

    suite_rng = replicate_rng(cfg.seed, SUITE_STREAM)
    h = hashfam.sample_hash(q, degree, suite_rng)
    thr = hashfam.TriggerThreshold(k=k, q=q)
    model0, model_h = hash_trigger_models(h, thr, ell0, ell1, stochastic_safe=True)
    for strat in fleet:
        res = evaluators.transcript_indistinguishability_check(
            model0, model_h, strat, p["indist_queries"], cfg.seed,
            p["indist_replicates"],
        )
        rows.append(_row(cfg, f"indist_mismatches:{strat.name}",
                         float(len(res.mismatched_replicates)), 0.0, 0.0, res.ok))
    return rows


# ---------------------------------------------------------------------------
# query_complexity
# ---------------------------------------------------------------------------

def run_query_complexity(cfg: ExperimentConfig) -> list:
    p = cfg.params
    eps = p["epsilon"]
    inst = two_point_instance(eps, (1.0 + eps) / 2.0, 0.0, 1.0, stochastic=False)
    times, censored = evaluators.first_hit_times(inst.model1, inst.dist_eval,
                                                 cfg.seed, cfg.replicates)
    alive = times[~censored]
    mean = float(alive.mean())
    sem = float(alive.std(ddof=1) / math.sqrt(alive.size))
    rows = [
        _row(cfg, "mean_first_hit", mean, 1.0 / eps, 3.0 * sem,
             abs(mean - 1.0 / eps) <= 3.0 * sem),
        _row(cfg, "censored_count", float(censored.sum())),
    ]
    for label, eta in (("a", p["eta_a"]), ("b", p["eta_b"])):
        budget = bounds.detection_budget(eps, eta)
        exceed = float(np.mean((times > budget) | censored))
        tol = _sigma3_rate(eta, cfg.replicates)
        rows.append(_row(cfg, f"tail_exceed_eta_{label}", exceed, eta, tol,
                         exceed <= eta + tol, {"budget": int(budget)}))
    return rows


# ---------------------------------------------------------------------------
# whitebox_coverage
# ---------------------------------------------------------------------------

def run_whitebox_coverage(cfg: ExperimentConfig) -> list:
    p = cfg.params
    spec = probes.ProbeSpec.symmetric(p["gamma"])
    res = probes.coverage_experiment(p["p"], p["ell0"], p["ell1"], spec,
                                     p["epsilon_R"], p["eta"], cfg.replicates,
                                     cfg.seed, loss_mode=p["loss_mode"])
    tol = _sigma3_rate(p["eta"], cfg.replicates)
    return [
        _row(cfg, "failure_rate", res.failure_rate, p["eta"], tol,
             res.failure_rate <= p["eta"] + tol),
        _row(cfg, "sample_budget", float(res.m)),
        _row(cfg, "undefined_replicates", float(res.undefined)),
    ]


# ---------------------------------------------------------------------------
# crypto_arena
# ---------------------------------------------------------------------------

def run_crypto_arena(cfg: ExperimentConfig) -> list:
    p = cfg.params
    n, m = p["n"], p["m"]
    instance = cryptoarena.gen_instance(n, replicate_rng(cfg.seed, SUITE_STREAM))
    rows = []
    # the toy identifies the security parameter with the input width
    rows.append(_row(cfg, "security_parameter_lambda", float(n)))
    if n <= 16:
        ok = cryptoarena.verify_bijection(instance)
        rows.append(_row(cfg, "bijection_ok", 1.0 if ok else 0.0, 1.0, 0.0, ok))
    if n <= cryptoarena.ENUMERATE_MAX_N:
        exact = cryptoarena.exact_trigger_mass(instance)
        target = 2.0 ** (-n)
        rows.append(_row(cfg, "exact_trigger_mass", exact.mass, target, 0.0,
                         exact.mass == target))
    dep_rng = replicate_rng(cfg.seed, 1)
    dep_hits = sum(
        instance.in_trigger(s.x, s.pi)
        for s in (cryptoarena.sample_deployment(instance, dep_rng)
                  for _ in range(p["deployment_samples"]))
    )
    dep_rate = dep_hits / p["deployment_samples"]
    rows.append(_row(cfg, "deployment_trigger_rate", dep_rate, 1.0, 0.0,
                     dep_rate == 1.0))

    game = cryptoarena.evaluator_game(
        instance, cryptoarena.UniformGuessingEvaluator(), m, cfg.seed, cfg.replicates
    )
    closed = 1.0 - (1.0 - 2.0 ** (-n)) ** m
    tol = _sigma3_rate(closed, cfg.replicates)
    rows.append(_row(cfg, "guessing_find_rate", game.find_rate, closed, tol,
                     abs(game.find_rate - closed) <= tol))
    ceiling = m * 2.0 ** (-n)
    rows.append(_row(cfg, "guessing_ceiling", game.find_rate, ceiling, tol,
                     game.find_rate <= ceiling + tol))
    rows.append(_row(cfg, "guessing_advantage", game.advantage))

    demo = cryptoarena.forward_oracle_breach_demo(instance, max(m, 1), cfg.seed,
                                                  p["breach_replicates"])
    rows.append(_row(cfg, "breach_advantage", demo.granted.advantage, 0.99, 0.0,
                     demo.granted.advantage >= 0.99))
    rev_tol = _sigma3_rate(min(ceiling, 1.0), p["breach_replicates"])
    rows.append(_row(cfg, "revoked_find_rate", demo.revoked.find_rate, ceiling,
                     rev_tol, demo.revoked.find_rate <= ceiling + rev_tol))
    return rows


# ---------------------------------------------------------------------------
# regime_report
# ---------------------------------------------------------------------------

REGIME_BLIND = "statistically-blind"
REGIME_TRANSITION = "transition"
REGIME_DETECTION = "detection-possible"


def classify_regime(m: int, epsilon: float) -> str:
    """Exposure-based regime: blind when m*eps <= 1/6, detection when >= 1."""
    exposure = m * epsilon
    if exposure <= 1.0 / 6.0:
        return REGIME_BLIND
    if exposure >= 1.0:
        return REGIME_DETECTION
    return REGIME_TRANSITION


def run_regime_report(cfg: ExperimentConfig) -> list:
    p = cfg.params
    eps, delta, m = p["epsilon"], p["delta"], p["m"]
    if delta <= eps:
        raise ConfigError(f"regime report needs delta > epsilon, got "
                          f"delta={delta}, epsilon={eps}")
    loss_gap = abs(p["ell1"] - p["ell0"])
    regime = classify_regime(m, eps)
    small = bounds.passive_small_exposure(delta, loss_gap, eps, m)
    rows = [
        _row(cfg, "exposure_m_epsilon", m * eps),
        _row(cfg, f"regime[{regime}]",
             float((REGIME_BLIND, REGIME_TRANSITION, REGIME_DETECTION).index(regime))),
        _row(cfg, "passive_lower", bounds.passive_lower(delta, loss_gap, eps, m)),
        _row(cfg, "passive_small_exposure", small.value),
        _row(cfg, "passive_small_exposure_valid", 1.0 if small.valid else 0.0),
        _row(cfg, "adaptive_lower", bounds.adaptive_lower(eps, loss_gap, m)),
        _row(cfg, "detection_budget_eta", bounds.detection_budget(eps, p["eta"])),
        _row(cfg, "whitebox_samples",
             float(bounds.whitebox_samples(p["gamma"], p["epsilon_R"], p["eta"]))),
    ]
    # consistency flags: the adaptive floor never exceeds the passive one
    # (delta >= epsilon here), and the specialized floor never exceeds the
    # general one on its validity region
    adaptive = bounds.adaptive_lower(eps, loss_gap, m)
    passive = bounds.passive_lower(delta, loss_gap, eps, m)
    rows.append(_row(cfg, "adaptive_leq_passive", adaptive, passive, 1e-15,
                     adaptive <= passive + 1e-15))
    if small.valid:
        rows.append(_row(cfg, "small_exposure_consistent", small.value, passive,
                         1e-12, small.value <= passive + 1e-12))
    return rows


def regime_report_text(cfg: ExperimentConfig) -> str:
    """Human-readable regime summary printed by the CLI."""
    p = cfg.params
    eps, delta, m = p["epsilon"], p["delta"], p["m"]
    loss_gap = abs(p["ell1"] - p["ell0"])
    regime = classify_regime(m, eps)
    small = bounds.passive_small_exposure(delta, loss_gap, eps, m)
    lines = [
        f"regime report: m={m}, epsilon={eps}, exposure m*eps={m * eps:.6g}",
        f"  regime: {regime}",
        f"  passive error floor   >= {bounds.passive_lower(delta, loss_gap, eps, m):.6g}",
        f"  small-exposure floor  >= {small.value:.6g}"
        f" ({'valid: m*eps <= 1/6' if small.valid else 'not valid: m*eps > 1/6'})",
        f"  adaptive error floor  >= {bounds.adaptive_lower(eps, loss_gap, m):.6g}",
        f"  detection budget (eta={p['eta']}): "
        f"{bounds.detection_budget(eps, p['eta']):.0f} queries",
        f"  white-box budget (gamma={p['gamma']}, eps_R={p['epsilon_R']}, "
        f"eta={p['eta']}): {bounds.whitebox_samples(p['gamma'], p['epsilon_R'], p['eta'])}"
        " samples per pool",
        "  computationally bounded evaluators without the deployment trapdoor"
        " stay blind at any query budget (toy arena, no asymptotic claim).",
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# lemma_suite
# ---------------------------------------------------------------------------

def run_lemma_suite(cfg: ExperimentConfig) -> list:
    p = cfg.params
    q, m, k = p["q"], p["m"], p["k"]
    q_large, m_large = p["q_large"], p["m_large"]
    thr = hashfam.TriggerThreshold(k=k, q=q)
    suite_rng = replicate_rng(cfg.seed, SUITE_STREAM)
    rows = []

    for mm in range(1, m + 1):
        violations = sum(
            not hashfam.joint_uniformity_oracle(q, mm, tup)
            for tup in permutations(range(q), mm)
        )
        rows.append(_row(cfg, f"joint_uniformity_violations:m{mm}",
                         float(violations), 0.0, 0.0, violations == 0,
                         {"tuples": _n_perm(q, mm)}))

    sampled = [tuple(suite_rng.choice(q_large, size=m_large, replace=False).tolist())
               for _ in range(10)]
    violations = sum(
        not hashfam.joint_uniformity_oracle(q_large, m_large, tup) for tup in sampled
    )
    rows.append(_row(cfg, "joint_uniformity_violations:large", float(violations),
                     0.0, 0.0, violations == 0,
                     {"q": q_large, "m": m_large, "tuples": len(sampled)}))

    marg_violations = 0
    for x in range(q):
        counts = hashfam.marginal_uniformity_counts(q, m, x)
        if any(c != q ** (m - 1) for c in counts.values()):
            marg_violations += 1
    rows.append(_row(cfg, "marginal_uniformity_violations", float(marg_violations),
                     0.0, 0.0, marg_violations == 0))

    cond_violations = 0
    union_violations = 0
    n_strategies = 0
    for strat in hashfam.all_distinct_strategies(q, min(m, 2)):
        n_strategies += 1
        if not hashfam.conditional_uniformity_oracle(q, m, thr, strat):
            cond_violations += 1
        if hashfam.detection_probability_exact(q, m, thr, strat) > \
                _frac(strat.depth * k, q):
            union_violations += 1
    rows.append(_row(cfg, "conditional_uniformity_violations", float(cond_violations),
                     0.0, 0.0, cond_violations == 0, {"strategies": n_strategies}))
    rows.append(_row(cfg, "union_bound_violations", float(union_violations),
                     0.0, 0.0, union_violations == 0, {"strategies": n_strategies}))

    thr_large = hashfam.TriggerThreshold(k=k, q=q_large)
    rand_cond_violations = 0
    for _ in range(100):
        strat = hashfam.random_distinct_strategy(q_large, m_large, suite_rng)
        if not hashfam.conditional_uniformity_oracle(q_large, m_large, thr_large, strat):
            rand_cond_violations += 1
    rows.append(_row(cfg, "conditional_uniformity_violations:large",
                     float(rand_cond_violations), 0.0, 0.0,
                     rand_cond_violations == 0,
                     {"q": q_large, "m": m_large, "strategies": 100}))

    fubini_int_violations = 0
    fubini_float_dev = 0.0
    for qq, mm in ((q, m), (q_large, 2)):
        thr_q = hashfam.TriggerThreshold(k=k, q=qq)
        counts = hashfam.trigger_inclusion_counts(qq, mm, thr_q)
        if any(c != k * qq ** (mm - 1) for c in counts.values()):
            fubini_int_violations += 1
        dists = [field_distribution(qq),
                 DiscreteDistribution.point_mass(tuple(range(qq)),
                                                 int(suite_rng.integers(0, qq)))]
        for _ in range(10):
            w = suite_rng.random(qq) + 1e-9
            dists.append(field_distribution(qq, (w / w.sum()).tolist()))
        for dist in dists:
            val = hashfam.exact_expected_trigger_mass(qq, mm, thr_q, dist)
            fubini_float_dev = max(fubini_float_dev, abs(val - k / qq))
    rows.append(_row(cfg, "fubini_count_violations", float(fubini_int_violations),
                     0.0, 0.0, fubini_int_violations == 0))
    rows.append(_row(cfg, "fubini_float_deviation", fubini_float_dev, 1e-12, 0.0,
                     fubini_float_dev <= 1e-12))

    tens_violations = 0
    m1_gap = 0.0
    coupling_dev = 0.0
    bayes_dev = 0.0
    for _ in range(p["random_pairs"]):
        pd, qd = _random_pair(suite_rng, p["max_atoms"])
        tv = tvcalc.tv_distance(pd, qd)
        for mm in range(1, 5):
            tvm = tvcalc.product_tv_exact(pd, qd, mm)
            if 1.0 - tvm < (1.0 - tv) ** mm - 1e-12:
                tens_violations += 1
            if mm == 1:
                m1_gap = max(m1_gap, abs(tvm - tv))
        coupling = tvcalc.optimal_coupling(pd, qd)
        coupling_dev = max(coupling_dev, abs(coupling.mismatch_probability() - tv))
        bayes_dev = max(bayes_dev,
                        abs(tvcalc.bayes_error(pd, qd) - 0.5 * (1.0 - tv)))
    rows.append(_row(cfg, "tensorization_violations", float(tens_violations),
                     0.0, 0.0, tens_violations == 0,
                     {"pairs": p["random_pairs"]}))
    rows.append(_row(cfg, "tensorization_m1_gap", m1_gap, 1e-12, 0.0,
                     m1_gap <= 1e-12))
    rows.append(_row(cfg, "coupling_mismatch_deviation", coupling_dev, 1e-12, 0.0,
                     coupling_dev <= 1e-12))
    rows.append(_row(cfg, "bayes_identity_deviation", bayes_dev, 1e-12, 0.0,
                     bayes_dev <= 1e-12))
    return rows


def _random_pair(rng: np.random.Generator, max_atoms: int):
    n = int(rng.integers(2, max_atoms + 1))
    atoms = tuple(f"a{i}" for i in range(n))
    w1 = rng.random(n) + 1e-9
    w2 = rng.random(n) + 1e-9
    return (DiscreteDistribution(atoms, (w1 / w1.sum()).tolist()),
            DiscreteDistribution(atoms, (w2 / w2.sum()).tolist()))


def _n_perm(q: int, m: int) -> int:
    out = 1
    for i in range(m):
        out *= q - i
    return out


def _frac(num: int, den: int):
    from fractions import Fraction

    return Fraction(num, den)


_RUNNERS = {
    "passive_bound": run_passive_bound,
    "adaptive_game": run_adaptive_game,
    "query_complexity": run_query_complexity,
    "whitebox_coverage": run_whitebox_coverage,
    "crypto_arena": run_crypto_arena,
    "regime_report": run_regime_report,
    "lemma_suite": run_lemma_suite,
}
