"""Independent oracles used to freeze expected values in the tests.

Each oracle recomputes a quantity by a route disjoint from the library
implementation it checks: exhaustive sup-over-subsets for TV, explicit
transcript enumeration with endpoint-minimized estimators for the Bayes
risk, and full outcome-space enumeration for probe estimator moments.
"""

from __future__ import annotations

from itertools import combinations, product

from triggerlab.core import DiscreteDistribution, LatentModel
from triggerlab.probes import ProbeSpec, debias_loss_masses, debias_prevalence


def tv_by_subset_sup(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """sup_A |P(A) - Q(A)| by enumerating every subset of the union support."""
    atoms = list(dict.fromkeys(list(p.atoms) + list(q.atoms)))
    assert len(atoms) <= 16, "subset enumeration oracle limited to 16 atoms"
    best = 0.0
    for r in range(len(atoms) + 1):
        for subset in combinations(atoms, r):
            pa = sum(p.prob(a) for a in subset)
            qa = sum(q.prob(a) for a in subset)
            best = max(best, abs(pa - qa))
    return best


def observation_probs(model: LatentModel, dist_eval: DiscreteDistribution) -> dict:
    """Exact per-query (input, output) observation probabilities."""
    out: dict = {}
    for x, px in zip(dist_eval.atoms, dist_eval.probs):
        d = model.behavior_dist(x)
        for y, py in zip(d.atoms, d.probs):
            if px * py > 0.0:
                out[(x, y)] = out.get((x, y), 0.0) + px * py
    return out


def bayes_risk_transcript_oracle(model0: LatentModel, model1: LatentModel,
                                 dist_eval: DiscreteDistribution, m: int,
                                 delta_prime: float) -> float:
    """Optimal two-point L1 Bayes risk by explicit transcript enumeration.

    For each m-tuple transcript the expected absolute error of a constant
    estimate e is piecewise linear in e with kinks only at the two risk
    values, so the per-transcript optimum is attained at an endpoint; the
    oracle takes the better endpoint explicitly instead of using the
    min-sum identity.
    """
    obs0 = observation_probs(model0, dist_eval)
    obs1 = observation_probs(model1, dist_eval)
    atoms = sorted(set(obs0) | set(obs1), key=repr)
    total = 0.0
    for transcript in product(atoms, repeat=m):
        p0 = 1.0
        p1 = 1.0
        for a in transcript:
            p0 *= obs0.get(a, 0.0)
            p1 *= obs1.get(a, 0.0)
        weight = 0.5 * p0 + 0.5 * p1
        if weight == 0.0:
            continue
        w0 = 0.5 * p0 / weight
        w1 = 0.5 * p1 / weight
        err_low = w1 * delta_prime   # estimate 0
        err_high = w0 * delta_prime  # estimate delta_prime
        total += weight * min(err_low, err_high)
    return total


def probe_moment_oracle(m: int, p: float, l0: float, l1: float,
                        spec: ProbeSpec) -> dict:
    """Exact estimator moments by full enumeration of the m-sample space.

    Each sample outcome is (z, b, v) with z ~ Bernoulli(p), probe bit b
    given z by the accuracy pair, and a binary loss v ~ Bernoulli(ell_z).
    Loss-partition moments are conditional on the partition being nonempty
    (the estimator is undefined otherwise); the prevalence and mass moments
    are unconditional.
    """
    single = []
    for z in (0, 1):
        pz = p if z == 1 else 1.0 - p
        for b in (0, 1):
            pb = (spec.alpha1 if b == 1 else 1.0 - spec.alpha1) if z == 1 else \
                 (1.0 - spec.alpha0 if b == 1 else spec.alpha0)
            for v in (0, 1):
                lz = l1 if z == 1 else l0
                pv = lz if v == 1 else 1.0 - lz
                prob = pz * pb * pv
                if prob > 0.0:
                    single.append((prob, b, v))

    e_qhat = 0.0
    e_phat = 0.0
    e_mass1 = 0.0
    e_mass0 = 0.0
    e_l1_naive = 0.0
    mass_l1_naive = 0.0
    e_l0_naive = 0.0
    mass_l0_naive = 0.0
    for outcome in product(single, repeat=m):
        prob = 1.0
        n1 = 0
        sum1 = 0.0
        sum0 = 0.0
        for w, b, v in outcome:
            prob *= w
            if b == 1:
                n1 += 1
                sum1 += v
            else:
                sum0 += v
        n0 = m - n1
        q_hat = n1 / m
        e_qhat += prob * q_hat
        e_phat += prob * debias_prevalence(q_hat, spec)
        l1n = sum1 / n1 if n1 else None
        l0n = sum0 / n0 if n0 else None
        mass1, mass0 = debias_loss_masses(l1n, l0n, q_hat, spec)
        e_mass1 += prob * mass1
        e_mass0 += prob * mass0
        if n1:
            e_l1_naive += prob * l1n
            mass_l1_naive += prob
        if n0:
            e_l0_naive += prob * l0n
            mass_l0_naive += prob
    return {
        "E[q_hat]": e_qhat,
        "E[p_hat]": e_phat,
        "E[mass1]": e_mass1,
        "E[mass0]": e_mass0,
        "E[l1_naive | n1>0]": e_l1_naive / mass_l1_naive,
        "E[l0_naive | n0>0]": e_l0_naive / mass_l0_naive,
    }


def naive_mixture_means(p: float, l0: float, l1: float, spec: ProbeSpec) -> tuple:
    """Population mixture means of the partition-conditional naive estimators."""
    a = spec.alpha1 * p
    b = (1.0 - spec.alpha0) * (1.0 - p)
    c = (1.0 - spec.alpha1) * p
    d = spec.alpha0 * (1.0 - p)
    mu1 = (a * l1 + b * l0) / (a + b)
    mu0 = (c * l1 + d * l0) / (c + d)
    return mu1, mu0, a + b
