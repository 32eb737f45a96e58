"""Exact total-variation and coupling calculus on finite distributions.

Everything here is computed on explicit probability vectors over a common
(unioned) atom set:

- ``tv_distance``          half L1 distance, equal to the sup over subsets
- ``optimal_coupling``     a joint table whose mismatch probability equals TV
- ``product_tv_exact``     TV between m-fold product distributions by full
                           enumeration of atom tuples
- ``bayes_error``          optimal test error for a uniform two-point prior,
                           (1 - TV)/2 computed as half the min-sum
- ``single_sample_tv``     TV between the output marginals two models induce
                           under a query distribution

The product enumeration is guarded at ``ENUMERATION_GUARD`` joint atoms;
beyond that only the tensorization inequality is available.
"""

from __future__ import annotations

import numpy as np

from triggerlab.core import PROB_TOL, DiscreteDistribution, LatentModel
from triggerlab.errors import SizeError

ENUMERATION_GUARD = 10**7


def union_atoms(p: DiscreteDistribution, q: DiscreteDistribution) -> tuple:
    """Atoms of ``p`` followed by atoms of ``q`` not already present."""
    seen = set(p.atoms)
    return p.atoms + tuple(a for a in q.atoms if a not in seen)


def tv_distance(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Total variation distance, 0.5 * sum_i |p_i - q_i|."""
    atoms = union_atoms(p, q)
    pv = p.as_vector(atoms)
    qv = q.as_vector(atoms)
    return float(0.5 * np.abs(pv - qv).sum())


def tv_from_vectors(pv: np.ndarray, qv: np.ndarray) -> float:
    """TV between two aligned probability vectors."""
    return float(0.5 * np.abs(np.asarray(pv) - np.asarray(qv)).sum())


class Coupling:
    """Joint table over (atom of P, atom of Q) with the given marginals."""

    def __init__(self, row_atoms, col_atoms, joint: np.ndarray):
        joint = np.asarray(joint, dtype=float)
        if joint.shape != (len(row_atoms), len(col_atoms)):
            raise ValueError("joint table shape does not match atom lists")
        if (joint < -PROB_TOL).any():
            raise ValueError("coupling entries must be non-negative")
        self.row_atoms = tuple(row_atoms)
        self.col_atoms = tuple(col_atoms)
        self.joint = joint

    def row_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    def col_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    def mismatch_probability(self) -> float:
        """P[X != Y] under the coupling (atoms compared by label)."""
        col_index = {a: j for j, a in enumerate(self.col_atoms)}
        match = 0.0
        for i, a in enumerate(self.row_atoms):
            j = col_index.get(a)
            if j is not None:
                match += self.joint[i, j]
        return float(1.0 - match)

    def check_marginals(self, p: DiscreteDistribution, q: DiscreteDistribution,
                        tol: float = PROB_TOL) -> bool:
        pv = p.as_vector(self.row_atoms)
        qv = q.as_vector(self.col_atoms)
        return bool(
            np.abs(self.row_marginal() - pv).max() <= tol
            and np.abs(self.col_marginal() - qv).max() <= tol
        )


def optimal_coupling(p: DiscreteDistribution, q: DiscreteDistribution) -> Coupling:
    """A coupling achieving mismatch probability exactly TV(p, q).

    The diagonal carries min(p_i, q_i); the leftover row/column masses are
    matched greedily in atom order (first-fit transport).  Any arrangement of
    the off-diagonal mass yields the same mismatch, so the greedy order is
    chosen purely for determinism.
    """
    atoms = union_atoms(p, q)
    n = len(atoms)
    pv = p.as_vector(atoms)
    qv = q.as_vector(atoms)
    diag = np.minimum(pv, qv)
    joint = np.diag(diag)
    row_left = pv - diag
    col_left = qv - diag
    j = 0
    for i in range(n):
        need = row_left[i]
        while need > PROB_TOL and j < n:
            give = min(need, col_left[j])
            if give > 0:
                joint[i, j] += give
                need -= give
                col_left[j] -= give
            if col_left[j] <= PROB_TOL:
                j += 1
        row_left[i] = need
    return Coupling(atoms, atoms, joint)


def product_tv_exact(p: DiscreteDistribution, q: DiscreteDistribution, m: int) -> float:
    """Exact TV(P^(x)m, Q^(x)m) by full enumeration of m-tuples."""
    if m < 1:
        raise ValueError("m must be >= 1")
    atoms = union_atoms(p, q)
    n = len(atoms)
    if n**m > ENUMERATION_GUARD:
        raise SizeError(
            f"product enumeration needs {n}^{m} = {n**m} joint atoms "
            f"(> {ENUMERATION_GUARD})"
        )
    pv = p.as_vector(atoms)
    qv = q.as_vector(atoms)
    pm = pv.copy()
    qm = qv.copy()
    for _ in range(m - 1):
        pm = np.multiply.outer(pm, pv).ravel()
        qm = np.multiply.outer(qm, qv).ravel()
    return tv_from_vectors(pm, qm)


def bayes_error(p0: DiscreteDistribution, p1: DiscreteDistribution) -> float:
    """Optimal error of a uniform-prior binary test: 0.5 * sum_i min(p_i, q_i)."""
    atoms = union_atoms(p0, p1)
    v0 = p0.as_vector(atoms)
    v1 = p1.as_vector(atoms)
    return float(0.5 * np.minimum(v0, v1).sum())


def observation_distribution(model: LatentModel,
                             dist_eval: DiscreteDistribution) -> DiscreteDistribution:
    """Distribution of one (input, output) observation pair under ``dist_eval``."""
    atoms = []
    probs = []
    for x, px in zip(dist_eval.atoms, dist_eval.probs):
        d = model.behavior_dist(x)
        for y, py in zip(d.atoms, d.probs):
            atoms.append((x, y))
            probs.append(px * py)
    # zero-prob pairs are kept; the union machinery handles them
    return DiscreteDistribution(atoms, probs)


def output_marginal(model: LatentModel,
                    dist_eval: DiscreteDistribution) -> DiscreteDistribution:
    """Marginal distribution of the output atom alone under ``dist_eval``."""
    acc: dict = {}
    for x, px in zip(dist_eval.atoms, dist_eval.probs):
        d = model.behavior_dist(x)
        for y, py in zip(d.atoms, d.probs):
            acc[y] = acc.get(y, 0.0) + px * py
    return DiscreteDistribution(tuple(acc), tuple(acc.values()))


def single_sample_tv(model0: LatentModel, model1: LatentModel,
                     dist_eval: DiscreteDistribution) -> float:
    """Exact TV between the output marginals of two models on one query.

    For unobservable trigger constructions this is at most the trigger mass
    (and at most c * trigger mass under partial distinguishability c).
    """
    return tv_distance(output_marginal(model0, dist_eval),
                       output_marginal(model1, dist_eval))
