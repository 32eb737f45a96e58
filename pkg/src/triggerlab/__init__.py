"""triggerlab: a desk-scale lab for latent-trigger evaluation games.

The package builds finite, exactly-enumerable instances of context-conditioned
models (models whose output kernel switches on a hidden binary trigger),
runs passive / adaptive / white-box / toy-trapdoor evaluator games against
them, and checks every closed-form risk bound against exact enumeration or
seeded Monte Carlo estimates.

Subpackages and modules:

- ``core``         domain types (distributions, models, risk parameters) and
                   exact structural checks
- ``tvcalc``       total variation, optimal couplings, product-distribution
                   enumeration, Bayes error
- ``hashfam``      degree-(m-1) polynomial hash families over prime fields and
                   their exact uniformity oracles
- ``evaluators``   transcript-based evaluator games and Bayes-risk machinery
- ``bounds``       closed-form bound calculators used as reference curves
- ``probes``       white-box probe simulation and debiased risk estimators
- ``cryptoarena``  toy keyed-bijection trapdoor arena (no security claims)
- ``expcli``       experiment suites, config parsing, CSV/SVG emission, CLI
"""

__version__ = "0.1.0"

from triggerlab.core import DiscreteDistribution, LatentModel, RiskParams

__all__ = ["DiscreteDistribution", "LatentModel", "RiskParams", "__version__"]
