"""Independent sets of bond-percolated hypercubes.

Simulation and exact-computation toolkit: seeded edge percolation of Q_d,
defect-weight sums and their closed-form constants for the hard-core model
at general fugacity, exact partition functions and defect laws at small d,
a weighted birthday problem with Poisson collision diagnostics, and
approximate/exact independent-set samplers.
"""

__version__ = "0.1.0"

from .hypercube import (
    IndependentSet,
    Parity,
    ParitySet,
    PercolationInstance,
    build_percolation,
    closure,
    full_neighborhood,
    is_good,
    is_independent,
    load_instance,
    open_degree,
    open_neighborhood_size,
    save_instance,
    two_linked_components,
)
from .weights import (
    ModelParams,
    PhiPair,
    Regime,
    TheoryConstants,
    clt_statistic,
    cov_theory,
    critical_p,
    critical_statistic,
    moment_theory,
    mu_theory,
    phi_sums,
    sigma_sq_theory,
    theory_constants,
    vertex_weight,
    zeta,
)

__all__ = [
    "__version__",
    "IndependentSet",
    "Parity",
    "ParitySet",
    "PercolationInstance",
    "build_percolation",
    "closure",
    "full_neighborhood",
    "is_good",
    "is_independent",
    "load_instance",
    "open_degree",
    "open_neighborhood_size",
    "save_instance",
    "two_linked_components",
    "ModelParams",
    "PhiPair",
    "Regime",
    "TheoryConstants",
    "clt_statistic",
    "cov_theory",
    "critical_p",
    "critical_statistic",
    "moment_theory",
    "mu_theory",
    "phi_sums",
    "sigma_sq_theory",
    "theory_constants",
    "vertex_weight",
    "zeta",
]
