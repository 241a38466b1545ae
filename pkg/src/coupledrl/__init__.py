"""Expected and distributional RL update rules, coupled on shared sample streams.

Subpackages and modules:

- :mod:`coupledrl.dist_core`: categorical distributions, Cramer distance and projection.
- :mod:`coupledrl.envs`: finite MDPs, classic-control tasks, Fourier features, the sample stream.
- :mod:`coupledrl.tabular`: Bellman operators and tabular sample rules.
- :mod:`coupledrl.linear`: linear value and CDF models with semi-gradient updates.
- :mod:`coupledrl.nonlinear`: sigmoid-CDF counterexample, MLP heads and the lite agents.
- :mod:`coupledrl.harness`: coupled runs and proposition checks.
- :mod:`coupledrl.cli`: the ``coupledrl`` command line.
"""

from .dist_core import (
    Categorical,
    GeneralDiscrete,
    Support,
    cdf_direction,
    cramer_distance,
    cramer_project,
    expectation,
    pmf_cdf_convert,
    pmf_direction,
)
from .harness import run_coupled, verify_proposition

__version__ = "0.1.0"

__all__ = [
    "Categorical", "GeneralDiscrete", "Support", "cdf_direction", "cramer_distance", "cramer_project",
    "expectation", "pmf_cdf_convert", "pmf_direction", "run_coupled", "verify_proposition",
]
