"""Adaptive Galerkin solver with shallow neural-network basis functions.

Trains one shallow network at a time to maximize a normalized weak residual,
energy-normalizes it into a growing Galerkin basis, and solves symmetric
coercive variational problems on that basis.  The residual maximum doubles as
an a-posteriori error estimator.
"""

from galnn.driver import (
    Schedules,
    SolverState,
    default_schedules,
    evaluate_solution,
    run_adaptive,
    stagnation_study,
)
from galnn.forms import VariationalProblem, build_problem, problem_catalog
from galnn.network import ShallowNetwork
from galnn.quadrature import QuadratureRule, gauss_legendre, gauss_lobatto
from galnn.training import augment_basis

__version__ = "0.1.0"

__all__ = [
    "QuadratureRule",
    "Schedules",
    "ShallowNetwork",
    "SolverState",
    "VariationalProblem",
    "augment_basis",
    "build_problem",
    "default_schedules",
    "evaluate_solution",
    "gauss_legendre",
    "gauss_lobatto",
    "problem_catalog",
    "run_adaptive",
    "stagnation_study",
]
