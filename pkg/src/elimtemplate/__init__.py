"""Automatic generator of polynomial-system solvers based on elimination templates."""

from .problems import REGISTRY, ProblemSpec, get_problem
from .solver import DegenerateInstanceError, NumericFailure, SolutionSet, solve
from .template import (GeneratorOptions, SolverTemplate, deserialize, generate_template,
                       reduce_triangular, serialize)

__all__ = [
    "REGISTRY", "ProblemSpec", "get_problem", "DegenerateInstanceError", "NumericFailure",
    "SolutionSet", "solve", "GeneratorOptions", "SolverTemplate", "deserialize",
    "generate_template", "reduce_triangular", "serialize",
]
