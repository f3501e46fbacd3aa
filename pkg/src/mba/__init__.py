"""Multi-level bottleneck assignment: exact, greedy and column generation solvers."""
from .instance import (FORMAT, GENERATOR_VERSION, InfeasibleInstanceError,
                       InfeasibleSolutionError, InstanceValidationError, MbaInstance,
                       MbaSolution, ParseError, SolveReport, Status, check_solution,
                       generate_random, objective, read_instance, read_solution,
                       tuple_weights, validate, write_instance, write_solution)
from .matching import BipartiteProblem, NoPerfectMatchingError, bottleneck_assignment
from .exact import brute_force, min_completion, solve_exact, solve_window
from .greedy import greedy_lookahead, greedy_post, greedy_standard, post_optimize
from .colgen import colgen_solve

__all__ = [
    "FORMAT", "GENERATOR_VERSION", "InfeasibleInstanceError", "InfeasibleSolutionError",
    "InstanceValidationError", "MbaInstance", "MbaSolution", "ParseError", "SolveReport",
    "Status", "check_solution", "generate_random", "objective", "read_instance",
    "read_solution", "tuple_weights", "validate", "write_instance", "write_solution",
    "BipartiteProblem", "NoPerfectMatchingError", "bottleneck_assignment",
    "brute_force", "min_completion", "solve_exact", "solve_window",
    "greedy_lookahead", "greedy_post", "greedy_standard", "post_optimize", "colgen_solve",
]
