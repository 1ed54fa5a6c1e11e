"""Maximum-entropy inference over invariant states of classical and quantum event lattices."""
from .errors import Infeasible, MaxEntError, MaxIterations
from .events import Event, EventSpace, State, expectation, prob, validate_state
from .entropy import measurement_entropy, shannon, von_neumann
from .maxent import (Constraint, Problem, Solution, SolverOptions, feasibility_check, linear_event,
                     linear_inequality, moment, solve, solve_general, solve_linear, symmetry_reduce,
                     variance_saturation)
from .symmetry import GroupSpec, invariant_basis, is_invariant, twirl, twirl_observable

__version__ = "0.1.0"
