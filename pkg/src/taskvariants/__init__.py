"""Multi-robot task allocation with task variants: flattening and greedy solvers."""

from .flatten import ConflictOracle, FlatProblem, FlatTask, conflict_set, conflicts, flatten, prune
from .generate import GenParams, generate, motivating_example
from .model import (
    Assignment,
    Coalition,
    CostModel,
    InvalidInputError,
    Problem,
    Robot,
    Solution,
    Task,
    TaskConfiguration,
    assignment_utility,
    enumerate_assignments,
    enumerate_coalitions,
    satisfies,
    validate_solution,
)
from .solvers import (
    BoundReport,
    OracleBudgetExceeded,
    SolverResult,
    bound_report,
    solve_exact,
    solve_flat_max_util,
    solve_flat_rc,
    solve_flat_rca,
    solve_random_config,
    upper_bound,
)

__version__ = "0.1.0"
